#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace dfsq {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

enum class Axis { x, y, z };

// Ordered set of spin-1/2 sites. Site k is bit k of the amplitude index
// (first label = least significant). Bit value 0 is spin up (sigma_z = +1).
class SpinRegister {
 public:
  explicit SpinRegister(std::vector<std::string> labels);

  int size() const { return static_cast<int>(labels_.size()); }
  Eigen::Index dim() const { return Eigen::Index{1} << size(); }
  int index(const std::string& label) const;
  bool contains(const std::string& label) const;
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
};

Mat pauli_site(const SpinRegister& reg, const std::string& site, Axis axis);

// s_i . s_j with Pauli matrices; eigenvalues -3 (singlet) and +1 (triplet).
Mat pauli_dot(const SpinRegister& reg, const std::string& i, const std::string& j);

// (sum_i sigma_i)^2, eigenvalues 4 S (S + 1).
Mat total_spin_squared(const SpinRegister& reg);

// Product state from a string of 'u'/'d', one character per site in label order.
Vec product_state(const SpinRegister& reg, const std::string& pattern);

struct Spectrum {
  Eigen::VectorXd values;  // ascending
  Mat vectors;             // columns
};

Spectrum eig_hermitian(const Mat& op);

Mat unitary_evolve(const Mat& H, double t);
Mat unitary_evolve(const Spectrum& spec, double t);

double hermiticity_defect(const Mat& op);
double unitarity_defect(const Mat& U);

Mat kron(const Mat& a, const Mat& b);
Mat commutator(const Mat& a, const Mat& b);

// {dim, re[], im[]}; matrices row-major.
nlohmann::json to_json(const Mat& op);
nlohmann::json to_json(const Vec& v);
Mat matrix_from_json(const nlohmann::json& j);
Vec vector_from_json(const nlohmann::json& j);

}  // namespace dfsq
