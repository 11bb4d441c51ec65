#include "dfsq/spin.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dfsq/errors.hpp"

namespace dfsq {

SpinRegister::SpinRegister(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty() || labels_.size() > 8) {
    throw DomainError("spin register needs 1..8 sites");
  }
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw DomainError("duplicate site label");
}

int SpinRegister::index(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw DomainError("unknown site label '" + label + "'");
  return static_cast<int>(it - labels_.begin());
}

bool SpinRegister::contains(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

namespace {

Mat site_op(const SpinRegister& reg, int k, Axis axis) {
  const Eigen::Index n = reg.dim();
  Mat out = Mat::Zero(n, n);
  const Eigen::Index bit = Eigen::Index{1} << k;
  for (Eigen::Index s = 0; s < n; ++s) {
    const bool down = (s & bit) != 0;
    switch (axis) {
      case Axis::z:
        out(s, s) = down ? -1.0 : 1.0;
        break;
      case Axis::x:
        out(s ^ bit, s) = 1.0;
        break;
      case Axis::y:
        // sigma_y |up> = i |down>, sigma_y |down> = -i |up>
        out(s ^ bit, s) = down ? cplx(0, -1) : cplx(0, 1);
        break;
    }
  }
  return out;
}

}  // namespace

Mat pauli_site(const SpinRegister& reg, const std::string& site, Axis axis) {
  return site_op(reg, reg.index(site), axis);
}

Mat pauli_dot(const SpinRegister& reg, const std::string& i, const std::string& j) {
  const int a = reg.index(i);
  const int b = reg.index(j);
  if (a == b) throw DomainError("pauli_dot needs two distinct sites");
  // s_a.s_b = 2 SWAP - 1
  const Eigen::Index n = reg.dim();
  Mat out = Mat::Zero(n, n);
  const Eigen::Index ba = Eigen::Index{1} << a, bb = Eigen::Index{1} << b;
  for (Eigen::Index s = 0; s < n; ++s) {
    const bool ua = (s & ba) != 0, ub = (s & bb) != 0;
    if (ua == ub) {
      out(s, s) = 1.0;
    } else {
      out(s, s) = -1.0;
      out(s ^ ba ^ bb, s) += 2.0;
    }
  }
  return out;
}

Mat total_spin_squared(const SpinRegister& reg) {
  const Eigen::Index n = reg.dim();
  Mat out = Mat::Identity(n, n) * (3.0 * reg.size());
  const auto& l = reg.labels();
  for (int a = 0; a < reg.size(); ++a) {
    for (int b = a + 1; b < reg.size(); ++b) out += 2.0 * pauli_dot(reg, l[a], l[b]);
  }
  return out;
}

Vec product_state(const SpinRegister& reg, const std::string& pattern) {
  if (static_cast<int>(pattern.size()) != reg.size()) throw DomainError("pattern length mismatch");
  Eigen::Index idx = 0;
  for (int k = 0; k < reg.size(); ++k) {
    if (pattern[k] == 'd') {
      idx |= Eigen::Index{1} << k;
    } else if (pattern[k] != 'u') {
      throw DomainError("pattern must contain only 'u' and 'd'");
    }
  }
  Vec v = Vec::Zero(reg.dim());
  v(idx) = 1.0;
  return v;
}

double hermiticity_defect(const Mat& op) {
  if (op.size() == 0) return 0.0;
  return (op - op.adjoint()).cwiseAbs().maxCoeff();
}

double unitarity_defect(const Mat& U) {
  return (U.adjoint() * U - Mat::Identity(U.cols(), U.cols())).cwiseAbs().maxCoeff();
}

Spectrum eig_hermitian(const Mat& op) {
  if (op.rows() != op.cols()) throw DomainError("eig_hermitian: matrix not square");
  const double scale = std::max(1.0, op.size() ? op.cwiseAbs().maxCoeff() : 0.0);
  if (hermiticity_defect(op) > 1e-10 * scale) throw DomainError("eig_hermitian: input not Hermitian");
  Eigen::SelfAdjointEigenSolver<Mat> es(op);
  if (es.info() != Eigen::Success) throw ConvergenceError("eig_hermitian: eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

Mat unitary_evolve(const Spectrum& spec, double t) {
  Vec phases(spec.values.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) phases(k) = std::exp(cplx(0, -spec.values(k) * t));
  return spec.vectors * phases.asDiagonal() * spec.vectors.adjoint();
}

Mat unitary_evolve(const Mat& H, double t) { return unitary_evolve(eig_hermitian(H), t); }

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Mat commutator(const Mat& a, const Mat& b) { return a * b - b * a; }

nlohmann::json to_json(const Mat& op) {
  std::vector<double> re, im;
  re.reserve(op.size());
  im.reserve(op.size());
  for (Eigen::Index i = 0; i < op.rows(); ++i)
    for (Eigen::Index j = 0; j < op.cols(); ++j) {
      re.push_back(op(i, j).real());
      im.push_back(op(i, j).imag());
    }
  return {{"dim", op.rows()}, {"re", re}, {"im", im}};
}

nlohmann::json to_json(const Vec& v) {
  std::vector<double> re(v.size()), im(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    re[i] = v(i).real();
    im[i] = v(i).imag();
  }
  return {{"dim", v.size()}, {"re", re}, {"im", im}};
}

Mat matrix_from_json(const nlohmann::json& j) {
  const auto n = j.at("dim").get<Eigen::Index>();
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(re.size()) != n * n || re.size() != im.size())
    throw DomainError("matrix json: size mismatch");
  Mat out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) out(i, k) = cplx(re[i * n + k], im[i * n + k]);
  return out;
}

Vec vector_from_json(const nlohmann::json& j) {
  const auto n = j.at("dim").get<Eigen::Index>();
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(re.size()) != n || im.size() != re.size())
    throw DomainError("vector json: size mismatch");
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = cplx(re[i], im[i]);
  return out;
}

}  // namespace dfsq
