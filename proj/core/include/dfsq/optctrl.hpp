#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dfsq/spin.hpp"

namespace dfsq {

constexpr int kControls = 5;

// Middle sites of a superplaquette: 2, 3 from the left plaquette and 1', 4' from the right.
SpinRegister control_register();

struct ControlSet {
  std::array<Mat, kControls> ops;  // 16x16
};

// O1 = s2.s3, O2 = s1'.s4', O3 = s2z s1'z + s3z s4'z, O4 = sum sx, O5 = sum sy.
const ControlSet& control_operators();

// 1 - 2 P_T(2,3) P_T(1',4'): -1 on triplet x triplet, +1 elsewhere.
const Mat& control_target();

// Real span of {i[A,B]} closure as orthonormal Hermitian basis, identity included.
class LieClosure {
 public:
  LieClosure(const std::vector<Mat>& generators, double tol = 1e-9, int max_rounds = 50);
  int dimension() const { return static_cast<int>(basis_.size()); }
  // Norm of the component of op orthogonal to the span, relative to ||op||.
  double residual(const Mat& op) const;
  // Rank added by one more commutator round (0 for a closed span).
  int extra_round_rank() const;

 private:
  bool try_add(const Mat& op);
  std::vector<Mat> basis_;
  double tol_;
};

int lie_closure_dimension(const std::vector<Mat>& ops, double tol = 1e-9);

struct PulseParams {
  Eigen::MatrixXd x;  // K x L
  double T = 1.0;

  static PulseParams zeros(int L, double T = 1.0);
  int L() const { return static_cast<int>(x.cols()); }
  double amplitude(int k, double t) const;  // alpha_k(t)
  double max_amplitude(int k, int samples = 1000) const;
};

// alpha_rev(t) = -alpha(T - t); its propagator inverts the original one.
PulseParams time_reversed(const PulseParams& p);

// Midpoint exponential product with `steps` slices of the Hamiltonian
// scale * sum_k alpha_k(t) O_k.
Mat propagate(const PulseParams& p, int steps, double scale = 1.0);

struct ConvergedPropagation {
  Mat U;
  int steps;
  double fidelity_change;  // |F(steps) - F(steps/2)| at the returned resolution
};

// Doubles the slice count from `steps` until halving changes F by <= tol.
// Throws ConvergenceError past max_steps.
ConvergedPropagation propagate_converged(const PulseParams& p, int steps = 2000, double tol = 1e-9,
                                         int max_steps = 1 << 17, double scale = 1.0);

double gate_fidelity_of(const Mat& U);  // |Tr(Ug^dag U)/16|^2

double fidelity(const PulseParams& p, int steps = 2000, double scale = 1.0);

struct FidelityGradient {
  double F;
  Eigen::MatrixXd grad;  // K x L
};

// Exact gradient of the sliced propagator's fidelity.
FidelityGradient fidelity_and_gradient(const PulseParams& p, int steps = 2000);

struct OptimizeOptions {
  int L = 20;
  double T = 1.0;
  int restarts = 10;
  int max_iter = 2000;
  double target_eps = 1e-6;
  int steps = 2000;
};

struct OptimizationResult {
  PulseParams x_final;
  double infidelity = 1.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  int restarts_used = 0;
  std::uint64_t seed = 0;
};

// Random initial point: x_kl ~ U(-0.5, 0.5) * pi / l.
PulseParams random_pulse(std::uint64_t seed, int L, double T);

OptimizationResult optimize(std::uint64_t seed, const OptimizeOptions& opts);

// 1 - F under (1 - delta) H for each delta.
std::vector<double> robustness_sweep(const PulseParams& x, const std::vector<double>& deviations,
                                     int steps = 2000);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dfsq
