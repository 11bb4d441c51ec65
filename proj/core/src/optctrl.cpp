#include "dfsq/optctrl.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include "dfsq/errors.hpp"

namespace dfsq {

namespace {

using M16 = Eigen::Matrix<cplx, 16, 16>;
using V16 = Eigen::Matrix<double, 16, 1>;

double frob_dot(const Mat& a, const Mat& b) { return (a.adjoint() * b).trace().real(); }

std::array<M16, kControls> fixed_ops() {
  std::array<M16, kControls> out;
  const auto& c = control_operators();
  for (int k = 0; k < kControls; ++k) out[k] = c.ops[k];
  return out;
}

const std::array<M16, kControls>& ops16() {
  static const auto ops = fixed_ops();
  return ops;
}

double basis_fn(int l, double t, double T) {
  if (t <= 0.0 || t >= T) return 0.0;  // sin(l pi) is not exactly zero in floating point
  return std::sin(l * std::numbers::pi * t / T);
}

M16 slice_hamiltonian(const PulseParams& p, double t, double scale) {
  M16 H = M16::Zero();
  const auto& O = ops16();
  for (int k = 0; k < kControls; ++k) {
    double a = 0.0;
    for (int l = 1; l <= p.L(); ++l) a += p.x(k, l - 1) * basis_fn(l, t, p.T);
    H += (scale * a) * O[k];
  }
  return H;
}

struct Slice {
  M16 V;
  V16 e;
  M16 E;  // exp(-i dt H)
};

Slice slice_exp(const M16& H, double dt) {
  Eigen::SelfAdjointEigenSolver<M16> es(H);
  Slice s{es.eigenvectors(), es.eigenvalues(), M16()};
  Eigen::Matrix<cplx, 16, 1> ph;
  for (int a = 0; a < 16; ++a) ph(a) = std::exp(cplx(0, -dt * s.e(a)));
  s.E = s.V * ph.asDiagonal() * s.V.adjoint();
  return s;
}

void check_pulse(const PulseParams& p, int steps) {
  if (steps < 1) throw DomainError("propagation needs at least one slice");
  if (p.x.rows() != kControls || p.x.cols() < 1) throw DomainError("pulse array must be 5 x L with L >= 1");
  if (!(p.T > 0.0)) throw DomainError("pulse horizon T must be positive");
}

}  // namespace

SpinRegister control_register() { return SpinRegister({"2", "3", "1'", "4'"}); }

const ControlSet& control_operators() {
  static const ControlSet set = [] {
    const auto r = control_register();
    ControlSet c;
    c.ops[0] = pauli_dot(r, "2", "3");
    c.ops[1] = pauli_dot(r, "1'", "4'");
    c.ops[2] = pauli_site(r, "2", Axis::z) * pauli_site(r, "1'", Axis::z) +
               pauli_site(r, "3", Axis::z) * pauli_site(r, "4'", Axis::z);
    c.ops[3] = Mat::Zero(16, 16);
    c.ops[4] = Mat::Zero(16, 16);
    for (const auto& s : r.labels()) {
      c.ops[3] += pauli_site(r, s, Axis::x);
      c.ops[4] += pauli_site(r, s, Axis::y);
    }
    return c;
  }();
  return set;
}

const Mat& control_target() {
  static const Mat Ug = [] {
    const auto& c = control_operators();
    const Mat I = Mat::Identity(16, 16);
    const Mat PT23 = (3.0 * I + c.ops[0]) / 4.0;
    const Mat PT14 = (3.0 * I + c.ops[1]) / 4.0;
    return Mat(I - 2.0 * PT23 * PT14);
  }();
  return Ug;
}

LieClosure::LieClosure(const std::vector<Mat>& generators, double tol, int max_rounds) : tol_(tol) {
  if (generators.empty()) throw DomainError("Lie closure needs at least one generator");
  const Eigen::Index n = generators.front().rows();
  for (const auto& g : generators)
    if (hermiticity_defect(g) > 1e-10 * std::max(1.0, g.cwiseAbs().maxCoeff()))
      throw DomainError("Lie closure generators must be Hermitian");
  try_add(Mat::Identity(n, n) / std::sqrt(static_cast<double>(n)));
  for (const auto& g : generators)
    if (g.norm() > 0.0) try_add(g / g.norm());
  size_t done = 0;  // basis elements whose commutators with everything are already in
  for (int round = 0; round < max_rounds; ++round) {
    const size_t end = basis_.size();
    bool grew = false;
    for (size_t a = done; a < end; ++a)
      for (size_t b = 0; b < end; ++b) {
        if (b >= done && b <= a) continue;
        if (try_add(cplx(0, 1) * commutator(basis_[a], basis_[b]))) grew = true;
      }
    done = end;
    if (!grew) return;
  }
  throw ConvergenceError("Lie closure did not saturate within the round cap");
}

// Basis elements have unit norm, so commutators of them are compared against
// tol without rescaling; rescaling would promote roundoff to full rank.
bool LieClosure::try_add(const Mat& op) {
  Mat v = op;
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& b : basis_) v -= frob_dot(b, v) * b;
  const double r = v.norm();
  if (r <= tol_) return false;
  basis_.push_back(v / r);
  return true;
}

double LieClosure::residual(const Mat& op) const {
  const double nrm = op.norm();
  if (nrm == 0.0) return 0.0;
  Mat v = op / nrm;
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& b : basis_) v -= frob_dot(b, v) * b;
  return v.norm();
}

int LieClosure::extra_round_rank() const {
  LieClosure copy = *this;
  const size_t before = copy.basis_.size();
  for (size_t a = 0; a < before; ++a)
    for (size_t b = a + 1; b < before; ++b) copy.try_add(cplx(0, 1) * commutator(basis_[a], basis_[b]));
  return static_cast<int>(copy.basis_.size() - before);
}

int lie_closure_dimension(const std::vector<Mat>& ops, double tol) { return LieClosure(ops, tol).dimension(); }

PulseParams PulseParams::zeros(int L, double T) {
  if (L < 1) throw DomainError("basis size L must be >= 1");
  return {Eigen::MatrixXd::Zero(kControls, L), T};
}

double PulseParams::amplitude(int k, double t) const {
  double a = 0.0;
  for (int l = 1; l <= L(); ++l) a += x(k, l - 1) * basis_fn(l, t, T);
  return a;
}

double PulseParams::max_amplitude(int k, int samples) const {
  double m = 0.0;
  for (int s = 0; s < samples; ++s) m = std::max(m, std::abs(amplitude(k, T * s / (samples - 1))));
  return m;
}

PulseParams time_reversed(const PulseParams& p) {
  PulseParams r = p;
  // sin(l pi (T - t)/T) = (-1)^(l+1) sin(l pi t / T)
  for (int l = 1; l <= p.L(); ++l)
    if (l % 2) r.x.col(l - 1) = -p.x.col(l - 1);
  return r;
}

Mat propagate(const PulseParams& p, int steps, double scale) {
  check_pulse(p, steps);
  const double dt = p.T / steps;
  M16 U = M16::Identity();
  for (int j = 0; j < steps; ++j) U = slice_exp(slice_hamiltonian(p, (j + 0.5) * dt, scale), dt).E * U;
  return U;
}

double gate_fidelity_of(const Mat& U) {
  return std::norm((control_target().adjoint() * U).trace() / 16.0);
}

ConvergedPropagation propagate_converged(const PulseParams& p, int steps, double tol, int max_steps,
                                         double scale) {
  Mat coarse = propagate(p, steps, scale);
  for (int s = steps; 2 * s <= max_steps; s *= 2) {
    Mat fine = propagate(p, 2 * s, scale);
    const double diff = std::abs(gate_fidelity_of(fine) - gate_fidelity_of(coarse));
    if (diff <= tol) return {fine, 2 * s, diff};
    coarse = std::move(fine);
  }
  throw ConvergenceError("propagation did not converge under step halving");
}

double fidelity(const PulseParams& p, int steps, double scale) {
  return gate_fidelity_of(propagate(p, steps, scale));
}

FidelityGradient fidelity_and_gradient(const PulseParams& p, int steps) {
  check_pulse(p, steps);
  const int L = p.L();
  const double dt = p.T / steps;
  const auto& O = ops16();
  const M16 Ug = control_target();

  // Forward pass, keeping each slice's eigensystem.
  std::vector<Slice> slices;
  slices.reserve(static_cast<size_t>(steps));
  M16 U = M16::Identity();
  for (int j = 0; j < steps; ++j) {
    slices.push_back(slice_exp(slice_hamiltonian(p, (j + 0.5) * dt, 1.0), dt));
    U = slices.back().E * U;
  }
  const cplx f = (Ug.adjoint() * U).trace() / 16.0;

  // d f / d x_kl = (1/N) sum_j J_l(t_j) Tr[M_j dE_j(O_k)],
  // M_j = P_j Ug^dag U P_j^dag E_j^dag with P_j the product of slices before j.
  const M16 G = Ug.adjoint() * U;
  Eigen::MatrixXcd df = Eigen::MatrixXcd::Zero(kControls, L);
  M16 P = M16::Identity();
  for (int j = 0; j < steps; ++j) {
    const Slice& s = slices[static_cast<size_t>(j)];
    const M16 M = P * G * P.adjoint() * s.E.adjoint();
    const M16 A = s.V.adjoint() * M * s.V;
    M16 Q;
    for (int a = 0; a < 16; ++a)
      for (int b = 0; b < 16; ++b) {
        const double ea = s.e(a), eb = s.e(b);
        // (e^{-i dt ea} - e^{-i dt eb}) / (ea - eb) without cancellation
        const double x = 0.5 * dt * (ea - eb);
        const double sinc = std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
        const cplx phi = cplx(0, -dt * sinc) * std::exp(cplx(0, -dt * 0.5 * (ea + eb)));
        Q(a, b) = A(b, a) * phi;
      }
    const M16 R = s.V * Q.transpose() * s.V.adjoint();
    cplx g[kControls];
    for (int k = 0; k < kControls; ++k) g[k] = (R.transpose().cwiseProduct(O[k])).sum();
    const double t = (j + 0.5) * dt;
    for (int l = 1; l <= L; ++l) {
      const double Jl = basis_fn(l, t, p.T);
      for (int k = 0; k < kControls; ++k) df(k, l - 1) += Jl * g[k];
    }
    P = s.E * P;
  }
  df /= 16.0;
  FidelityGradient out{std::norm(f), Eigen::MatrixXd(kControls, L)};
  for (int k = 0; k < kControls; ++k)
    for (int l = 0; l < L; ++l) out.grad(k, l) = 2.0 * (std::conj(f) * df(k, l)).real();
  return out;
}

PulseParams random_pulse(std::uint64_t seed, int L, double T) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  PulseParams p = PulseParams::zeros(L, T);
  for (int k = 0; k < kControls; ++k)
    for (int l = 1; l <= L; ++l) p.x(k, l - 1) = u(rng) * std::numbers::pi / l;
  return p;
}

namespace {

class Infidelity final : public ceres::FirstOrderFunction {
 public:
  Infidelity(int L, double T, int steps) : L_(L), T_(T), steps_(steps) {}
  bool Evaluate(const double* params, double* cost, double* gradient) const override {
    PulseParams p = PulseParams::zeros(L_, T_);
    for (int k = 0; k < kControls; ++k)
      for (int l = 0; l < L_; ++l) p.x(k, l) = params[k * L_ + l];
    if (gradient == nullptr) {
      *cost = 1.0 - fidelity(p, steps_);
      return true;
    }
    const auto fg = fidelity_and_gradient(p, steps_);
    *cost = 1.0 - fg.F;
    for (int k = 0; k < kControls; ++k)
      for (int l = 0; l < L_; ++l) gradient[k * L_ + l] = -fg.grad(k, l);
    return true;
  }
  int NumParameters() const override { return kControls * L_; }

 private:
  int L_;
  double T_;
  int steps_;
};

class StopAtTarget final : public ceres::IterationCallback {
 public:
  explicit StopAtTarget(double target) : target_(target) {}
  ceres::CallbackReturnType operator()(const ceres::IterationSummary& s) override {
    return s.cost <= target_ ? ceres::SOLVER_TERMINATE_SUCCESSFULLY : ceres::SOLVER_CONTINUE;
  }

 private:
  double target_;
};

}  // namespace

OptimizationResult optimize(std::uint64_t seed, const OptimizeOptions& opts) {
  if (opts.L < 1 || opts.restarts < 1 || opts.max_iter < 1 || opts.steps < 1)
    throw DomainError("optimize: L, restarts, max_iter and steps must be positive");
  OptimizationResult best;
  best.seed = seed;
  best.x_final = PulseParams::zeros(opts.L, opts.T);
  std::mt19937_64 seeds(seed);
  for (int r = 0; r < opts.restarts; ++r) {
    PulseParams p = random_pulse(seeds(), opts.L, opts.T);
    std::vector<double> x(static_cast<size_t>(kControls * opts.L));
    for (int k = 0; k < kControls; ++k)
      for (int l = 0; l < opts.L; ++l) x[static_cast<size_t>(k * opts.L + l)] = p.x(k, l);

    ceres::GradientProblem problem(new Infidelity(opts.L, opts.T, opts.steps));
    ceres::GradientProblemSolver::Options o;
    o.line_search_direction_type = ceres::BFGS;
    o.line_search_type = ceres::WOLFE;
    o.max_num_iterations = opts.max_iter;
    o.function_tolerance = 1e-16;
    o.gradient_tolerance = 1e-14;
    o.parameter_tolerance = 1e-16;
    o.logging_type = ceres::SILENT;
    StopAtTarget stop(opts.target_eps);
    o.callbacks.push_back(&stop);
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(o, problem, x.data(), &summary);

    for (int k = 0; k < kControls; ++k)
      for (int l = 0; l < opts.L; ++l) p.x(k, l) = x[static_cast<size_t>(k * opts.L + l)];
    const auto fg = fidelity_and_gradient(p, opts.steps);
    const double infid = std::max(0.0, 1.0 - fg.F);
    if (r == 0 || infid < best.infidelity) {
      best.x_final = p;
      best.infidelity = infid;
      best.iterations = static_cast<int>(summary.iterations.size());
      best.gradient_norm = fg.grad.norm();
    }
    best.restarts_used = r + 1;
    if (best.infidelity <= opts.target_eps) break;
  }
  return best;
}

std::vector<double> robustness_sweep(const PulseParams& x, const std::vector<double>& deviations, int steps) {
  std::vector<double> out;
  out.reserve(deviations.size());
  for (double d : deviations) out.push_back(std::max(0.0, 1.0 - fidelity(x, steps, 1.0 - d)));
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs matching arrays of length >= 2");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("log-log fit needs positive values");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace dfsq
