#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dfsq/errors.hpp"
#include "dfsq/optctrl.hpp"
#include "testing.hpp"

using namespace dfsq;
using dfsq::testing::max_abs;

namespace {

Mat two_site_projector_triplet(const Mat& dot) { return (3.0 * Mat::Identity(16, 16) + dot) / 4.0; }

// Register order 2, 3, 1', 4': (2,3) are bits 0,1 and (1',4') bits 2,3.
Vec pair_state(bool triplet_left, bool triplet_right) {
  auto pair = [](bool triplet) {
    Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
    v(1) = 1 / std::sqrt(2.0);
    v(2) = (triplet ? 1.0 : -1.0) / std::sqrt(2.0);
    return v;
  };
  Eigen::Vector4cd a = pair(triplet_left), b = pair(triplet_right);
  Vec out(16);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(i + 4 * j) = a(i) * b(j);
  return out;
}

}  // namespace

TEST(Controls, Properties) {
  const auto& c = control_operators();
  for (const auto& o : c.ops) EXPECT_LE(hermiticity_defect(o), 1e-15);
  for (int k : {0, 1}) {
    auto s = eig_hermitian(c.ops[k]);
    for (double v : s.values) EXPECT_TRUE(std::abs(v + 3) < 1e-12 || std::abs(v - 1) < 1e-12);
  }
  EXPECT_NEAR(std::abs(c.ops[3].trace()), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(c.ops[4].trace()), 0.0, 1e-15);
  EXPECT_LE(max_abs(commutator(c.ops[0], c.ops[1])), 1e-14);
  Mat sq = c.ops[3] * c.ops[3] + c.ops[4] * c.ops[4];
  EXPECT_LE(hermiticity_defect(sq), 1e-13);
  EXPECT_GT(sq.norm(), 1.0);
  Vec up = product_state(control_register(), "uuuu");
  EXPECT_NEAR((up.adjoint() * c.ops[2] * up)(0).real(), 2.0, 1e-14);
}

TEST(Target, Structure) {
  const Mat& U = control_target();
  EXPECT_LE(max_abs(U * U - Mat::Identity(16, 16)), 1e-14);
  EXPECT_NEAR(U.trace().real(), -2.0, 1e-13);
  const auto& c = control_operators();
  Mat expect = Mat::Identity(16, 16) -
               2.0 * two_site_projector_triplet(c.ops[0]) * two_site_projector_triplet(c.ops[1]);
  EXPECT_LE(max_abs(U - expect), 1e-15);
  double diag[4];
  int k = 0;
  for (bool l : {false, true})
    for (bool r : {false, true}) {
      Vec v = pair_state(l, r);
      diag[k++] = (v.adjoint() * U * v)(0).real();
      EXPECT_LE((U * v - diag[k - 1] * v).norm(), 1e-14);
    }
  EXPECT_NEAR(diag[0], 1.0, 1e-14);
  EXPECT_NEAR(diag[1], 1.0, 1e-14);
  EXPECT_NEAR(diag[2], 1.0, 1e-14);
  EXPECT_NEAR(diag[3], -1.0, 1e-14);
}

TEST(LieClosure, SingleOperator) {
  EXPECT_EQ(lie_closure_dimension({control_operators().ops[0]}), 2);
}

TEST(LieClosure, FullControlSet) {
  const auto& c = control_operators();
  std::vector<Mat> gens(c.ops.begin(), c.ops.end());
  LieClosure lie(gens);
  EXPECT_EQ(lie.dimension(), 80);
  EXPECT_EQ(lie.extra_round_rank(), 0);
  EXPECT_LE(lie.residual(c.ops[0] * c.ops[1]), 1e-8);
  EXPECT_LE(lie.residual(control_target()), 1e-8);
  // a single-site field is not reachable
  EXPECT_GT(lie.residual(pauli_site(control_register(), "2", Axis::z)), 0.1);
}

TEST(LieClosure, RejectsNonHermitian) {
  Mat a = Mat::Zero(2, 2);
  a(0, 1) = 1.0;
  EXPECT_THROW(LieClosure({a}), DomainError);
}

TEST(Pulse, BoundaryValuesVanish) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    auto p = random_pulse(rng(), 20, 1.7);
    for (int k = 0; k < kControls; ++k) {
      EXPECT_EQ(p.amplitude(k, 0.0), 0.0);
      EXPECT_EQ(p.amplitude(k, p.T), 0.0);
    }
  }
}

TEST(Pulse, RandomInitialRange) {
  auto p = random_pulse(42, 20, 1.0);
  for (int l = 1; l <= 20; ++l)
    for (int k = 0; k < kControls; ++k) EXPECT_LE(std::abs(p.x(k, l - 1)), 0.5 * std::numbers::pi / l);
  auto q = random_pulse(42, 20, 1.0);
  EXPECT_EQ((p.x - q.x).norm(), 0.0);
}

TEST(Propagate, ZeroPulseIsIdentity) {
  auto p = PulseParams::zeros(5);
  EXPECT_LE(max_abs(propagate(p, 50) - Mat::Identity(16, 16)), 1e-15);
  EXPECT_NEAR(fidelity(p, 50), 1.0 / 64, 1e-15);
}

TEST(Propagate, CommutingCaseMatchesSingleExponential) {
  auto p = PulseParams::zeros(6, 1.3);
  p.x(2, 3) = 0.8;
  const int steps = 333;
  const double dt = p.T / steps;
  double area = 0.0;
  for (int j = 0; j < steps; ++j) area += p.amplitude(2, (j + 0.5) * dt) * dt;
  Mat expect = unitary_evolve(control_operators().ops[2], area);
  EXPECT_LE(max_abs(propagate(p, steps) - expect), 1e-10);
}

TEST(Propagate, UnitaryAndConverged) {
  auto p = random_pulse(5, 20, 1.0);
  EXPECT_LE(unitarity_defect(propagate(p, 2000)), 1e-9);
  EXPECT_LE(unitarity_defect(propagate(p, 4000)), 1e-9);
  auto c = propagate_converged(p, 500, 1e-9);
  EXPECT_LE(c.fidelity_change, 1e-9);
  EXPECT_GE(c.steps, 1000);
  EXPECT_THROW(propagate_converged(p, 500, 1e-30, 1000), ConvergenceError);
}

TEST(Propagate, TimeReversalInverts) {
  auto p = random_pulse(6, 20, 1.0);
  Mat U = propagate(p, 1000), R = propagate(time_reversed(p), 1000);
  EXPECT_LE(max_abs(R * U - Mat::Identity(16, 16)), 1e-8);
}

TEST(Propagate, Errors) {
  auto p = PulseParams::zeros(3);
  EXPECT_THROW(propagate(p, 0), DomainError);
  EXPECT_THROW(PulseParams::zeros(0), DomainError);
}

TEST(Fidelity, BoundedAndPhaseInvariant) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    auto p = random_pulse(rng(), 10, 1.0);
    Mat U = propagate(p, 300);
    double F = gate_fidelity_of(U);
    EXPECT_LE(F, 1.0 + 1e-12);
    EXPECT_GE(F, 0.0);
    EXPECT_NEAR(gate_fidelity_of(std::exp(cplx(0, 0.9)) * U), F, 1e-14);
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  const int steps = 200;
  for (int trial = 0; trial < 3; ++trial) {
    auto p = random_pulse(rng(), 4, 1.0);
    auto g = fidelity_and_gradient(p, steps);
    EXPECT_NEAR(g.F, fidelity(p, steps), 1e-13);
    EXPECT_NEAR(g.F, static_cast<double>(dfsq::testing::fidelity_extended(p, steps)), 1e-13);
    const double h = 1e-6;
    Eigen::MatrixXd fd(kControls, 4);
    for (int k = 0; k < kControls; ++k)
      for (int l = 0; l < 4; ++l) {
        auto a = p, b = p;
        a.x(k, l) += h;
        b.x(k, l) -= h;
        fd(k, l) = static_cast<double>((dfsq::testing::fidelity_extended(a, steps) -
                                        dfsq::testing::fidelity_extended(b, steps)) /
                                       (2 * h));
      }
    const double scale = fd.cwiseAbs().maxCoeff();
    for (int k = 0; k < kControls; ++k)
      for (int l = 0; l < 4; ++l)
        EXPECT_LE(std::abs(g.grad(k, l) - fd(k, l)) / std::max(std::abs(fd(k, l)), 1e-3 * scale), 1e-5);
  }
}

TEST(Optimize, DeterministicPerSeed) {
  OptimizeOptions o;
  o.L = 2;
  o.restarts = 2;
  o.max_iter = 5;
  o.steps = 100;
  auto a = optimize(9, o), b = optimize(9, o);
  EXPECT_EQ((a.x_final.x - b.x_final.x).norm(), 0.0);
  EXPECT_EQ(a.infidelity, b.infidelity);
  EXPECT_EQ(a.seed, 9u);
  EXPECT_NEAR(a.infidelity, 1.0 - fidelity(a.x_final, o.steps), 1e-12);
}

TEST(Optimize, SingleHarmonicCannotReachTarget) {
  OptimizeOptions o;
  o.L = 1;
  o.restarts = 2;
  o.max_iter = 200;
  o.steps = 200;
  auto r = optimize(1, o);
  EXPECT_GE(r.infidelity, 1e-3);
  EXPECT_EQ(r.restarts_used, 2);
}

TEST(Optimize, ImprovesOnStart) {
  OptimizeOptions o;
  o.L = 6;
  o.restarts = 1;
  o.max_iter = 40;
  o.steps = 200;
  auto r = optimize(3, o);
  std::mt19937_64 seeds(3);
  auto start = random_pulse(seeds(), 6, 1.0);
  EXPECT_LT(r.infidelity, 1.0 - fidelity(start, 200));
}

TEST(Robustness, ZeroDeviationIsBaseline) {
  auto p = random_pulse(2, 8, 1.0);
  auto r = robustness_sweep(p, {0.0, 0.1}, 300);
  EXPECT_NEAR(r[0], 1.0 - fidelity(p, 300), 1e-15);
  EXPECT_NEAR(r[1], 1.0 - fidelity(p, 300, 0.9), 1e-15);
}

TEST(Robustness, SlopeFit) {
  std::vector<double> x{1e-2, 2e-2, 5e-2, 1e-1}, y;
  for (double v : x) y.push_back(3.0 * v * v);
  EXPECT_NEAR(loglog_slope(x, y), 2.0, 1e-12);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), DomainError);
}
