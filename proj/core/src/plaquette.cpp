#include "dfsq/plaquette.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "dfsq/errors.hpp"

namespace dfsq {

SpinRegister plaquette_register() { return SpinRegister({"1", "2", "3", "4"}); }

Vec singlet_pairs(const SpinRegister& reg, const std::vector<SitePair>& pairs) {
  std::set<int> used;
  for (const auto& [a, b] : pairs) {
    const int i = reg.index(a), j = reg.index(b);
    if (i == j || !used.insert(i).second || !used.insert(j).second)
      throw DomainError("singlet pairs overlap");
  }
  if (static_cast<int>(used.size()) != reg.size()) throw DomainError("singlet pairs must cover every site");

  Vec v = Vec::Zero(reg.dim());
  const size_t np = pairs.size();
  for (unsigned mask = 0; mask < (1u << np); ++mask) {
    Eigen::Index idx = 0;
    double sign = 1.0;
    for (size_t p = 0; p < np; ++p) {
      const int i = reg.index(pairs[p].first), j = reg.index(pairs[p].second);
      if (mask & (1u << p)) {  // down on i, up on j
        idx |= Eigen::Index{1} << i;
        sign = -sign;
      } else {
        idx |= Eigen::Index{1} << j;
      }
    }
    v(idx) += sign;
  }
  return v / std::sqrt(static_cast<double>(1u << np));
}

Mat PlaquetteBasis::isometry() const {
  Mat P(16, 2);
  P.col(0) = ket0;
  P.col(1) = ket1;
  return P;
}

Mat PlaquetteBasis::box_cross() const {
  Mat B(16, 2);
  B.col(0) = ket_box;
  B.col(1) = ket_cross;
  return B;
}

namespace {

PlaquetteBasis build_basis() {
  const auto reg = plaquette_register();
  PlaquetteBasis b;
  b.psi_H = singlet_pairs(reg, {{"1", "2"}, {"3", "4"}});
  b.psi_V = singlet_pairs(reg, {{"2", "3"}, {"4", "1"}});
  b.ket0 = b.psi_V;
  // Sign chosen so that n_H = (sqrt3/2, 0, -1/2) is the restriction of the
  // horizontal superexchange (see axis_H).
  b.ket1 = (2.0 / std::sqrt(3.0)) * (b.psi_H - 0.5 * b.psi_V);
  b.ket_box = (b.psi_H + b.psi_V) / std::sqrt(3.0);
  b.ket_cross = b.psi_H - b.psi_V;
  const Mat P = b.isometry();
  b.logical_projector = P * P.adjoint();
  return b;
}

}  // namespace

const PlaquetteBasis& logical_basis() {
  static const PlaquetteBasis basis = build_basis();
  return basis;
}

Eigen::Vector3d axis_H() { return {std::sqrt(3.0) / 2.0, 0.0, -0.5}; }
Eigen::Vector3d axis_V() { return {0.0, 0.0, 1.0}; }
Eigen::Vector3d axis_C() { return {1.0 / std::sqrt(2.0), 0.0, 1.0 / std::sqrt(2.0)}; }

PlaquetteCouplings PlaquetteCouplings::rect(double J_H, double J_V) {
  PlaquetteCouplings c;
  c.j12 = c.j34 = -J_H;
  c.j23 = c.j41 = -J_V;
  return c;
}

PlaquetteCouplings PlaquetteCouplings::diag(double J, double d) {
  PlaquetteCouplings c;
  c.j12 = c.j23 = c.j34 = c.j41 = J;
  c.j13 = c.j24 = d;
  return c;
}

Mat heisenberg_on(const SpinRegister& reg, const std::array<std::string, 4>& s,
                  const PlaquetteCouplings& c) {
  Mat H = Mat::Zero(reg.dim(), reg.dim());
  const std::array<std::tuple<int, int, double>, 6> terms{{{0, 1, c.j12},
                                                            {1, 2, c.j23},
                                                            {2, 3, c.j34},
                                                            {3, 0, c.j41},
                                                            {0, 2, c.j13},
                                                            {1, 3, c.j24}}};
  for (const auto& [a, b, J] : terms)
    if (J != 0.0) H += J * pauli_dot(reg, s[a], s[b]);
  return H;
}

Mat heisenberg_plaquette(const PlaquetteCouplings& c) {
  return heisenberg_on(plaquette_register(), {"1", "2", "3", "4"}, c);
}

std::vector<SpectrumLevel> plaquette_spectrum(double J, double d) {
  const auto reg = plaquette_register();
  const Mat H = heisenberg_plaquette(PlaquetteCouplings::diag(J, d)) +
                (4.0 * J + 2.0 * d) * Mat::Identity(16, 16);
  // Diagonalize S^2 first so degenerate levels are never mixed across spins.
  const auto s2 = eig_hermitian(total_spin_squared(reg));
  std::vector<SpectrumLevel> levels;
  for (int S = 0; S <= 2; ++S) {
    const double target = 4.0 * S * (S + 1);
    std::vector<Eigen::Index> cols;
    for (Eigen::Index k = 0; k < 16; ++k)
      if (std::abs(s2.values(k) - target) < 1e-8) cols.push_back(k);
    Mat V(16, static_cast<Eigen::Index>(cols.size()));
    for (size_t k = 0; k < cols.size(); ++k) V.col(static_cast<Eigen::Index>(k)) = s2.vectors.col(cols[k]);
    const auto block = eig_hermitian(V.adjoint() * H * V);
    const int mult = 2 * S + 1;
    // Each multiplet appears (2S+1) times; group consecutive equal energies.
    for (Eigen::Index k = 0; k < block.values.size();) {
      Eigen::Index e = k;
      while (e < block.values.size() && std::abs(block.values(e) - block.values(k)) < 1e-9) ++e;
      const int count = static_cast<int>(e - k);
      for (int rep = 0; rep < count / mult; ++rep) levels.push_back({block.values(k), S, mult});
      if (count % mult) levels.push_back({block.values(k), S, count % mult});
      k = e;
    }
  }
  std::sort(levels.begin(), levels.end(),
            [](const SpectrumLevel& a, const SpectrumLevel& b) { return a.energy < b.energy; });
  return levels;
}

Eigen::Matrix2cd logical_restriction(const Mat& op) {
  if (op.rows() != 16 || op.cols() != 16) throw DomainError("logical_restriction expects a 16x16 operator");
  const Mat P = logical_basis().isometry();
  return P.adjoint() * op * P;
}

Mat axis_pulse_hamiltonian(double a, double b) {
  // -(1/4)(s1.s2 + s3.s4) restricts to n_H.sigma + 1/2, likewise for V.
  return heisenberg_plaquette(PlaquetteCouplings::rect(a / 4.0, b / 4.0));
}

Vec plus_state() {
  const auto& b = logical_basis();
  return (b.ket0 + b.ket1) / std::sqrt(2.0);
}

Vec prepare_plus(PrepareMode mode, double duration_scale) {
  const auto& b = logical_basis();
  Vec psi = b.ket0;
  const double s = std::asin(std::sqrt(2.0 / 3.0));
  if (mode == PrepareMode::two_step) {
    const double theta_H = s;
    const double theta_V = (std::numbers::pi - s) / 2.0;
    psi = unitary_evolve(axis_pulse_hamiltonian(1.0, 0.0), theta_H * duration_scale) * psi;
    psi = unitary_evolve(axis_pulse_hamiltonian(0.0, 1.0), theta_V * duration_scale) * psi;
  } else {
    // n_C = a n_H + b n_V
    const double a = std::sqrt(2.0 / 3.0);
    const double bb = 1.0 / std::sqrt(2.0) + 1.0 / std::sqrt(6.0);
    psi = unitary_evolve(axis_pulse_hamiltonian(a, bb), std::numbers::pi / 2.0 * duration_scale) * psi;
  }
  return psi;
}

int rotation_step_bound(const Eigen::Vector3d& axis1, const Eigen::Vector3d& axis2) {
  if (std::abs(axis1.norm() - 1.0) > 1e-9 || std::abs(axis2.norm() - 1.0) > 1e-9)
    throw DomainError("rotation axes must be unit vectors");
  const double c = std::clamp(axis1.dot(axis2), -1.0, 1.0);
  const double eta = std::acos(c);
  const double m = std::min(eta, std::numbers::pi - eta);
  if (m < 1e-9) throw DomainError("rotation axes are collinear");
  // pi/(k+1) <= m < pi/k  <=>  k = ceil(pi/m) - 1
  const int k = static_cast<int>(std::ceil(std::numbers::pi / m - 1e-9)) - 1;
  return k + 2;
}

HubbardGap superexchange_hubbard_check(double t, double U, Statistics stats) {
  if (!(U > 0.0)) throw DomainError("Hubbard check needs U > 0");
  if (t < 0.0 || t / U > 0.1) throw DomainError("Hubbard check needs 0 <= t/U <= 0.1");
  // modes: L up, L down, R up, R down
  const FockSpace space = FockSpace::fixed_number(stats, 4, 2, 2);
  Mat H = Mat::Zero(space.dim(), space.dim());
  for (int s = 0; s < 2; ++s) H += -t * (space.hop(s, 2 + s) + space.hop(2 + s, s));
  for (int site = 0; site < 2; ++site) {
    const Mat n = space.number({2 * site, 2 * site + 1});
    H += 0.5 * U * n * (n - Mat::Identity(space.dim(), space.dim()));
  }
  const auto s2 = eig_hermitian(spin_squared(orbital_spin(space, {{0, 1}, {2, 3}})));
  auto lowest = [&](double target) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index k = 0; k < s2.values.size(); ++k)
      if (std::abs(s2.values(k) - target) < 1e-8) cols.push_back(k);
    Mat V(space.dim(), static_cast<Eigen::Index>(cols.size()));
    for (size_t k = 0; k < cols.size(); ++k) V.col(static_cast<Eigen::Index>(k)) = s2.vectors.col(cols[k]);
    return eig_hermitian(V.adjoint() * H * V).values(0);
  };
  const double gap = lowest(2.0) - lowest(0.0);
  const double pert = (stats == Statistics::fermion ? 4.0 : -4.0) * t * t / U;
  return {gap, pert};
}

}  // namespace dfsq
