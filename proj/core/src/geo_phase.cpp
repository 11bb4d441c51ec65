#include "dfsq/geo_phase.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "dfsq/errors.hpp"

namespace dfsq {

std::string format_rational(const Rational& r) {
  std::ostringstream os;
  os << r.numerator();
  if (r.denominator() != 1) os << '/' << r.denominator();
  return os.str();
}

Rational parse_rational(const std::string& s) {
  try {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return Rational(std::stoll(s));
    return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
  } catch (const std::exception&) {
    throw DomainError("not a rational number: '" + s + "'");
  }
}

void OnsiteParams::validate() const {
  for (double v : {mu_L, mu_R, omega, U_L_aa, U_R_aa, U_R_bb, U_R_ab, t})
    if (!std::isfinite(v)) throw DomainError("on-site parameters must be finite");
  if (t < 0.0) throw DomainError("tunneling rate must be non-negative");
}

std::vector<std::string> OnsiteParams::warnings() const {
  std::vector<std::string> w;
  if (omega < 10.0 * U_R_ab) w.push_back("omega < 10 U_R_ab: dropping pair-conversion terms is not justified");
  return w;
}

OnsiteParams OnsiteParams::at_resonant_bias(Statistics s) const {
  OnsiteParams q = *this;
  q.mu_L = mu_R + omega + (s == Statistics::fermion ? U_R_ab : 0.0);
  return q;
}

namespace {

Rational half(int n) { return Rational(n, 2); }

// Largest spin a band can carry: bosons n/2, fermions 1/2 only when singly occupied.
Rational band_spin(int n, Statistics s) {
  if (s == Statistics::boson) return half(n);
  return n == 1 ? Rational(1, 2) : Rational(0);
}

bool spin_allowed(int n_a, int n_b, const Rational& j, Statistics s) {
  const Rational ja = band_spin(n_a, s), jb = band_spin(n_b, s);
  if (j < Rational(0) || j > ja + jb) return false;
  const Rational lo = ja > jb ? ja - jb : jb - ja;
  if (j < lo) return false;
  return (j - lo).denominator() == 1;
}

}  // namespace

void validate(const NumberConfig& c, Statistics s) {
  if (c.n_L < 1 || c.n_L > 2) throw DomainError("n_L must be 1 or 2 (a particle has to tunnel)");
  if (c.n_R_a < 0 || c.n_R_a > 2) throw DomainError("n_R_a must lie in 0..2");
  if (c.n_R_b != 1) throw DomainError("single-particle tunneling ends with n_R_b = 1");
  if (!spin_allowed(c.n_R_a, c.n_R_b, c.j_R, s))
    throw DomainError("j_R = " + format_rational(c.j_R) + " is not reachable for this occupation");
}

double EnergyLedgerEntry::value(const OnsiteParams& p) const {
  auto d = [](const Rational& r) { return boost::rational_cast<double>(r); };
  return d(c0) * (p.delta() - p.omega) + d(c1) * p.U_L_aa + d(c2) * p.U_R_ab;
}

Rational boson_f(int n_a, int n_b, const Rational& j) {
  if (n_a < 0 || n_b < 0) throw DomainError("occupations must be non-negative");
  if (!spin_allowed(n_a, n_b, j, Statistics::boson)) throw DomainError("j out of range for boson_f");
  const Rational m = half(n_a + n_b);
  return Rational(2 * n_a * n_b) - m * (m + 1) + j * (j + 1);
}

int fermion_eta(int n_a, int n_b, const Rational& j) {
  if (n_a != 1 || n_b != 1) return 0;
  if (j != Rational(0) && j != Rational(1)) throw DomainError("two spin-1/2 particles have j = 0 or 1");
  return boost::rational_cast<int>(3 - 4 * j);
}

EnergyLedgerEntry ledger_entry(const NumberConfig& c, Statistics s) {
  validate(c, s);
  EnergyLedgerEntry e;
  e.statistics = s;
  e.config = c;
  e.c0 = 1;
  if (s == Statistics::boson) {
    e.c1 = 2 * (c.n_L - 1);
    e.c2 = -boson_f(c.n_R_a, 1, c.j_R);
  } else {
    e.c1 = c.n_L == 2 ? 1 : 0;
    e.c2 = -Rational(c.n_R_a + fermion_eta(c.n_R_a, 1, c.j_R), 2);
  }
  return e;
}

DeltaE1 delta_e1(const NumberConfig& c, const OnsiteParams& p, Statistics s) {
  p.validate();
  validate(c, s);
  // Closed on-site energies, evaluated directly.
  const double D = p.delta(), w = p.omega;
  auto j2 = [](const Rational& j) { return boost::rational_cast<double>(j * (j + 1)); };
  double EL_before, EL_after, ER_before, ER_after;
  const int na = c.n_R_a;
  if (s == Statistics::boson) {
    auto EL = [&](int n) { return D * n + p.U_L_aa * n * (n - 1); };
    auto f = [&](int nb, const Rational& j) {
      const double m = 0.5 * (na + nb);
      return 2.0 * na * nb - m * (m + 1) + j2(j);
    };
    auto ER = [&](int nb, const Rational& j) {
      return w * nb + 0.5 * p.U_R_aa * na * (na - 1) + 0.5 * p.U_R_bb * nb * (nb - 1) + p.U_R_ab * f(nb, j);
    };
    EL_before = EL(c.n_L);
    EL_after = EL(c.n_L - 1);
    ER_before = ER(0, half(na));
    ER_after = ER(1, c.j_R);
  } else {
    auto EL = [&](int n) { return D * n + (n == 2 ? p.U_L_aa : 0.0); };
    auto ER = [&](int nb, const Rational& j) {
      const double eta = (na == 1 && nb == 1) ? 3.0 - 4.0 * boost::rational_cast<double>(j) : 0.0;
      return w * nb + (na == 2 ? p.U_R_aa : 0.0) + (nb == 2 ? p.U_R_bb : 0.0) + 0.5 * p.U_R_ab * (na * nb + eta);
    };
    EL_before = EL(c.n_L);
    EL_after = EL(c.n_L - 1);
    ER_before = ER(0, band_spin(na, s));
    ER_after = ER(1, c.j_R);
  }
  return {EL_before + ER_before - EL_after - ER_after, ledger_entry(c, s)};
}

std::vector<NumberConfig> table_configs(Statistics s) {
  std::vector<NumberConfig> out;
  for (auto [nL, na] : std::vector<std::pair<int, int>>{{1, 0}, {1, 1}, {1, 2}, {2, 1}, {2, 2}}) {
    if (s == Statistics::boson) {
      for (const Rational& j : {half(na - 1), half(na + 1)})
        if (spin_allowed(na, 1, j, s)) out.push_back({nL, na, 1, j});
    } else {
      for (const Rational& j : {Rational(0), Rational(1, 2), Rational(1)})
        if (spin_allowed(na, 1, j, s)) out.push_back({nL, na, 1, j});
    }
  }
  return out;
}

std::vector<EnergyLedgerEntry> resonance_table(const OnsiteParams& p, Statistics s, double threshold) {
  p.validate();
  std::vector<EnergyLedgerEntry> rows;
  for (const auto& c : table_configs(s)) {
    auto d = delta_e1(c, p, s);
    d.entry.resonant = std::abs(d.energy) <= threshold * p.t;
    rows.push_back(d.entry);
  }
  return rows;
}

std::string ledger_csv(const std::vector<EnergyLedgerEntry>& rows) {
  std::ostringstream os;
  os << "statistics,n_L,n_R_a,j_R,c0,c1,c2,resonant\n";
  for (const auto& r : rows)
    os << to_string(r.statistics) << ',' << r.config.n_L << ',' << r.config.n_R_a << ','
       << format_rational(r.config.j_R) << ',' << format_rational(r.c0) << ',' << format_rational(r.c1) << ','
       << format_rational(r.c2) << ',' << (r.resonant ? 1 : 0) << '\n';
  return os.str();
}

std::vector<PublishedRow> published_table(Statistics s) {
  using R = Rational;
  if (s == Statistics::boson) {
    return {
        {{1, 0, 1, R(1, 2)}, R(0), R(0)},  {{1, 1, 1, R(0)}, R(0), R(0)},
        {{1, 1, 1, R(1)}, R(0), R(-2)},    {{1, 2, 1, R(1, 2)}, R(0), R(-1)},
        {{1, 2, 1, R(3, 2)}, R(0), R(-4)}, {{2, 1, 1, R(0)}, R(2), R(0)},
        {{2, 1, 1, R(1)}, R(2), R(-2)},    {{2, 2, 1, R(1, 2)}, R(2), R(-1)},
        {{2, 2, 1, R(3, 2)}, R(2), R(-4)},
    };
  }
  // One value per (n_L, n_R_a); (1,1) lists -U for the singlet, +U for the triplet.
  return {
      {{1, 0, 1, R(1, 2)}, R(0), R(1)},   {{1, 1, 1, R(0)}, R(0), R(-1)},
      {{1, 1, 1, R(1)}, R(0), R(1)},      {{1, 2, 1, R(1, 2)}, R(0), R(0)},
      {{2, 1, 1, R(0)}, R(1), R(-1, 2)},  {{2, 1, 1, R(1)}, R(1), R(-1, 2)},
      {{2, 2, 1, R(1, 2)}, R(1), R(-1)},
  };
}

FockSpace two_band_space(Statistics s, int total) {
  if (total < 0 || total > 6) throw DomainError("link particle number must lie in 0..6");
  return FockSpace::fixed_number(s, 6, total, 2);
}

namespace {

Mat pair_count(const FockSpace& sp, int u, int d) { return sp.number(u) * (sp.number(d)); }

}  // namespace

Mat onsite_hamiltonian(const OnsiteParams& p, Statistics s, const FockSpace& space, const LinkModes& m,
                       bool non_conserving) {
  p.validate();
  if (space.statistics() != s) throw DomainError("Fock space statistics do not match");
  const Eigen::Index D = space.dim();
  const Mat I = Mat::Identity(D, D);
  const Mat nL = space.number({m.L_up, m.L_dn});
  const Mat na = space.number({m.Ra_up, m.Ra_dn});
  const Mat nb = space.number({m.Rb_up, m.Rb_dn});
  const int a[2] = {m.Ra_up, m.Ra_dn};
  const int b[2] = {m.Rb_up, m.Rb_dn};

  Mat H = p.mu_L * nL + p.mu_R * (na + nb) + p.omega * nb;
  if (s == Statistics::boson) {
    H += p.U_L_aa * nL * (nL - I);
    H += 0.5 * p.U_R_aa * na * (na - I) + 0.5 * p.U_R_bb * nb * (nb - I);
    Mat X = na * nb;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) X += space.monomial({cre(a[i]), cre(b[j]), ann(b[i]), ann(a[j])});
    H += p.U_R_ab * X;
  } else {
    H += p.U_L_aa * pair_count(space, m.L_up, m.L_dn);
    H += p.U_R_aa * pair_count(space, a[0], a[1]) + p.U_R_bb * pair_count(space, b[0], b[1]);
    Mat X = na * nb;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) X -= space.monomial({cre(a[i]), cre(b[j]), ann(b[i]), ann(a[j])});
    H += p.U_R_ab * X;
  }
  if (non_conserving) {
    Mat C = Mat::Zero(D, D);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) C += space.monomial({cre(b[i]), cre(b[j]), ann(a[i]), ann(a[j])});
    const double sign = s == Statistics::boson ? 1.0 : -1.0;
    H += sign * p.U_R_ab * (C + C.adjoint());
  }
  return H;
}

Mat tunneling_hamiltonian(double t, const FockSpace& space, const LinkModes& m) {
  const Mat h = space.hop(m.L_up, m.Rb_up) + space.hop(m.L_dn, m.Rb_dn);
  return -t * (h + h.adjoint());
}

SectorEnergy onsite_sector_energy(const OnsiteParams& p, Statistics s, int n_L, int n_R_a, int n_R_b,
                                  const Rational& j_R) {
  if (n_L < 0 || n_R_a < 0 || n_R_b < 0 || n_L > 2 || n_R_a > 2 || n_R_b > 2)
    throw DomainError("occupations must lie in 0..2");
  const LinkModes m;
  const FockSpace space(s, 6, 2,
                        {{{m.L_up, m.L_dn}, n_L}, {{m.Ra_up, m.Ra_dn}, n_R_a}, {{m.Rb_up, m.Rb_dn}, n_R_b}},
                        n_L + n_R_a + n_R_b);
  if (space.dim() == 0) throw DomainError("empty occupation sector");
  const Mat H = onsite_hamiltonian(p, s, space, m);
  const auto J2 = eig_hermitian(spin_squared(orbital_spin(space, {{m.Ra_up, m.Ra_dn}, {m.Rb_up, m.Rb_dn}})));
  const double target = boost::rational_cast<double>(j_R * (j_R + 1));
  std::vector<Eigen::Index> cols;
  for (Eigen::Index k = 0; k < J2.values.size(); ++k)
    if (std::abs(J2.values(k) - target) < 1e-8) cols.push_back(k);
  if (cols.empty()) throw DomainError("no states with j_R = " + format_rational(j_R) + " in this sector");
  Mat V(space.dim(), static_cast<Eigen::Index>(cols.size()));
  for (size_t k = 0; k < cols.size(); ++k) V.col(static_cast<Eigen::Index>(k)) = J2.vectors.col(cols[k]);
  const auto e = eig_hermitian(V.adjoint() * H * V).values;
  return {e.minCoeff(), e.maxCoeff()};
}

double schwinger_identity_check(const FockSpace& space) {
  if (space.statistics() != Statistics::boson) throw DomainError("Schwinger representation needs bosons");
  if (space.modes() < 4) throw DomainError("Schwinger check needs modes a_up, a_dn, b_up, b_dn");
  const Eigen::Index D = space.dim();
  const int a[2] = {0, 1}, b[2] = {2, 3};
  Mat lhs = Mat::Zero(D, D);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) lhs += space.monomial({cre(a[i]), cre(b[j]), ann(b[i]), ann(a[j])});
  const Mat na = space.number({0, 1}), nb = space.number({2, 3});
  const Mat J2 = spin_squared(orbital_spin(space, {{0, 1}, {2, 3}}));
  const Mat half_n = 0.5 * (na + nb);
  const Mat rhs = na * nb + J2 - half_n * (half_n + Mat::Identity(D, D));
  return D == 0 ? 0.0 : (lhs - rhs).cwiseAbs().maxCoeff();
}

std::string to_string(const Sector& s) {
  std::string out;
  out += s.left == PairState::singlet ? 'S' : 'T';
  out += s.right == PairState::singlet ? 'S' : 'T';
  return out;
}

Sector sector_from_string(const std::string& s) {
  auto one = [&](char c) {
    if (c == 'S' || c == 's') return PairState::singlet;
    if (c == 'T' || c == 't') return PairState::triplet;
    throw DomainError("sector must be one of SS, ST, TS, TT");
  };
  if (s.size() != 2) throw DomainError("sector must be one of SS, ST, TS, TT");
  return {one(s[0]), one(s[1])};
}

std::array<Sector, 4> all_sectors() {
  using P = PairState;
  return {Sector{P::singlet, P::singlet}, Sector{P::singlet, P::triplet}, Sector{P::triplet, P::singlet},
          Sector{P::triplet, P::triplet}};
}

namespace {

bool spread_out(PairState ps, Statistics s) { return (ps == PairState::singlet) == (s == Statistics::boson); }

}  // namespace

std::array<LinkOccupation, 2> sector_links(const Sector& sec, Statistics s) {
  std::array<LinkOccupation, 2> links{};
  // left pair: site 2 is L of link 0, site 3 (lower) is L of link 1
  if (spread_out(sec.left, s)) {
    links[0].n_L = 1;
    links[1].n_L = 1;
  } else {
    links[1].n_L = 2;
  }
  // right pair: site 1' is R of link 0, site 4' (lower) is R of link 1
  if (spread_out(sec.right, s)) {
    links[0].n_R_a = 1;
    links[1].n_R_a = 1;
  } else {
    links[1].n_R_a = 2;
  }
  return links;
}

double resonant_return_time(double t) {
  if (!(t > 0.0)) throw DomainError("tunneling rate must be positive");
  Eigen::Matrix2d h;
  h << 0.0, -t, -t, 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
  const auto& V = es.eigenvectors();
  const Eigen::Vector2d E = es.eigenvalues();
  auto pop = [&](double tau) {
    cplx amp = 0.0;
    for (int k = 0; k < 2; ++k) amp += V(0, k) * V(0, k) * std::exp(cplx(0, -E(k) * tau));
    return std::norm(amp);
  };
  auto slope = [&](double tau) {
    cplx amp = 0.0, damp = 0.0;
    for (int k = 0; k < 2; ++k) {
      const cplx term = V(0, k) * V(0, k) * std::exp(cplx(0, -E(k) * tau));
      amp += term;
      damp += cplx(0, -E(k)) * term;
    }
    return 2.0 * std::real(std::conj(amp) * damp);
  };
  const double dt = std::numbers::pi / (400.0 * t);
  const int n = 3200;  // up to 8 pi / t
  bool dipped = false;
  for (int k = 1; k < n; ++k) {
    const double p0 = pop((k - 1) * dt), p1 = pop(k * dt), p2 = pop((k + 1) * dt);
    if (p1 < 0.5) dipped = true;
    if (!dipped || p1 < p0 || p1 < p2) continue;
    // the maximum is flat, so bisect on the sign change of the slope
    double lo = (k - 1) * dt, hi = (k + 1) * dt;
    for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  throw ConvergenceError("no Rabi return found within 8 pi / t");
}

namespace {

using Term = std::pair<double, std::vector<int>>;
using Component = std::vector<Term>;  // one pure state as a sum of creation strings

// Two-particle pair state on orbitals x and y (x == y for double occupancy).
// mode(orbital, spin) maps to the joint mode index.
std::vector<Component> pair_components(PairState ps, int x_up, int x_dn, int y_up, int y_dn, bool same_orbital) {
  const double r = 1.0 / std::sqrt(2.0);
  if (ps == PairState::singlet) {
    if (same_orbital) return {{{1.0, {x_up, x_dn}}}};
    return {{{r, {x_up, y_dn}}, {-r, {x_dn, y_up}}}};
  }
  if (same_orbital) return {{{1.0, {x_up, x_up}}}, {{1.0, {x_up, x_dn}}}, {{1.0, {x_dn, x_dn}}}};
  return {{{1.0, {x_up, y_up}}}, {{r, {x_up, y_dn}}, {r, {x_dn, y_up}}}, {{1.0, {x_dn, y_dn}}}};
}

Component product(const Component& a, const Component& b) {
  Component out;
  for (const auto& [ca, ma] : a)
    for (const auto& [cb, mb] : b) {
      std::vector<int> modes = ma;
      modes.insert(modes.end(), mb.begin(), mb.end());
      out.push_back({ca * cb, modes});
    }
  return out;
}

}  // namespace

TunnelingResult tunneling_phase(const Sector& sec, const OnsiteParams& p, Statistics s, double time) {
  p.validate();
  if (!(p.t > 0.0)) throw DomainError("tunneling rate must be positive");
  TunnelingResult res;
  res.sector = sec;
  res.links = sector_links(sec, s);
  res.return_time = time < 0.0 ? resonant_return_time(p.t) : time;

  // Joint modes: link k occupies 6k .. 6k+5 in LinkModes order.
  const LinkModes l0{0, 1, 2, 3, 4, 5}, l1{6, 7, 8, 9, 10, 11};
  const int N0 = res.links[0].n_L + res.links[0].n_R_a;
  const int N1 = res.links[1].n_L + res.links[1].n_R_a;
  const FockSpace space(s, 12, 2, {{{0, 1, 2, 3, 4, 5}, N0}, {{6, 7, 8, 9, 10, 11}, N1}}, N0 + N1);

  const Mat H0 = onsite_hamiltonian(p, s, space, l0) + onsite_hamiltonian(p, s, space, l1);
  const Mat T0 = tunneling_hamiltonian(p.t, space, l0), T1 = tunneling_hamiltonian(p.t, space, l1);

  const bool left_spread = res.links[0].n_L == 1;
  const bool right_spread = res.links[0].n_R_a == 1;
  const auto left = left_spread ? pair_components(sec.left, l0.L_up, l0.L_dn, l1.L_up, l1.L_dn, false)
                                : pair_components(sec.left, l1.L_up, l1.L_dn, l1.L_up, l1.L_dn, true);
  const auto right = right_spread ? pair_components(sec.right, l0.Ra_up, l0.Ra_dn, l1.Ra_up, l1.Ra_dn, false)
                                  : pair_components(sec.right, l1.Ra_up, l1.Ra_dn, l1.Ra_up, l1.Ra_dn, true);
  std::vector<Vec> states;
  for (const auto& cl : left)
    for (const auto& cr : right) states.push_back(space.create(product(cl, cr)));
  const double w = 1.0 / static_cast<double>(states.size());
  const double tau = res.return_time;

  // Weighted return amplitude (dynamical phase of H0 removed) and survival.
  auto evolve = [&](const Mat& H) {
    const auto spec = eig_hermitian(H);
    cplx A = 0.0;
    double survive = 0.0;
    for (const auto& psi : states) {
      const double E0 = (psi.adjoint() * H0 * psi)(0, 0).real();
      const Vec c = spec.vectors.adjoint() * psi;
      cplx amp = 0.0;
      for (Eigen::Index k = 0; k < c.size(); ++k)
        amp += std::norm(c(k)) * std::exp(cplx(0, -(spec.values(k) - E0) * tau));
      A += w * amp;
      survive += w * std::norm(amp);
    }
    return std::pair{A, survive};
  };
  const auto [A, survive] = evolve(H0 + T0 + T1);
  res.phase = std::arg(A);
  res.leakage = std::max(0.0, 1.0 - survive);
  res.link_phase[0] = std::arg(evolve(H0 + T0).first);
  res.link_phase[1] = std::arg(evolve(H0 + T1).first);

  // Resonance and detuning from the ledger of each link that can tunnel.
  double dmin = 0.0;
  for (const auto& lk : res.links) {
    if (lk.n_L < 1) continue;
    for (const auto& c : table_configs(s)) {
      if (c.n_L != lk.n_L || c.n_R_a != lk.n_R_a) continue;
      const double e = std::abs(delta_e1(c, p, s).energy);
      if (e <= 1e-9 * p.t) {
        res.resonant = true;
      } else if (dmin == 0.0 || e < dmin) {
        dmin = e;
      }
    }
  }
  res.min_detuning = dmin;
  return res;
}

}  // namespace dfsq
