#include "dfsq/pert_gate.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dfsq/errors.hpp"
#include "dfsq/plaquette.hpp"

namespace dfsq {

void PertParams::validate() const {
  if (!(J > 0.0)) throw DomainError("J must be positive");
  if (!(d > 0.0 && d < J)) throw DomainError("d must lie in (0, J)");
  if (!(Jp >= 0.0)) throw DomainError("J' must be non-negative");
  if (n < 1 || m < 1) throw DomainError("n and m must be positive integers");
}

std::vector<std::string> PertParams::warnings() const {
  std::vector<std::string> out;
  const double gap = std::min({4.0 * d, 8.0 * (J - d), 4.0 * std::abs(J - 2.0 * d)});
  if (Jp > 0.25 * gap) {
    std::ostringstream s;
    s << "J'=" << Jp << " is not small against min{4d, 8(J-d), 4|J-2d|}=" << gap;
    out.push_back(s.str());
  }
  return out;
}

double lambda_z(double r) {
  return (9.0 / r - 8.0 / (r - 3.0) + 2.0 - 24.0 / (r + 1.0) + 1.0 / (2.0 - r)) / 48.0;
}

double gamma_z(double r) { return (9.0 / r + 8.0 / (r - 3.0) - 8.0 - 1.0 / (2.0 - r)) / 48.0; }

EffectiveCoeffs effective_coeffs(double J, double d) {
  if (!(J > 0.0)) throw DomainError("J must be positive");
  const double r = d / J;
  for (double pole : {0.0, 3.0, -1.0, 2.0})
    if (std::abs(r - pole) < 1e-12) throw DomainError("d/J sits on a pole of lambda_z / gamma_z");
  return {lambda_z(r), gamma_z(r), 8.0 * (J - d)};
}

Eigen::Matrix2cd eff_pauli(char axis) {
  Eigen::Matrix2cd s = Eigen::Matrix2cd::Zero();
  switch (axis) {
    case 'I': s = Eigen::Matrix2cd::Identity(); break;
    case 'X': s << 0, 1, 1, 0; break;
    case 'Y': s << 0, cplx(0, 1), cplx(0, -1), 0; break;
    case 'Z': s << -1, 0, 0, 1; break;
    default: throw DomainError("effective Pauli axis must be one of IXYZ");
  }
  return s;
}

Eigen::Matrix4cd eff_two(char left, char right) {
  return kron(eff_pauli(left), eff_pauli(right));
}

Eigen::Matrix4cd effective_hamiltonian(const PertParams& p, EffectiveForm form) {
  const double g = p.Jp * p.Jp / p.J;
  if (form == EffectiveForm::ising_dJ) {
    if (std::abs(p.d - p.J) > 1e-12 * p.J) throw DomainError("ising_dJ form requires d == J");
    return -(g / 3.0) * (eff_two('Z', 'Z') - 0.5 * (eff_two('Z', 'I') + eff_two('I', 'Z')));
  }
  if (p.d == p.J) throw DomainError("full/rwa forms require d != J");
  const auto c = effective_coeffs(p.J, p.d);
  const Eigen::Matrix4cd Zs = eff_two('Z', 'I') + eff_two('I', 'Z');
  Eigen::Matrix4cd H = (c.delta_E / 2.0 - g * c.gamma_z) * Zs;
  if (form == EffectiveForm::rwa) {
    const Eigen::Matrix4cd ss = eff_two('X', 'X') + eff_two('Y', 'Y') + eff_two('Z', 'Z');
    H -= g * (ss / 8.0 + (c.lambda_z - 0.125) * eff_two('Z', 'Z'));
    return H;
  }
  const double k = 1.0 / (4.0 * std::sqrt(3.0));
  H -= g * (0.25 * eff_two('X', 'X') + c.lambda_z * eff_two('Z', 'Z'));
  H -= g * (-k * (eff_two('X', 'Z') + eff_two('Z', 'X')) + k * (eff_two('X', 'I') + eff_two('I', 'X')));
  return H;
}

SpinRegister superplaquette_register() {
  return SpinRegister({"1", "2", "3", "4", "1'", "2'", "3'", "4'"});
}

Mat intra_hamiltonian(const SpinRegister& reg, bool right, double J, double d) {
  const std::array<std::string, 4> left_sites{"1", "2", "3", "4"};
  const std::array<std::string, 4> right_sites{"1'", "2'", "3'", "4'"};
  return heisenberg_on(reg, right ? right_sites : left_sites, PlaquetteCouplings::diag(J, d));
}

Mat coupling_hamiltonian(const SpinRegister& reg, double Jp) {
  return Jp * (pauli_dot(reg, "2", "1'") + pauli_dot(reg, "3", "4'"));
}

Mat superplaquette_hamiltonian(const PertParams& p) {
  const auto reg = superplaquette_register();
  return intra_hamiltonian(reg, false, p.J, p.d) + intra_hamiltonian(reg, true, p.J, p.d) +
         coupling_hamiltonian(reg, p.Jp);
}

Mat product_isometry() {
  const Mat B = logical_basis().box_cross();
  Mat out(256, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) out.col(2 * a + b) = kron(B.col(b), B.col(a));
  return out;
}

double gate_time(const PertParams& p) {
  p.validate();
  const double lz = effective_coeffs(p.J, p.d).lambda_z;
  const double gap = std::abs(lz - 0.125);
  if (gap < 1e-12) throw DomainError("lambda_z = 1/8: the Ising term vanishes and no gate time exists");
  if (!(p.Jp > 0.0)) throw DomainError("gate time needs J' > 0");
  return (2.0 * p.n - 1.0) * std::numbers::pi * p.J / (4.0 * p.Jp * p.Jp * gap);
}

namespace {

Mat plaquette_echo(EchoKind kind) {
  if (kind == EchoKind::ideal) {
    const Mat B = logical_basis().box_cross();
    Eigen::Matrix2cd sx;
    sx << 0, 1, 1, 0;
    return Mat::Identity(16, 16) - B * B.adjoint() + B * sx * B.adjoint();
  }
  // (n_H - n_V)/sqrt3 is perpendicular to the box Bloch vector in the xz plane,
  // so a pi rotation about it swaps box and cross up to phases.
  const double a = 1.0 / std::sqrt(3.0);
  return unitary_evolve(axis_pulse_hamiltonian(a, -a), std::numbers::pi / 2.0);
}

}  // namespace

Mat echo_pulse(EchoKind kind) {
  const Mat x = plaquette_echo(kind);
  return kron(x, x);
}

Mat echo_gate(const PertParams& p, EchoKind kind) {
  const Mat X = echo_pulse(kind);
  const Mat A = unitary_evolve(superplaquette_hamiltonian(p), gate_time(p) / 2.0);
  return X * A * X * A;
}

Eigen::Matrix4cd target_gate(const PertParams& p, GateTarget target) {
  const double t_c = gate_time(p);
  const double lz = effective_coeffs(p.J, p.d).lambda_z;
  const double s = lz > 0.125 ? 1.0 : -1.0;
  const double theta = s * (2.0 * p.n - 1.0) * std::numbers::pi / 4.0;
  // exp(i theta ZZ) = CZ (R x R) up to a global phase, R = diag(1, exp(-2 i theta)).
  const Eigen::Matrix4cd zz = eff_two('Z', 'Z');
  Eigen::Matrix4cd T = Eigen::Matrix4cd::Zero();
  for (int k = 0; k < 4; ++k) T(k, k) = std::exp(cplx(0, theta * zz(k, k).real()));
  if (target == GateTarget::cz_local) return T;
  const double phi_T = p.Jp * p.Jp * t_c / (8.0 * p.J);
  const Eigen::Matrix4cd ss = eff_two('X', 'X') + eff_two('Y', 'Y') + eff_two('Z', 'Z');
  const Eigen::Matrix4cd Ps = (Eigen::Matrix4cd::Identity() - ss) / 4.0;
  const Eigen::Matrix4cd heis = std::exp(cplx(0, phi_T)) * (Eigen::Matrix4cd::Identity() - Ps) +
                                std::exp(cplx(0, -3.0 * phi_T)) * Ps;
  return T * heis;
}

double subspace_fidelity(const Mat& U, const Eigen::Matrix4cd& target) {
  const Mat B = product_isometry();
  const Mat UL = B.adjoint() * U * B;
  return std::norm((target.adjoint() * UL).trace() / 4.0);
}

GateReport gate_fidelity(const PertParams& p, EchoKind kind) {
  GateReport r;
  r.t_c = gate_time(p);
  r.phi_T = p.Jp * p.Jp * r.t_c / (8.0 * p.J);
  r.phi_S = -3.0 * p.Jp * p.Jp * r.t_c / (8.0 * p.J);
  const Mat U = echo_gate(p, kind);
  const Mat B = product_isometry();
  const Mat UL = B.adjoint() * U * B;
  r.fidelity = std::norm((target_gate(p, GateTarget::cz_heisenberg).adjoint() * UL).trace() / 4.0);
  r.fidelity_cz = std::norm((target_gate(p, GateTarget::cz_local).adjoint() * UL).trace() / 4.0);
  r.leakage = std::max(0.0, ((U * B) - B * UL).squaredNorm() / 4.0);
  return r;
}

std::vector<double> allowed_ratios(int n, int m) {
  if (n < 1 || m < 1) throw DomainError("n and m must be positive integers");
  std::vector<double> roots;
  const double shift = (2.0 * n - 1.0) / (16.0 * m);
  for (double target : {0.125 + shift, 0.125 - shift}) {
    auto f = [&](double r) { return lambda_z(r) - target; };
    const double step = 1e-4;
    double a = step, fa = f(a);
    for (double b = a + step; b < 1.0 - 0.5 * step; b += step) {
      const double fb = f(b);
      if ((fa < 0) != (fb < 0)) {
        double lo = a, hi = b, flo = fa;
        while (hi - lo > 1e-12) {
          const double mid = 0.5 * (lo + hi);
          const double fm = f(mid);
          if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        roots.push_back(0.5 * (lo + hi));
      }
      a = b;
      fa = fb;
    }
  }
  if (roots.empty()) throw DomainError("no allowed d/J in (0,1) for this (n, m)");
  std::sort(roots.begin(), roots.end());
  return roots;
}

double validate_effective(const PertParams& p, double horizon, int samples) {
  if (samples < 1 || !(horizon > 0.0)) throw DomainError("validate_effective needs horizon > 0 and samples >= 1");
  const auto full = eig_hermitian(superplaquette_hamiltonian(p));
  const Mat Heff = effective_hamiltonian(p, EffectiveForm::rwa);
  const auto eff = eig_hermitian(Heff);
  const Mat B = product_isometry();
  const Mat VB = full.vectors.adjoint() * B;
  double worst = 0.0;
  for (int k = 1; k <= samples; ++k) {
    const double t = horizon * k / samples;
    Vec ph(full.values.size());
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = std::exp(cplx(0, -full.values(i) * t));
    const Mat Uf = full.vectors * (ph.asDiagonal() * VB);
    const Mat Ue = B * unitary_evolve(eff, t);
    for (int c = 0; c < 4; ++c) {
      const double ov = std::norm(Ue.col(c).dot(Uf.col(c)));
      worst = std::max(worst, 1.0 - ov);
    }
  }
  return worst;
}

const std::vector<Interval>& shadow_regions() {
  static const std::vector<Interval> regions{{0.08, 0.46}, {0.70, 0.95}};
  return regions;
}

bool in_shadow_region(double r) {
  for (const auto& i : shadow_regions())
    if (r >= i.lo - 1e-9 && r <= i.hi + 1e-9) return true;
  return false;
}

}  // namespace dfsq
