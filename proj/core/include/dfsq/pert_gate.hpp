#pragma once

#include <string>
#include <vector>

#include "dfsq/spin.hpp"

namespace dfsq {

struct PertParams {
  double J = 1.0;
  double d = 0.3;
  double Jp = 0.1;  // J'
  int n = 1;
  int m = 1;

  // Throws DomainError on J <= 0, d outside (0, J), Jp < 0, n or m < 1.
  void validate() const;
  // Non-fatal notes, e.g. J' not small against the singlet gaps.
  std::vector<std::string> warnings() const;
};

double lambda_z(double r);  // r = d/J
double gamma_z(double r);

struct EffectiveCoeffs {
  double lambda_z;
  double gamma_z;
  double delta_E;  // E(cross) - E(box) = 8(J - d)
};

EffectiveCoeffs effective_coeffs(double J, double d);

// Effective two-qubit operators. One qubit is ordered (|box>, |cross>) with
// sigma_z = diag(-1, +1); the two-qubit index is 2*left + right.
Eigen::Matrix2cd eff_pauli(char axis);
Eigen::Matrix4cd eff_two(char left, char right);

enum class EffectiveForm { full, rwa, ising_dJ };

// full and rwa act on (|box>,|cross>)^2. ising_dJ (needs d == J) acts on the
// logical (|0>,|1>)^2 basis with sigma~_z = diag(-1, +1), i.e. +1 on |1>.
Eigen::Matrix4cd effective_hamiltonian(const PertParams& p, EffectiveForm form);

// Sites 1..4 (left plaquette, bits 0..3) and 1'..4' (right, bits 4..7).
SpinRegister superplaquette_register();
Mat intra_hamiltonian(const SpinRegister& reg, bool right, double J, double d);
Mat coupling_hamiltonian(const SpinRegister& reg, double Jp);
Mat superplaquette_hamiltonian(const PertParams& p);

// 256x4 isometry onto (|box>,|cross>)_left x (|box>,|cross>)_right, column 2a+b.
Mat product_isometry();

double gate_time(const PertParams& p);

enum class EchoKind {
  ideal,         // sigma_x on {box, cross}, identity on the complement
  superexchange  // pi pulse of a single superexchange Hamiltonian per plaquette
};

Mat echo_pulse(EchoKind kind);  // 256x256, acts on both plaquettes
Mat echo_gate(const PertParams& p, EchoKind kind = EchoKind::ideal);

enum class GateTarget {
  cz_heisenberg,  // CZ + local z corrections + the known sigma.sigma phase
  cz_local        // CZ + local z corrections only
};

Eigen::Matrix4cd target_gate(const PertParams& p, GateTarget target);

struct GateReport {
  double t_c = 0;
  double phi_T = 0;
  double phi_S = 0;
  double fidelity = 0;     // against GateTarget::cz_heisenberg
  double fidelity_cz = 0;  // against GateTarget::cz_local
  double leakage = 0;      // ||(1-P) U P||_F^2 / 4
};

GateReport gate_fidelity(const PertParams& p, EchoKind kind = EchoKind::ideal);

// Fidelity of an arbitrary 256x256 gate against a 4x4 target on the product subspace.
double subspace_fidelity(const Mat& U, const Eigen::Matrix4cd& target);

// d/J in (0,1) with lambda_z = 1/8 +- (2n-1)/(16m), ascending.
std::vector<double> allowed_ratios(int n, int m);

// Max state infidelity between full and rwa-effective evolution of the four
// product basis states over `samples` equally spaced times in (0, horizon].
double validate_effective(const PertParams& p, double horizon, int samples = 200);

struct Interval {
  double lo, hi;
};

// d/J intervals where 3 J'max <= min{4d, 8(J-d), 4|J-2d|} and |lambda_z - 1/8| >= 0.02,
// with J'max = 0.1 J, rounded to the 0.01 sweep grid.
const std::vector<Interval>& shadow_regions();
bool in_shadow_region(double r);

}  // namespace dfsq
