#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "dfsq/fock.hpp"
#include "dfsq/spin.hpp"

namespace dfsq {

// Sites 1..4 run around the plaquette: (1,2) and (3,4) are the horizontal
// bonds, (2,3) and (4,1) the vertical ones, (1,3) and (2,4) the diagonals.
SpinRegister plaquette_register();

using SitePair = std::pair<std::string, std::string>;

// Product of two-site singlets (|ud> - |du>)/sqrt2 covering every site once.
Vec singlet_pairs(const SpinRegister& reg, const std::vector<SitePair>& pairs);

struct PlaquetteBasis {
  Vec psi_H, psi_V;       // singlets on (1,2)(3,4) and (2,3)(4,1)
  Vec ket0, ket1;         // orthonormal logical states, ket0 = psi_V
  Vec ket_box, ket_cross; // eigenstates of the diagonal-coupled plaquette
  Mat logical_projector;  // rank 2
  Mat isometry() const;   // 16x2, columns ket0, ket1
  Mat box_cross() const;  // 16x2, columns ket_box, ket_cross
};

const PlaquetteBasis& logical_basis();

// Bloch axes in the (|0>, |1>) basis.
Eigen::Vector3d axis_H();
Eigen::Vector3d axis_V();
Eigen::Vector3d axis_C();

struct PlaquetteCouplings {
  double j12 = 0, j23 = 0, j34 = 0, j41 = 0, j13 = 0, j24 = 0;

  // Superexchange form -J_H(s1.s2 + s3.s4) - J_V(s2.s3 + s4.s1).
  static PlaquetteCouplings rect(double J_H, double J_V);
  // J on the four edges, d on both diagonals (positive signs).
  static PlaquetteCouplings diag(double J, double d);
};

// sum c_ij s_i.s_j on the four given sites of reg (defaults to a bare plaquette).
Mat heisenberg_plaquette(const PlaquetteCouplings& c);
Mat heisenberg_on(const SpinRegister& reg, const std::array<std::string, 4>& sites,
                  const PlaquetteCouplings& c);

struct SpectrumLevel {
  double energy;
  int total_spin;   // S
  int degeneracy;   // number of states in this multiplet group
};

// Levels of heisenberg_plaquette(diag(J, d)) shifted by +(4J + 2d), i.e. measured
// from the midpoint of the two singlets. Sorted by energy.
std::vector<SpectrumLevel> plaquette_spectrum(double J, double d);

// P^dag op P in the orthonormal (|0>, |1>) basis.
Eigen::Matrix2cd logical_restriction(const Mat& op);

enum class PrepareMode { two_step, one_step };

// Runs the superexchange pulse sequence from |0> = |Psi_V>. `duration_scale`
// multiplies every pulse duration (0 gives zero-length pulses).
Vec prepare_plus(PrepareMode mode, double duration_scale = 1.0);
Vec plus_state();

// Pulse Hamiltonian whose singlet-subspace restriction is a*n_H.sigma + b*n_V.sigma
// up to a constant.
Mat axis_pulse_hamiltonian(double a, double b);

// Lowest k + 2 with pi/k > min(eta, pi - eta) >= pi/(k+1).
int rotation_step_bound(const Eigen::Vector3d& axis1, const Eigen::Vector3d& axis2);

struct HubbardGap {
  double exact_gap;         // E(lowest triplet) - E(lowest singlet)
  double perturbative_gap;  // +4t^2/U for fermions, -4t^2/U for bosons
};

HubbardGap superexchange_hubbard_check(double t, double U, Statistics stats);

}  // namespace dfsq
