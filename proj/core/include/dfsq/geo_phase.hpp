#pragma once

#include <array>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "dfsq/fock.hpp"

namespace dfsq {

using Rational = boost::rational<long long>;

std::string format_rational(const Rational& r);  // "a/b", or "a" when b == 1
Rational parse_rational(const std::string& s);

// Energies are in units of the tunneling rate unless t is changed.
struct OnsiteParams {
  double mu_L = 1000.0;
  double mu_R = 0.0;
  double omega = 1000.0;
  double U_L_aa = 150.0;
  double U_R_aa = 60.0;
  double U_R_bb = 55.0;
  double U_R_ab = 50.0;
  double t = 1.0;

  double delta() const { return mu_L - mu_R; }
  void validate() const;
  std::vector<std::string> warnings() const;  // omega < 10 U_R_ab
  // Same parameters with mu_L moved so that delta() is the resonant bias
  // (omega for bosons, omega + U_R_ab for fermions).
  OnsiteParams at_resonant_bias(Statistics s) const;
};

// Before tunneling the left site holds n_L ground-band particles and the
// right site n_R_a; afterwards one particle sits in the right excited band
// and the right site has total spin j_R.
struct NumberConfig {
  int n_L = 1;
  int n_R_a = 0;
  int n_R_b = 1;
  Rational j_R{1, 2};
};
void validate(const NumberConfig& c, Statistics s);

// delta_E1 = c0 (Delta - omega) + c1 U_L_aa + c2 U_R_ab
struct EnergyLedgerEntry {
  Statistics statistics = Statistics::boson;
  NumberConfig config;
  Rational c0, c1, c2;
  bool resonant = false;

  double value(const OnsiteParams& p) const;
};

// 2 n_a n_b - ((n_a+n_b)/2)((n_a+n_b)/2 + 1) + j(j+1)
Rational boson_f(int n_a, int n_b, const Rational& j);

// (3 - 4j) when n_a = n_b = 1, else 0.
int fermion_eta(int n_a, int n_b, const Rational& j);

EnergyLedgerEntry ledger_entry(const NumberConfig& c, Statistics s);

struct DeltaE1 {
  double energy;
  EnergyLedgerEntry entry;
};

// Energy of the configuration before one particle tunnels L -> R(b) minus the
// energy after, from the closed on-site energy formulas.
DeltaE1 delta_e1(const NumberConfig& c, const OnsiteParams& p, Statistics s);

// Row set of the bosonic and fermionic ledgers.
std::vector<NumberConfig> table_configs(Statistics s);

// Every table row with resonant = |delta_E1| <= threshold * t.
std::vector<EnergyLedgerEntry> resonance_table(const OnsiteParams& p, Statistics s, double threshold = 1e-9);

// Columns: statistics,n_L,n_R_a,j_R,c0,c1,c2,resonant
std::string ledger_csv(const std::vector<EnergyLedgerEntry>& rows);

// Printed table values at the table's bias: delta_E1 = c1 U_L_aa + c2 U_R_ab.
struct PublishedRow {
  NumberConfig config;
  Rational c1, c2;
};
std::vector<PublishedRow> published_table(Statistics s);

// Six modes of one link: left ground band, right ground band, right excited band.
struct LinkModes {
  int L_up = 0, L_dn = 1;
  int Ra_up = 2, Ra_dn = 3;
  int Rb_up = 4, Rb_dn = 5;
};

// Fock space of a single link at fixed total particle number.
FockSpace two_band_space(Statistics s, int total);

// H_L + H_R for one link. The energy non-conserving pair conversion
// b^dag b^dag a a (+ h.c.) is excluded unless requested.
Mat onsite_hamiltonian(const OnsiteParams& p, Statistics s, const FockSpace& space, const LinkModes& m = {},
                       bool non_conserving = false);

// -t sum_sigma (a^dag_{L,sigma} b_{R,sigma} + h.c.)
Mat tunneling_hamiltonian(double t, const FockSpace& space, const LinkModes& m = {});

// Spread of on-site energies in the sector (n_L, n_R_a, n_R_b, j_R).
struct SectorEnergy {
  double lo, hi;
};
SectorEnergy onsite_sector_energy(const OnsiteParams& p, Statistics s, int n_L, int n_R_a, int n_R_b,
                                  const Rational& j_R);

// Modes a_up, a_dn, b_up, b_dn on a bosonic space. Returns the largest entry of
// sum a^dag_s b^dag_s' b_s a_s' - [n_a n_b + J^2 - (n/2)(n/2 + 1)].
double schwinger_identity_check(const FockSpace& space);

enum class PairState { singlet, triplet };

// Spin state of (2,3) and of (1',4') before the tilt.
struct Sector {
  PairState left = PairState::singlet;
  PairState right = PairState::singlet;
};
std::string to_string(const Sector& s);  // "SS", "ST", "TS", "TT"
Sector sector_from_string(const std::string& s);
std::array<Sector, 4> all_sectors();

struct LinkOccupation {
  int n_L = 0;
  int n_R_a = 0;
};

// Occupations after the tilt for the links 2 -> 1' and 3 -> 4'. Singlet pairs
// of bosons (triplet pairs of fermions) stay one per site; the other pair
// state leaves both particles on the lower site (3 or 4').
std::array<LinkOccupation, 2> sector_links(const Sector& sec, Statistics s);

// First return of a resonant two-level Rabi cycle at rate t.
double resonant_return_time(double t);

struct TunnelingResult {
  Sector sector;
  std::array<LinkOccupation, 2> links;
  double return_time = 0.0;
  double phase = 0.0;    // in (-pi, pi], relative to evolution with t = 0
  double leakage = 0.0;  // 1 - weighted return probability
  std::array<double, 2> link_phase{};  // phase with only that link tunneling
  bool resonant = false;
  double min_detuning = 0.0;  // smallest |delta_E1| over off-resonant channels, 0 if none
};

// Off-resonant leakage <= kLeakageConstant (t / min_detuning)^2. A detuned
// Rabi channel loses at most 4 |M|^2 (t / delta)^2 with |M|^2 <= 2 for
// bosons, and two links can leak at once.
inline constexpr double kLeakageConstant = 16.0;

// Evolves both links from the post-tilt state of the sector. Triplet pairs
// enter as equal mixtures of their m components. time < 0 selects
// resonant_return_time(p.t).
TunnelingResult tunneling_phase(const Sector& sec, const OnsiteParams& p, Statistics s, double time = -1.0);

}  // namespace dfsq
