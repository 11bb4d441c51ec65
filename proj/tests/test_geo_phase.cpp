#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "dfsq/errors.hpp"
#include "dfsq/geo_phase.hpp"
#include "testing.hpp"

using namespace dfsq;
using dfsq::testing::max_abs;
using R = Rational;

namespace {

const double kPi = std::numbers::pi;

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

double wrap(double a) { return std::remainder(a, 2 * kPi); }

OnsiteParams resonant(Statistics s) { return OnsiteParams{}.at_resonant_bias(s); }

R band_spin(int n, Statistics s) {
  if (s == Statistics::boson) return R(n, 2);
  return n == 1 ? R(1, 2) : R(0);
}

}  // namespace

TEST(Rational, FormatAndParse) {
  EXPECT_EQ(format_rational(R(3, 2)), "3/2");
  EXPECT_EQ(format_rational(R(-4)), "-4");
  EXPECT_EQ(format_rational(R(2, 4)), "1/2");
  EXPECT_TRUE(parse_rational("3/2") == R(3, 2));
  EXPECT_TRUE(parse_rational("-1") == R(-1));
  EXPECT_THROW(parse_rational("x"), DomainError);
}

TEST(BosonF, ClosedFormCases) {
  for (int n = 0; n <= 6; ++n) {
    EXPECT_TRUE(boson_f(n, 0, R(n, 2)) == R(0)) << n;
    EXPECT_TRUE(boson_f(n, 1, R(n + 1, 2)) == R(2 * n)) << n;
    if (n >= 1) EXPECT_TRUE(boson_f(n, 1, R(n - 1, 2)) == R(n - 1)) << n;
    // stretched and next-to-stretched spins with two b bosons
    if (n >= 1) EXPECT_TRUE(boson_f(n, 2, R(n, 2)) == R(3 * n - 2)) << n;
    if (n >= 2) EXPECT_TRUE(boson_f(n, 2, R(n - 2, 2)) == R(2 * n - 2)) << n;
  }
  EXPECT_THROW(boson_f(1, 1, R(2)), DomainError);
}

TEST(FermionEta, SingletAndTriplet) {
  EXPECT_EQ(fermion_eta(1, 1, R(0)), 3);
  EXPECT_EQ(fermion_eta(1, 1, R(1)), -1);
  EXPECT_EQ(fermion_eta(2, 1, R(1, 2)), 0);
  EXPECT_EQ(fermion_eta(0, 1, R(1, 2)), 0);
}

TEST(Config, Validation) {
  EXPECT_THROW(validate(NumberConfig{1, 1, 1, R(3, 2)}, Statistics::boson), DomainError);
  EXPECT_THROW(validate(NumberConfig{0, 1, 1, R(0)}, Statistics::boson), DomainError);
  EXPECT_THROW(validate(NumberConfig{1, 2, 1, R(3, 2)}, Statistics::fermion), DomainError);
  EXPECT_NO_THROW(validate(NumberConfig{1, 2, 1, R(3, 2)}, Statistics::boson));
}

TEST(Ledger, TableExamples) {
  auto pb = resonant(Statistics::boson);
  EXPECT_NEAR(delta_e1({1, 1, 1, R(1)}, pb, Statistics::boson).energy, -2 * pb.U_R_ab, 1e-9);
  EXPECT_NEAR(delta_e1({2, 2, 1, R(3, 2)}, pb, Statistics::boson).energy, -4 * pb.U_R_ab + 2 * pb.U_L_aa, 1e-9);
  auto pf = resonant(Statistics::fermion);
  EXPECT_NEAR(delta_e1({1, 2, 1, R(1, 2)}, pf, Statistics::fermion).energy, 0.0, 1e-9);
}

TEST(Ledger, CoefficientsReproduceFormula) {
  OnsiteParams p;
  p.mu_L = 1013.7;
  p.U_L_aa = 17.3;
  p.U_R_ab = 9.1;
  for (auto s : {Statistics::boson, Statistics::fermion})
    for (const auto& c : table_configs(s)) {
      auto d = delta_e1(c, p, s);
      EXPECT_NEAR(d.entry.value(p), d.energy, 1e-12 * 1000);
    }
}

TEST(Ledger, MatchesHamiltonianSpectra) {
  OnsiteParams p;
  p.mu_L = 1031.0;
  p.mu_R = 4.0;
  for (auto s : {Statistics::boson, Statistics::fermion})
    for (const auto& c : table_configs(s)) {
      auto before = onsite_sector_energy(p, s, c.n_L, c.n_R_a, 0, band_spin(c.n_R_a, s));
      auto after = onsite_sector_energy(p, s, c.n_L - 1, c.n_R_a, 1, c.j_R);
      EXPECT_NEAR(before.hi - before.lo, 0.0, 1e-10);
      EXPECT_NEAR(after.hi - after.lo, 0.0, 1e-10);
      EXPECT_NEAR(before.lo - after.lo, delta_e1(c, p, s).energy, 1e-10)
          << to_string(s) << " " << c.n_L << c.n_R_a << " " << format_rational(c.j_R);
    }
}

TEST(Ledger, BosonFMatchesSpectra) {
  OnsiteParams p;
  for (int na = 0; na <= 2; ++na)
    for (int nb = 0; nb <= 2; ++nb)
      for (R j = R(std::abs(na - nb), 2); j <= R(na + nb, 2); j += R(1)) {
        auto e = onsite_sector_energy(p, Statistics::boson, 0, na, nb, j);
        double expect = p.mu_R * (na + nb) + p.omega * nb + 0.5 * p.U_R_aa * na * (na - 1) +
                        0.5 * p.U_R_bb * nb * (nb - 1) + p.U_R_ab * boost::rational_cast<double>(boson_f(na, nb, j));
        EXPECT_NEAR(e.lo, expect, 1e-10);
        EXPECT_NEAR(e.hi, expect, 1e-10);
      }
}

TEST(Ledger, FermionEtaFromSpectra) {
  OnsiteParams p;
  auto singlet = onsite_sector_energy(p, Statistics::fermion, 0, 1, 1, R(0));
  auto triplet = onsite_sector_energy(p, Statistics::fermion, 0, 1, 1, R(1));
  // (U_ab / 2)(eta_S - eta_T) with eta_S = 3, eta_T = -1
  EXPECT_NEAR(singlet.lo - triplet.lo, 2 * p.U_R_ab, 1e-10);
}

TEST(Ledger, GoldenFiles) {
  for (auto [s, file] : {std::pair{Statistics::boson, "ledger_boson.csv"}, {Statistics::fermion, "ledger_fermion.csv"}}) {
    const std::string golden = slurp(std::string(DFSQ_GOLDEN_DIR) + "/" + file);
    ASSERT_FALSE(golden.empty()) << file;
    EXPECT_EQ(ledger_csv(resonance_table(resonant(s), s)), golden) << file;
  }
}

TEST(Ledger, ResonantSets) {
  auto b = resonance_table(resonant(Statistics::boson), Statistics::boson);
  std::vector<std::string> keys;
  for (const auto& e : b)
    if (e.resonant) keys.push_back(std::to_string(e.config.n_L) + std::to_string(e.config.n_R_a) + format_rational(e.config.j_R));
  EXPECT_EQ(keys, (std::vector<std::string>{"101/2", "110"}));
  keys.clear();
  for (const auto& e : resonance_table(resonant(Statistics::fermion), Statistics::fermion))
    if (e.resonant) keys.push_back(std::to_string(e.config.n_L) + std::to_string(e.config.n_R_a));
  EXPECT_EQ(keys, (std::vector<std::string>{"12"}));
}

TEST(Ledger, DetunedBiasHasNoResonance) {
  for (auto s : {Statistics::boson, Statistics::fermion}) {
    auto p = resonant(s);
    p.mu_L += 10 * p.U_L_aa + 0.37;
    for (const auto& e : resonance_table(p, s)) EXPECT_FALSE(e.resonant);
  }
}

TEST(Ledger, PublishedBosonTable) {
  auto p = resonant(Statistics::boson);
  auto pub = published_table(Statistics::boson);
  auto rows = resonance_table(p, Statistics::boson);
  ASSERT_EQ(pub.size(), rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    EXPECT_TRUE(rows[i].c1 == pub[i].c1);
    EXPECT_TRUE(rows[i].c2 == pub[i].c2);
  }
}

TEST(Ledger, PublishedFermionTableDiffersOnlyForDoublyOccupiedLeft) {
  // At the fermion bias delta_E1 = c1 U_L + (c2 + 1) U_ab. The printed values for
  // n_L = 2 do not follow from the on-site energies; the n_L = 1 rows agree.
  auto pub = published_table(Statistics::fermion);
  auto rows = resonance_table(resonant(Statistics::fermion), Statistics::fermion);
  ASSERT_EQ(pub.size(), rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const bool agree = rows[i].c1 == pub[i].c1 && rows[i].c2 + R(1) == pub[i].c2;
    EXPECT_EQ(agree, rows[i].config.n_L == 1) << rows[i].config.n_L << rows[i].config.n_R_a;
  }
}

TEST(Onsite, Symmetries) {
  for (auto s : {Statistics::boson, Statistics::fermion})
    for (bool nc : {false, true}) {
      auto sp = FockSpace::up_to(s, 6, 3, s == Statistics::boson ? 3 : 1);
      OnsiteParams p;
      p.omega = 300;
      Mat H = onsite_hamiltonian(p, s, sp, {}, nc);
      EXPECT_LE(hermiticity_defect(H), 1e-12);
      Mat N = sp.number({0, 1, 2, 3, 4, 5});
      EXPECT_LE(max_abs(commutator(H, N)), 1e-10);
      auto S = orbital_spin(sp, {{0, 1}, {2, 3}, {4, 5}});
      EXPECT_LE(max_abs(commutator(H, S.x)), 1e-10);
      EXPECT_LE(max_abs(commutator(H, S.y)), 1e-10);
      EXPECT_LE(max_abs(commutator(H, S.z)), 1e-10);
    }
}

TEST(Onsite, SingleParticleLevels) {
  OnsiteParams p;
  p.mu_L = 7.0;
  p.mu_R = 2.0;
  for (auto s : {Statistics::boson, Statistics::fermion}) {
    auto sp = two_band_space(s, 1);
    auto e = eig_hermitian(onsite_hamiltonian(p, s, sp)).values;
    EXPECT_NEAR(e(0), p.mu_R, 1e-12);
    EXPECT_NEAR(e(2), p.mu_L, 1e-12);
    EXPECT_NEAR(e(4), p.mu_R + p.omega, 1e-12);
  }
}

TEST(Onsite, Warnings) {
  OnsiteParams p;
  EXPECT_TRUE(p.warnings().empty());
  p.omega = 400;
  EXPECT_FALSE(p.warnings().empty());
}

TEST(Schwinger, Identity) {
  EXPECT_LE(schwinger_identity_check(FockSpace::up_to(Statistics::boson, 4, 2, 2)), 1e-12);
  EXPECT_LE(schwinger_identity_check(FockSpace::fixed_number(Statistics::boson, 4, 0, 2)), 1e-15);
  EXPECT_LE(schwinger_identity_check(FockSpace::fixed_number(Statistics::boson, 4, 1, 2)), 1e-15);
  EXPECT_LE(schwinger_identity_check(FockSpace::fixed_number(Statistics::boson, 4, 3, 3)), 1e-12);
  EXPECT_THROW(schwinger_identity_check(FockSpace::up_to(Statistics::fermion, 4, 2, 1)), DomainError);
}

TEST(Sectors, Mapping) {
  EXPECT_EQ(to_string(sector_from_string("ST")), "ST");
  EXPECT_THROW(sector_from_string("SX"), DomainError);
  auto l = sector_links(sector_from_string("ST"), Statistics::boson);
  EXPECT_EQ(l[0].n_L, 1);
  EXPECT_EQ(l[0].n_R_a, 0);
  EXPECT_EQ(l[1].n_L, 1);
  EXPECT_EQ(l[1].n_R_a, 2);
  auto f = sector_links(sector_from_string("ST"), Statistics::fermion);
  EXPECT_EQ(f[1].n_L, 2);
  EXPECT_EQ(f[0].n_R_a, 1);
}

TEST(ReturnTime, RabiHalfPeriod) {
  EXPECT_NEAR(resonant_return_time(1.0), kPi, 1e-9);
  EXPECT_NEAR(resonant_return_time(2.5), kPi / 2.5, 1e-9);
  EXPECT_THROW(resonant_return_time(0.0), DomainError);
}

TEST(Dynamics, ResonantLinkPhaseIsPi) {
  for (double t : {1.0, 0.5}) {
    auto p = resonant(Statistics::boson);
    p.t = t;
    auto r = tunneling_phase(sector_from_string("ST"), p, Statistics::boson);
    EXPECT_TRUE(r.resonant);
    EXPECT_NEAR(r.return_time, kPi / t, 1e-9);
    EXPECT_LE(std::abs(wrap(r.link_phase[0] - kPi)), 1e-2);
  }
}

TEST(Dynamics, SingletSectorPhaseIsTrivial) {
  // each link sees an equal mixture of pair spins, so the resonant pi does not survive the average
  auto r = tunneling_phase(sector_from_string("SS"), resonant(Statistics::boson), Statistics::boson);
  EXPECT_TRUE(r.resonant);
  EXPECT_LE(std::abs(wrap(r.phase)), 0.1);
}

TEST(Dynamics, OffResonantSectors) {
  const std::vector<std::pair<Statistics, std::string>> cases{{Statistics::boson, "TS"},
                                                               {Statistics::boson, "TT"},
                                                               {Statistics::fermion, "SS"},
                                                               {Statistics::fermion, "ST"},
                                                               {Statistics::fermion, "TT"}};
  for (const auto& [s, name] : cases) {
    auto p = resonant(s);
    auto r = tunneling_phase(sector_from_string(name), p, s);
    EXPECT_FALSE(r.resonant) << name;
    ASSERT_GT(r.min_detuning, 0.0);
    EXPECT_LE(std::abs(wrap(r.phase)), 0.1) << name;
    EXPECT_LE(r.leakage, kLeakageConstant * std::pow(p.t / r.min_detuning, 2)) << name;
  }
}
