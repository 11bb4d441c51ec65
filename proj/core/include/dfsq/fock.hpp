#pragma once

#include <array>
#include <map>
#include <utility>
#include <vector>

#include "dfsq/spin.hpp"

namespace dfsq {

enum class Statistics { boson, fermion };

const char* to_string(Statistics s);
Statistics statistics_from_string(const std::string& s);

// Fixes the total occupation of a group of modes.
struct ModeConstraint {
  std::vector<int> modes;
  int count = 0;
};

struct LadderOp {
  int mode = 0;
  bool dagger = false;
};

inline LadderOp cre(int m) { return {m, true}; }
inline LadderOp ann(int m) { return {m, false}; }

// Truncated Fock space over a fixed list of modes. Fermion signs follow the
// Jordan-Wigner ordering of the mode indices. Bosonic modes hold at most `cap`
// particles; states pushed above the cap are dropped.
class FockSpace {
 public:
  using Occupation = std::vector<int>;

  FockSpace(Statistics stats, int n_modes, int cap, std::vector<ModeConstraint> constraints,
            int max_total);

  static FockSpace fixed_number(Statistics stats, int n_modes, int total, int cap);
  static FockSpace up_to(Statistics stats, int n_modes, int max_total, int cap);

  Statistics statistics() const { return stats_; }
  int modes() const { return n_modes_; }
  int cap() const { return cap_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(basis_.size()); }
  const Occupation& occupation(Eigen::Index i) const { return basis_[static_cast<size_t>(i)]; }
  Eigen::Index find(const Occupation& occ) const;

  // Applies ops right to left (operator-product order as written).
  // Returns false when the result vanishes or leaves the space.
  bool apply(const std::vector<LadderOp>& ops, Occupation& occ, double& coef) const;

  Mat monomial(const std::vector<LadderOp>& ops) const;
  Mat number(int mode) const;
  Mat number(const std::vector<int>& modes) const;
  Mat hop(int to, int from) const { return monomial({cre(to), ann(from)}); }
  Mat ladder(int mode, bool dagger) const { return monomial({{mode, dagger}}); }

  // Sum of coefficient * (c^dag_{m1} c^dag_{m2} ...)|vac>, normalized.
  Vec create(const std::vector<std::pair<double, std::vector<int>>>& terms) const;

 private:
  Statistics stats_;
  int n_modes_;
  int cap_;
  std::vector<Occupation> basis_;
  std::map<Occupation, Eigen::Index> index_;
};

// Spin-1/2 operators of one spatial orbital given its (up, down) mode pair.
struct OrbitalSpin {
  Mat x, y, z;
};
OrbitalSpin orbital_spin(const FockSpace& space, const std::vector<std::pair<int, int>>& orbitals);
Mat spin_squared(const OrbitalSpin& s);

}  // namespace dfsq
