#include "dfsq/fock.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "dfsq/errors.hpp"

namespace dfsq {

const char* to_string(Statistics s) { return s == Statistics::boson ? "boson" : "fermion"; }

Statistics statistics_from_string(const std::string& s) {
  if (s == "boson") return Statistics::boson;
  if (s == "fermion") return Statistics::fermion;
  throw DomainError("statistics must be 'boson' or 'fermion'");
}

FockSpace::FockSpace(Statistics stats, int n_modes, int cap, std::vector<ModeConstraint> constraints,
                     int max_total)
    : stats_(stats), n_modes_(n_modes), cap_(stats == Statistics::fermion ? 1 : cap) {
  if (n_modes <= 0 || cap_ <= 0 || max_total < 0) throw DomainError("invalid Fock space shape");
  for (const auto& c : constraints)
    for (int m : c.modes)
      if (m < 0 || m >= n_modes) throw DomainError("constraint mode out of range");

  Occupation occ(static_cast<size_t>(n_modes), 0);
  std::function<void(int, int)> rec = [&](int m, int used) {
    if (m == n_modes) {
      for (const auto& c : constraints) {
        int s = 0;
        for (int k : c.modes) s += occ[static_cast<size_t>(k)];
        if (s != c.count) return;
      }
      index_[occ] = static_cast<Eigen::Index>(basis_.size());
      basis_.push_back(occ);
      return;
    }
    for (int n = 0; n <= cap_ && used + n <= max_total; ++n) {
      occ[static_cast<size_t>(m)] = n;
      rec(m + 1, used + n);
    }
    occ[static_cast<size_t>(m)] = 0;
  };
  rec(0, 0);
}

FockSpace FockSpace::fixed_number(Statistics stats, int n_modes, int total, int cap) {
  std::vector<int> all(static_cast<size_t>(n_modes));
  std::iota(all.begin(), all.end(), 0);
  return FockSpace(stats, n_modes, cap, {{all, total}}, total);
}

FockSpace FockSpace::up_to(Statistics stats, int n_modes, int max_total, int cap) {
  return FockSpace(stats, n_modes, cap, {}, max_total);
}

Eigen::Index FockSpace::find(const Occupation& occ) const {
  auto it = index_.find(occ);
  return it == index_.end() ? -1 : it->second;
}

bool FockSpace::apply(const std::vector<LadderOp>& ops, Occupation& occ, double& coef) const {
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    const auto m = static_cast<size_t>(it->mode);
    int& n = occ[m];
    if (stats_ == Statistics::fermion) {
      int before = 0;
      for (size_t k = 0; k < m; ++k) before += occ[k];
      if (it->dagger == (n == 1)) return false;
      n = it->dagger ? 1 : 0;
      if (before % 2) coef = -coef;
    } else if (it->dagger) {
      if (n + 1 > cap_) return false;
      coef *= std::sqrt(static_cast<double>(n + 1));
      ++n;
    } else {
      if (n == 0) return false;
      coef *= std::sqrt(static_cast<double>(n));
      --n;
    }
  }
  return true;
}

Mat FockSpace::monomial(const std::vector<LadderOp>& ops) const {
  for (const auto& op : ops)
    if (op.mode < 0 || op.mode >= n_modes_) throw DomainError("ladder operator mode out of range");
  Mat out = Mat::Zero(dim(), dim());
  for (Eigen::Index col = 0; col < dim(); ++col) {
    Occupation occ = basis_[static_cast<size_t>(col)];
    double coef = 1.0;
    if (!apply(ops, occ, coef)) continue;
    const Eigen::Index row = find(occ);
    if (row >= 0) out(row, col) += coef;
  }
  return out;
}

Mat FockSpace::number(int mode) const { return monomial({cre(mode), ann(mode)}); }

Mat FockSpace::number(const std::vector<int>& modes) const {
  Mat out = Mat::Zero(dim(), dim());
  for (int m : modes) out += number(m);
  return out;
}

Vec FockSpace::create(const std::vector<std::pair<double, std::vector<int>>>& terms) const {
  Vec v = Vec::Zero(dim());
  for (const auto& [c, modes] : terms) {
    Occupation occ(static_cast<size_t>(n_modes_), 0);
    std::vector<LadderOp> ops;
    for (int m : modes) ops.push_back(cre(m));
    double coef = c;
    if (!apply(ops, occ, coef)) continue;
    const Eigen::Index i = find(occ);
    if (i < 0) throw DomainError("created state lies outside the Fock space");
    v(i) += coef;
  }
  const double n = v.norm();
  if (n < 1e-14) throw DomainError("created state vanishes");
  return v / n;
}

OrbitalSpin orbital_spin(const FockSpace& space, const std::vector<std::pair<int, int>>& orbitals) {
  const Eigen::Index d = space.dim();
  OrbitalSpin s{Mat::Zero(d, d), Mat::Zero(d, d), Mat::Zero(d, d)};
  for (auto [u, dn] : orbitals) {
    const Mat up_dn = space.hop(u, dn);
    const Mat dn_up = space.hop(dn, u);
    s.x += 0.5 * (up_dn + dn_up);
    s.y += cplx(0, -0.5) * (up_dn - dn_up);
    s.z += 0.5 * (space.number(u) - space.number(dn));
  }
  return s;
}

Mat spin_squared(const OrbitalSpin& s) { return s.x * s.x + s.y * s.y + s.z * s.z; }

}  // namespace dfsq
