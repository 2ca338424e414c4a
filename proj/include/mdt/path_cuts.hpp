#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "mdt/master.hpp"
#include "mdt/milp.hpp"
#include "mdt/tree_topology.hpp"

namespace mdt {

enum class FractionalVariant { I, II, III };

/// s^i_v (plus the s-mass below v for Formulation::Cut) <= q^i_c.
struct PathCut {
  int point;
  int vertex;
  int separator;
  Formulation kind;

  auto key() const { return std::tie(point, vertex, separator); }
  friend bool operator==(const PathCut& a, const PathCut& b) { return a.key() == b.key() && a.kind == b.kind; }
  friend bool operator<(const PathCut& a, const PathCut& b) { return a.key() < b.key(); }
};

struct SeparationCounters {
  long row_evaluations = 0;
};

inline CutRow render(const MasterModel& m, const PathCut& cut, const std::string& family) {
  const auto& L = m.layout;
  Row row;
  row.terms.push_back({L.s(cut.point, cut.vertex), 1.0});
  if (cut.kind == Formulation::Cut) {
    for (int u : m.shape.descendants(cut.vertex)) row.terms.push_back({L.s(cut.point, u), 1.0});
  }
  row.terms.push_back({L.q(cut.point, cut.separator), -1.0});
  row.relation = Relation::LessEqual;
  row.rhs = 0.0;
  return {std::move(row), family};
}

namespace detail {

// Walks every (i, v, c) with v != 1 and c on path(v) minus the root. The
// left-hand side for each (i, v) comes from `lhs(i, v)`; `q(i, c)` supplies
// separator values. `pick` decides which violated separators to keep.
template <class Lhs, class Q, class Pick>
void scan_paths(const TreeShape& shape, int points, Lhs lhs, Q q, Pick pick, SeparationCounters* counters) {
  std::vector<int> path;
  for (int i = 0; i < points; ++i) {
    for (int v = 2; v <= shape.size(); ++v) {
      const double mass = lhs(i, v);
      if (mass <= 0.0) continue;
      path = shape.path_to(v);
      pick(i, v, mass, path, q, counters);
    }
  }
}

// Per-point subtree sums of s for every vertex, bottom-up.
template <class S>
std::vector<double> subtree_mass(const TreeShape& shape, int i, S s) {
  std::vector<double> d(static_cast<std::size_t>(shape.size()) + 1, 0.0);
  for (int v = shape.size(); v >= 1; --v) {
    double total = s(i, v);
    if (shape.is_branch(v)) total += d[static_cast<std::size_t>(2 * v)] + d[static_cast<std::size_t>(2 * v + 1)];
    d[static_cast<std::size_t>(v)] = total;
  }
  return d;
}

}  // namespace detail

/// Every violated path row at an integral solution.
inline std::vector<PathCut> separate_integral(const StructuredSolution& sol, Formulation kind,
                                              SeparationCounters* counters = nullptr) {
  const auto& shape = sol.shape;
  std::vector<PathCut> out;
  auto s = [&](int i, int v) { return static_cast<double>(sol.s[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)]); };
  auto q = [&](int i, int c) { return static_cast<double>(sol.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]); };
  std::vector<double> mass;
  int mass_point = -1;
  auto lhs = [&](int i, int v) {
    if (kind == Formulation::CutW) return s(i, v);
    if (mass_point != i) {
      mass = detail::subtree_mass(shape, i, s);
      mass_point = i;
    }
    return mass[static_cast<std::size_t>(v)];
  };
  auto pick = [&](int i, int v, double m, const std::vector<int>& path, auto& qf, SeparationCounters* cnt) {
    for (std::size_t k = 1; k < path.size(); ++k) {
      if (cnt) ++cnt->row_evaluations;
      if (m - qf(i, path[k]) > 0.5) out.push_back({i, v, path[k], kind});
    }
  };
  detail::scan_paths(shape, sol.points, lhs, q, pick, counters);
  return out;
}

/// Violated path rows at relaxation values `x` (master column order).
inline std::vector<PathCut> separate_fractional(const MasterModel& m, const std::vector<double>& x, Formulation kind,
                                                FractionalVariant variant, double eps = 1e-4,
                                                SeparationCounters* counters = nullptr) {
  const auto& L = m.layout;
  const auto& shape = m.shape;
  std::vector<PathCut> out;
  auto s = [&](int i, int v) { return x[static_cast<std::size_t>(L.s(i, v))]; };
  auto q = [&](int i, int c) { return x[static_cast<std::size_t>(L.q(i, c))]; };
  std::vector<double> mass;
  int mass_point = -1;
  auto lhs = [&](int i, int v) {
    if (kind == Formulation::CutW) return s(i, v);
    if (mass_point != i) {
      mass = detail::subtree_mass(shape, i, s);
      mass_point = i;
    }
    return mass[static_cast<std::size_t>(v)];
  };
  auto pick = [&](int i, int v, double mv, const std::vector<int>& path, auto& qf, SeparationCounters* cnt) {
    int best = -1;
    double best_viol = eps;
    for (std::size_t k = 1; k < path.size(); ++k) {
      if (cnt) ++cnt->row_evaluations;
      const double viol = mv - qf(i, path[k]);
      if (viol <= eps) continue;
      if (variant == FractionalVariant::I) {
        out.push_back({i, v, path[k], kind});
      } else if (variant == FractionalVariant::II) {
        out.push_back({i, v, path[k], kind});
        return;
      } else if (viol > best_viol) {
        best_viol = viol;
        best = path[k];
      }
    }
    if (variant == FractionalVariant::III && best >= 0) out.push_back({i, v, best, kind});
  };
  detail::scan_paths(shape, L.points(), lhs, q, pick, counters);
  return out;
}

/// Integral separation over raw master values (rounded by the caller).
inline std::vector<PathCut> separate_integral(const MasterModel& m, const std::vector<double>& x,
                                              SeparationCounters* counters = nullptr) {
  return separate_integral(extract_solution(m, x), m.kind, counters);
}

}  // namespace mdt
