#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mdt/error.hpp"
#include "mdt/lp.hpp"
#include "mdt/master.hpp"
#include "mdt/milp.hpp"

namespace mdt {

enum class Side { Left, Right };

struct SideAssignment {
  int vertex = 0;
  std::vector<int> left;
  std::vector<int> right;
};

inline SideAssignment build_sides(const StructuredSolution& sol, int v) {
  if (!sol.shape.contains(v)) throw Error(Errc::InvalidVertex, "vertex " + std::to_string(v) + " outside the tree");
  if (!sol.shape.is_branch(v)) throw Error(Errc::NoChildren, "vertex " + std::to_string(v) + " is a leaf");
  SideAssignment sides;
  sides.vertex = v;
  const auto l = static_cast<std::size_t>(2 * v), r = l + 1;
  for (int i = 0; i < sol.points; ++i) {
    const auto& q = sol.q[static_cast<std::size_t>(i)];
    if (q[l] == 1) sides.left.push_back(i);
    if (q[r] == 1) sides.right.push_back(i);
  }
  return sides;
}

struct SupportEntry {
  int point;
  Side side;
  friend bool operator<(const SupportEntry& a, const SupportEntry& b) {
    return a.point != b.point ? a.point < b.point : a.side < b.side;
  }
  friend bool operator==(const SupportEntry& a, const SupportEntry& b) { return a.point == b.point && a.side == b.side; }
};

struct SeparabilityResult {
  bool separable = true;
  std::vector<SupportEntry> support;  // sorted; empty when separable
};

/// Decides whether the two sides admit a unit-margin hyperplane by testing
/// whether their convex hulls meet. When they do, the support of an optimal
/// basic solution of the weighted hull-intersection LP is returned.
inline SeparabilityResult check_separable(const SideAssignment& sides, const std::vector<std::vector<double>>& X,
                                          const std::vector<double>& weights) {
  SeparabilityResult res;
  if (sides.left.empty() || sides.right.empty()) return res;
  if (weights.size() != X.size()) throw Error(Errc::DimensionMismatch, "weight count differs from point count");
  const std::size_t F = X.empty() ? 0 : X.front().size();
  for (const auto* side : {&sides.left, &sides.right}) {
    for (int i : *side) {
      if (i < 0 || static_cast<std::size_t>(i) >= X.size()) throw Error(Errc::DimensionMismatch, "side references unknown point");
      if (X[static_cast<std::size_t>(i)].size() != F) throw Error(Errc::DimensionMismatch, "ragged feature matrix");
    }
  }
  LinearProgram lp;
  lp.sense = Sense::Minimize;
  std::vector<SupportEntry> cols;
  for (int i : sides.left) {
    lp.add_variable(0.0, kInf, weights[static_cast<std::size_t>(i)]);
    cols.push_back({i, Side::Left});
  }
  for (int i : sides.right) {
    lp.add_variable(0.0, kInf, weights[static_cast<std::size_t>(i)]);
    cols.push_back({i, Side::Right});
  }
  for (std::size_t f = 0; f < F; ++f) {
    std::vector<Term> terms;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double v = X[static_cast<std::size_t>(cols[j].point)][f];
      if (v != 0.0) terms.push_back({static_cast<int>(j), cols[j].side == Side::Left ? v : -v});
    }
    lp.add_row(std::move(terms), Relation::Equal, 0.0);
  }
  std::vector<Term> left_sum, right_sum;
  for (std::size_t j = 0; j < cols.size(); ++j) (cols[j].side == Side::Left ? left_sum : right_sum).push_back({static_cast<int>(j), 1.0});
  lp.add_row(std::move(left_sum), Relation::Equal, 1.0);
  lp.add_row(std::move(right_sum), Relation::Equal, 1.0);
  const auto out = solve_lp(lp);
  if (out.status != LPStatus::Optimal) return res;
  res.separable = false;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (out.x[j] > 1e-7) res.support.push_back(cols[j]);
  }
  std::sort(res.support.begin(), res.support.end());
  return res;
}

struct ShatteringCut {
  int vertex;
  std::vector<SupportEntry> support;
};

inline CutRow render(const MasterModel& m, const ShatteringCut& cut) {
  const auto& L = m.layout;
  Row row;
  for (const auto& e : cut.support) {
    const int child = e.side == Side::Left ? 2 * cut.vertex : 2 * cut.vertex + 1;
    row.terms.push_back({L.q(e.point, child), 1.0});
  }
  row.relation = Relation::LessEqual;
  row.rhs = static_cast<double>(cut.support.size()) - 1.0;
  return {std::move(row), "shattering"};
}

struct ShatteringCounters {
  long checks = 0;        // P_v solves
  long mis_found = 0;     // infeasible subsystems returned
  long repeated = 0;      // supports seen again within one vertex's rounds
  long duplicates = 0;    // supports already emitted for an earlier candidate
};

/// Emits shattering cuts at integral candidates, keeping per-point weights
/// across calls so that later rounds steer away from frequently used points.
class ShatteringGenerator {
 public:
  explicit ShatteringGenerator(int points, int rounds = 3) : weights_(static_cast<std::size_t>(points), 1.0), rounds_(rounds) {
    if (rounds < 1) throw Error(Errc::OutOfRange, "MIS rounds must be at least 1");
  }

  const std::vector<double>& weights() const noexcept { return weights_; }
  const ShatteringCounters& counters() const noexcept { return counters_; }

  /// Branching vertices of the candidate (b = 1, p = 0, w = 0).
  static std::vector<int> vertices_to_check(const StructuredSolution& sol) {
    std::vector<int> out;
    for (int v = 1; v < sol.shape.first_leaf(); ++v) {
      if (sol.is_branching(v)) out.push_back(v);
    }
    return out;
  }

  std::vector<ShatteringCut> generate(const StructuredSolution& sol, const std::vector<int>& vertices,
                                      const std::vector<std::vector<double>>& X) {
    std::vector<ShatteringCut> out;
    for (int v : vertices) {
      const auto sides = build_sides(sol, v);
      std::set<std::vector<SupportEntry>> local;
      for (int round = 0; round < rounds_; ++round) {
        ++counters_.checks;
        auto res = check_separable(sides, X, weights_);
        if (res.separable) break;
        if (!local.insert(res.support).second) {
          ++counters_.repeated;
          break;
        }
        ++counters_.mis_found;
        for (const auto& e : res.support) weights_[static_cast<std::size_t>(e.point)] += 1.0;
        if (!emitted_.insert({v, res.support}).second) ++counters_.duplicates;
        out.push_back({v, std::move(res.support)});
      }
    }
    return out;
  }

  std::vector<ShatteringCut> generate(const StructuredSolution& sol, const std::vector<std::vector<double>>& X) {
    return generate(sol, vertices_to_check(sol), X);
  }

 private:
  std::vector<double> weights_;
  int rounds_;
  ShatteringCounters counters_;
  std::set<std::pair<int, std::vector<SupportEntry>>> emitted_;
};

}  // namespace mdt
