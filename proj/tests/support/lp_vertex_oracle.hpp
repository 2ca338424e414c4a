#pragma once

// Brute-force LP oracle: enumerates every basic solution of a small LP over
// x >= 0 (plus an artificial box to detect unboundedness). Test-only.

#include <cmath>
#include <optional>
#include <vector>

#include "mdt/lp.hpp"

namespace mdt::testing {

struct OracleResult {
  LPStatus status;
  double objective = 0.0;
};

namespace detail {

struct Halfspace {
  std::vector<double> a;
  Relation rel;
  double rhs;
};

inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(A[r][c]) > std::abs(A[p][c])) p = r;
    }
    if (std::abs(A[p][c]) < 1e-10) return std::nullopt;
    std::swap(A[p], A[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / A[i][i];
  return x;
}

inline std::optional<double> best_vertex(const LinearProgram& lp, double box) {
  const int n = lp.num_variables();
  std::vector<Halfspace> hs;
  for (const auto& row : lp.rows) {
    std::vector<double> a(static_cast<std::size_t>(n), 0.0);
    for (const auto& t : row.terms) a[static_cast<std::size_t>(t.var)] += t.coef;
    hs.push_back({a, row.relation, row.rhs});
  }
  for (int j = 0; j < n; ++j) {
    std::vector<double> a(static_cast<std::size_t>(n), 0.0);
    a[static_cast<std::size_t>(j)] = 1.0;
    hs.push_back({a, Relation::GreaterEqual, 0.0});
    hs.push_back({a, Relation::LessEqual, box});
  }
  const int total = static_cast<int>(hs.size());
  std::optional<double> best;
  const double sgn = lp.sense == Sense::Maximize ? 1.0 : -1.0;
  std::vector<int> pick;
  // Iterate all n-subsets of the halfspaces.
  auto recurse = [&](auto&& self, int start) -> void {
    if (static_cast<int>(pick.size()) == n) {
      std::vector<std::vector<double>> A;
      std::vector<double> b;
      for (int k : pick) {
        A.push_back(hs[static_cast<std::size_t>(k)].a);
        b.push_back(hs[static_cast<std::size_t>(k)].rhs);
      }
      auto x = solve_square(A, b);
      if (!x) return;
      for (const auto& h : hs) {
        double act = 0.0;
        for (int j = 0; j < n; ++j) act += h.a[static_cast<std::size_t>(j)] * (*x)[static_cast<std::size_t>(j)];
        if (h.rel != Relation::GreaterEqual && act > h.rhs + 1e-9) return;
        if (h.rel != Relation::LessEqual && act < h.rhs - 1e-9) return;
      }
      double obj = 0.0;
      for (int j = 0; j < n; ++j) obj += lp.objective[static_cast<std::size_t>(j)] * (*x)[static_cast<std::size_t>(j)];
      if (!best || sgn * obj > sgn * *best) best = obj;
      return;
    }
    for (int k = start; k < total; ++k) {
      pick.push_back(k);
      self(self, k + 1);
      pick.pop_back();
    }
  };
  recurse(recurse, 0);
  return best;
}

}  // namespace detail

/// Requires lower bounds 0 and infinite upper bounds on every variable.
inline OracleResult vertex_enumeration(const LinearProgram& lp) {
  auto small = detail::best_vertex(lp, 1e4);
  if (!small) return {LPStatus::Infeasible, 0.0};
  auto large = detail::best_vertex(lp, 1e5);
  if (std::abs(*large - *small) > 1e-6) return {LPStatus::Unbounded, 0.0};
  return {LPStatus::Optimal, *small};
}

}  // namespace mdt::testing
