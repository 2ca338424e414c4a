#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "mdt/milp.hpp"

namespace mdt::testing {

struct EnumerationResult {
  bool feasible = false;
  double objective = 0.0;
};

inline bool satisfies_rows(const std::vector<Row>& rows, const std::vector<double>& x) {
  for (const auto& row : rows) {
    double act = 0.0;
    for (const auto& t : row.terms) act += t.coef * x[static_cast<std::size_t>(t.var)];
    if (row.relation == Relation::LessEqual && act > row.rhs + 1e-9) return false;
    if (row.relation == Relation::GreaterEqual && act < row.rhs - 1e-9) return false;
    if (row.relation == Relation::Equal && std::abs(act - row.rhs) > 1e-9) return false;
  }
  return true;
}

// Exhaustive search over every integral point of an all-integer model with
// small bound ranges. `reject` lets tests model lazy constraints.
template <class Reject>
EnumerationResult enumerate_integer_points(const MilpModel& m, const std::vector<double>& lower,
                                           const std::vector<double>& upper, Reject reject) {
  const auto n = static_cast<std::size_t>(m.num_variables());
  std::vector<double> x(lower.begin(), lower.end());
  EnumerationResult best;
  const double sign = m.lp.sense == Sense::Maximize ? 1.0 : -1.0;
  for (;;) {
    if (satisfies_rows(m.lp.rows, x) && !reject(x)) {
      double obj = 0.0;
      for (std::size_t j = 0; j < n; ++j) obj += m.lp.objective[j] * x[j];
      if (!best.feasible || sign * obj > sign * best.objective) {
        best.feasible = true;
        best.objective = obj;
      }
    }
    std::size_t j = 0;
    for (; j < n; ++j) {
      if (x[j] + 1.0 <= upper[j] + 1e-9) {
        x[j] += 1.0;
        break;
      }
      x[j] = lower[j];
    }
    if (j == n) break;
  }
  return best;
}

inline EnumerationResult enumerate_integer_points(const MilpModel& m) {
  return enumerate_integer_points(m, m.lp.lower, m.lp.upper, [](const std::vector<double>&) { return false; });
}

}  // namespace mdt::testing
