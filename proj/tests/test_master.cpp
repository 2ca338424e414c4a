#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mdt/master.hpp"
#include "support/milp_enumeration.hpp"
#include "support/role_assignment.hpp"

namespace mdt {
namespace {

using testing::assignment_from_roles;
using testing::enumerate_roles;
using testing::kBranch;
using testing::kPruned;
using testing::Roles;
using testing::satisfies_rows;
using testing::walk_roles;
using testing::within_bounds;

Dataset tiny(int points, int classes) {
  Dataset d;
  for (int k = 0; k < classes; ++k) d.class_names.push_back("c" + std::to_string(k));
  d.feature_names = {"x"};
  for (int i = 0; i < points; ++i) {
    d.X.push_back({0.1 * i});
    d.y.push_back(i % classes);
  }
  return d;
}

TEST(BuildMaster, VariableCounts) {
  const auto m = build_master(TreeShape(2), tiny(1, 2), Formulation::CutW, ObjectiveMode::weighted(0), false);
  EXPECT_EQ(m.milp.groups.at("b").size(), 7u);
  EXPECT_EQ(m.milp.groups.at("w").size(), 14u);
  EXPECT_EQ(m.milp.groups.at("p").size(), 7u);
  EXPECT_EQ(m.milp.groups.at("q").size(), 7u);
  EXPECT_EQ(m.milp.groups.at("s").size(), 7u);
  EXPECT_EQ(m.milp.num_variables(), m.layout.size());
  for (int v = 4; v <= 7; ++v) EXPECT_EQ(m.milp.lp.upper[static_cast<std::size_t>(m.layout.b(v))], 0.0);
  EXPECT_EQ(m.milp.lp.lower[static_cast<std::size_t>(m.layout.q(0, 1))], 1.0);
  for (int v = 1; v <= 7; ++v) EXPECT_FALSE(m.milp.integer[static_cast<std::size_t>(m.layout.p(v))]);
}

TEST(BuildMaster, RowFamilies) {
  const int I = 3, K = 2;
  const auto m = build_master(TreeShape(2), tiny(I, K), Formulation::Cut, ObjectiveMode::weighted(0), false);
  EXPECT_EQ(m.row_counts.at("base1"), 7);
  EXPECT_EQ(m.row_counts.at("base2"), 7);
  EXPECT_EQ(m.row_counts.at("base4"), 7 * I);
  EXPECT_EQ(m.row_counts.at("base5"), I);
  EXPECT_EQ(m.row_counts.at("base6"), 3 * I);
  std::ostringstream os;
  write_model_stats(m, os);
  EXPECT_NE(os.str().find("row.base6 9"), std::string::npos);
}

TEST(BuildMaster, WeightedObjective) {
  const auto d = tiny(2, 2);
  const auto m0 = build_master(TreeShape(1), d, Formulation::Cut, ObjectiveMode::weighted(0), false);
  EXPECT_EQ(m0.milp.lp.objective, m0.classification_objective());
  const auto m = build_master(TreeShape(1), d, Formulation::Cut, ObjectiveMode::weighted(0.25), false);
  EXPECT_DOUBLE_EQ(m.milp.lp.objective[static_cast<std::size_t>(m.layout.s(1, 2))], 0.75);
  EXPECT_DOUBLE_EQ(m.milp.lp.objective[static_cast<std::size_t>(m.layout.b(1))], -0.25);
}

TEST(BuildMaster, ModeErrors) {
  const auto d = tiny(2, 2);
  auto code = [&](ObjectiveMode mode) {
    try {
      build_master(TreeShape(2), d, Formulation::Cut, mode, false);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::InvalidConfig;
  };
  EXPECT_EQ(code(ObjectiveMode::weighted(1.5)), Errc::OutOfRange);
  EXPECT_EQ(code(ObjectiveMode::weighted(-0.1)), Errc::OutOfRange);
  EXPECT_EQ(code(ObjectiveMode::epsilon_constraint(4)), Errc::OutOfRange);
  EXPECT_EQ(code(ObjectiveMode::epsilon_constraint(-1)), Errc::OutOfRange);
}

TEST(BuildMaster, LexicographicObjectives) {
  const auto m = build_master(TreeShape(2), tiny(2, 2), Formulation::Cut, ObjectiveMode::lexicographic(), false);
  ASSERT_EQ(m.objectives.size(), 2u);
  EXPECT_EQ(m.objectives[0].sense, Sense::Maximize);
  EXPECT_EQ(m.objectives[1].sense, Sense::Minimize);
  EXPECT_EQ(m.objectives[1].coefficients, m.branching_objective());
}

TEST(BuildMaster, BalancedForcesFullTree) {
  const auto d = tiny(2, 2);
  const auto m = build_master(TreeShape(2), d, Formulation::CutW, ObjectiveMode::weighted(0), true);
  for (int v = 1; v <= 3; ++v) EXPECT_EQ(m.milp.lp.upper[static_cast<std::size_t>(m.layout.p(v))], 0.0);
  // Only the all-branching role trees survive the rows.
  int feasible = 0;
  for (const auto& roles : enumerate_roles(m.shape, 2)) {
    std::vector<std::vector<int>> walks;
    for (int i = 0; i < 2; ++i) walks.push_back(walk_roles(m.shape, roles, [](int) { return false; }));
    const auto x = assignment_from_roles(m, roles, walks);
    if (satisfies_rows(m.milp.lp.rows, x) && within_bounds(m.milp.lp, x)) {
      ++feasible;
      for (int v = 1; v <= 3; ++v) EXPECT_EQ(roles[static_cast<std::size_t>(v)], kBranch);
      for (int v = 4; v <= 7; ++v) EXPECT_GE(roles[static_cast<std::size_t>(v)], 0);
    }
  }
  EXPECT_EQ(feasible, 16);
}

TEST(BuildMaster, EpsilonBudgetRow) {
  const auto m = build_master(TreeShape(2), tiny(1, 2), Formulation::Cut, ObjectiveMode::epsilon_constraint(2), false);
  EXPECT_EQ(m.row_counts.at("budget"), 1);
  for (const auto& roles : enumerate_roles(m.shape, 2)) {
    int branching = 0;
    for (int v = 1; v <= 7; ++v) branching += roles[static_cast<std::size_t>(v)] == kBranch;
    const auto x = assignment_from_roles(m, roles, {walk_roles(m.shape, roles, [](int) { return true; })});
    EXPECT_EQ(satisfies_rows(m.milp.lp.rows, x), branching == 2);
  }
}

// Every structurally valid role tree with every routing gives a feasible
// master point, and no other role pattern satisfies base1-base6.
TEST(BuildMaster, FeasibilityCompleteness) {
  std::mt19937 rng(3);
  for (int h = 1; h <= 2; ++h) {
    const TreeShape shape(h);
    const auto d = tiny(3, 2);
    const auto m = build_master(shape, d, Formulation::CutW, ObjectiveMode::weighted(0), false);
    const auto all = enumerate_roles(shape, 2);
    EXPECT_EQ(all.size(), h == 1 ? 6u : 38u);
    for (const auto& roles : all) {
      for (int rep = 0; rep < 4; ++rep) {
        std::vector<std::vector<int>> walks;
        for (int i = 0; i < 3; ++i) walks.push_back(walk_roles(shape, roles, [&](int) { return rng() % 2 == 0; }));
        const auto x = assignment_from_roles(m, roles, walks);
        EXPECT_TRUE(satisfies_rows(m.milp.lp.rows, x));
        EXPECT_TRUE(within_bounds(m.milp.lp, x));
        const auto sol = extract_solution(m, x);
        for (int i = 0; i < 3; ++i) {
          EXPECT_EQ(sol.q[static_cast<std::size_t>(i)][1], 1);
          for (int v = 1; v <= shape.size(); ++v) {
            if (sol.s[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)] == 1) {
              EXPECT_EQ(sol.class_at(v), d.y[static_cast<std::size_t>(i)]);
            }
          }
        }
      }
    }
    // Exhaustive over (b, p, w) with q, s at zero apart from the fixed root.
    const int n = shape.size();
    int feasible_patterns = 0;
    for (int code = 0; code < (1 << (n * 3)); ++code) {
      std::vector<double> x(static_cast<std::size_t>(m.layout.size()), 0.0);
      for (int i = 0; i < 3; ++i) x[static_cast<std::size_t>(m.layout.q(i, 1))] = 1.0;
      bool ok = true;
      for (int v = 1; v <= n && ok; ++v) {
        const int c = (code >> (3 * (v - 1))) & 7;
        if (c > 4) ok = false;
        if (c == 1) x[static_cast<std::size_t>(m.layout.b(v))] = 1.0;
        if (c == 2 || c == 3) {
          x[static_cast<std::size_t>(m.layout.p(v))] = 1.0;
          x[static_cast<std::size_t>(m.layout.w(v, c - 2))] = 1.0;
        }
        if (c == 4) {
          x[static_cast<std::size_t>(m.layout.p(v))] = 1.0;
          x[static_cast<std::size_t>(m.layout.w(v, 0))] = 1.0;
          x[static_cast<std::size_t>(m.layout.w(v, 1))] = 1.0;
        }
      }
      if (ok && satisfies_rows(m.milp.lp.rows, x) && within_bounds(m.milp.lp, x)) ++feasible_patterns;
    }
    EXPECT_EQ(static_cast<std::size_t>(feasible_patterns), all.size());
  }
}

TEST(ExtractSolution, RootClass) {
  const auto d = tiny(3, 2);
  const auto m = build_master(TreeShape(2), d, Formulation::Cut, ObjectiveMode::weighted(0), false);
  Roles roles(8, kPruned);
  roles[1] = 0;
  const auto x = assignment_from_roles(m, roles, {{1}, {1}, {1}});
  EXPECT_TRUE(satisfies_rows(m.milp.lp.rows, x));
  const auto sol = extract_solution(m, x);
  EXPECT_EQ(sol.branching_count(), 0);
  EXPECT_EQ(sol.class_at(1), 0);
  EXPECT_EQ(sol.classification_count(), 2);
}

TEST(ExtractSolution, PrunedRightSubtree) {
  const auto m = build_master(TreeShape(2), tiny(2, 2), Formulation::Cut, ObjectiveMode::weighted(0), false);
  const Roles roles{kPruned, kBranch, kBranch, 1, 0, 1, kPruned, kPruned};
  const auto x = assignment_from_roles(m, roles, {{1, 2, 4}, {1, 3}});
  EXPECT_TRUE(satisfies_rows(m.milp.lp.rows, x));
  const auto sol = extract_solution(m, x);
  EXPECT_EQ(sol.branching_count(), 2);
  EXPECT_TRUE(sol.is_branching(1));
  EXPECT_TRUE(sol.is_branching(2));
  EXPECT_EQ(sol.class_at(3), 1);
  EXPECT_EQ(sol.class_at(6), -1);
  EXPECT_EQ(sol.class_at(7), -1);
  EXPECT_EQ(sol.classification_count(), 2);
}

TEST(ExtractSolution, NonIntegralAndLength) {
  const auto m = build_master(TreeShape(1), tiny(1, 2), Formulation::Cut, ObjectiveMode::weighted(0), false);
  std::vector<double> x(static_cast<std::size_t>(m.layout.size()), 0.0);
  x[static_cast<std::size_t>(m.layout.b(1))] = 0.5;
  try {
    extract_solution(m, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonIntegral);
  }
  x[static_cast<std::size_t>(m.layout.b(1))] = 1.0 - 1e-8;
  EXPECT_EQ(extract_solution(m, x).b[1], 1);
  x.pop_back();
  EXPECT_THROW(extract_solution(m, x), Error);
}

}  // namespace
}  // namespace mdt
