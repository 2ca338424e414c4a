#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mdt/svm.hpp"
#include "support/svm_kkt.hpp"

namespace mdt {
namespace {

using Points = std::vector<std::vector<double>>;

TEST(SvmDual, OneDimensionalAnalytic) {
  const Points X{{0.0}, {1.0}};
  const auto d = solve_svm_dual(X, {-1, 1}, 1000.0);
  EXPECT_NEAR(d.beta[0], 2.0, 1e-6);
  EXPECT_NEAR(d.beta[1], 2.0, 1e-6);
  EXPECT_NEAR(d.a[0], 2.0, 1e-6);
  EXPECT_NEAR(d.objective, 2.0, 1e-6);
  const double c = svm_offset(d, X);
  EXPECT_NEAR(c, -1.0, 1e-6);
  const Hyperplane hp{d.a, c};
  EXPECT_NEAR(hp(X[0]), -1.0, 1e-6);
  EXPECT_NEAR(hp(X[1]), 1.0, 1e-6);
}

TEST(SvmDual, DuplicateWithOppositeLabels) {
  const Points X{{0.3, 0.7}, {0.3, 0.7}};
  const auto d = solve_svm_dual(X, {-1, 1}, 1.0);
  EXPECT_NEAR(d.beta[0], 1.0, 1e-9);
  EXPECT_NEAR(d.beta[1], 1.0, 1e-9);
  EXPECT_NEAR(d.a[0], 0.0, 1e-12);
  EXPECT_NEAR(d.a[1], 0.0, 1e-12);
}

TEST(SvmDual, TwoPointMaxMargin) {
  const Points X{{0.2, 0.1}, {0.6, 0.4}};
  const auto d = solve_svm_dual(X, {-1, 1}, std::numeric_limits<double>::infinity());
  const double dx = 0.4, dy = 0.3;
  // a is parallel to the difference and the gap between the points is 2/|a|.
  EXPECT_NEAR(d.a[0] * dy - d.a[1] * dx, 0.0, 1e-9);
  EXPECT_GT(d.a[0], 0.0);
  EXPECT_NEAR(2.0 / std::hypot(d.a[0], d.a[1]), std::hypot(dx, dy), 1e-6);
}

TEST(SvmDual, Errors) {
  const Points X{{0.0}, {1.0}};
  try {
    solve_svm_dual(X, {1, 1}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidLabels);
  }
  EXPECT_THROW(solve_svm_dual(X, {-1, 2}, 1.0), Error);
  EXPECT_THROW(solve_svm_dual(X, {-1}, 1.0), Error);
  EXPECT_THROW(solve_svm_dual(X, {-1, 1}, 0.0), Error);
}

TEST(SvmDual, KktOnRandomSeparableInstances) {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0), g(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int F = 1 + static_cast<int>(rng() % 4);
    std::vector<double> w(static_cast<std::size_t>(F));
    for (auto& v : w) v = g(rng);
    const double norm = std::sqrt(testing::dot(w, w));
    if (norm < 1e-3) continue;
    for (auto& v : w) v /= norm;
    const double b = -testing::dot(w, std::vector<double>(static_cast<std::size_t>(F), 0.5));
    Points X;
    std::vector<int> delta;
    while (X.size() < 4 + static_cast<std::size_t>(trial % 20) || delta.front() == delta.back()) {
      std::vector<double> x(static_cast<std::size_t>(F));
      for (auto& v : x) v = u(rng);
      const double f = testing::dot(w, x) + b;
      if (std::abs(f) < 0.05) continue;
      X.push_back(x);
      delta.push_back(f < 0 ? -1 : 1);
      if (X.size() > 60) {
        X.clear();
        delta.clear();
      }
    }
    const double C = 1000.0;
    const auto d = solve_svm_dual(X, delta, C);
    EXPECT_LE(d.kkt_gap, 1e-6);
    double balance = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      EXPECT_GE(d.beta[i], 0.0);
      EXPECT_LE(d.beta[i], C);
      balance += d.beta[i] * d.delta[i];
    }
    EXPECT_NEAR(balance, 0.0, 1e-8);
    EXPECT_LE(testing::kkt_residual(d, X, svm_offset(d, X), C), 1e-6) << "trial " << trial;
  }
}

TEST(SvmDual, MarginOnSeparableSides) {
  const Points X{{0.1, 0.1}, {0.2, 0.3}, {0.8, 0.9}, {0.9, 0.6}, {0.7, 0.7}};
  const std::vector<int> delta{-1, -1, 1, 1, 1};
  const auto d = solve_svm_dual(X, delta, 1e6);
  const Hyperplane hp{d.a, svm_offset(d, X)};
  for (std::size_t i = 0; i < X.size(); ++i) EXPECT_GE(std::abs(hp(X[i])), 1.0 - 1e-6);
}

TrainedTree one_split(double a, double c) {
  TrainedTree t;
  t.depth = 1;
  t.features = 1;
  t.class_names = {"L", "R"};
  t.feature_names = {"x"};
  t.vertices.assign(4, TreeVertex{});
  t.vertices[1].role = VertexRole::Branch;
  t.vertices[1].split = {{a}, c};
  t.vertices[2].role = VertexRole::Class;
  t.vertices[2].label = 0;
  t.vertices[3].role = VertexRole::Class;
  t.vertices[3].label = 1;
  return t;
}

TEST(Predict, RoutingAndTie) {
  const auto t = one_split(2.0, -1.0);
  EXPECT_EQ(predict(t, {0.0}), 0);
  EXPECT_EQ(predict(t, {1.0}), 1);
  EXPECT_EQ(predict(t, {0.5}), 1);
  EXPECT_EQ(predict(t, {0.5}), predict(t, {0.5}));
  EXPECT_THROW(predict(t, {0.5, 0.5}), Error);
}

TEST(Predict, ConstantAndPrunedRouting) {
  Dataset d;
  d.class_names = {"a", "b"};
  d.feature_names = {"x"};
  const auto t = constant_tree(2, d, 1);
  EXPECT_EQ(predict(t, {0.3}), 1);
  auto p = one_split(2.0, -1.0);
  p.depth = 2;
  p.vertices.resize(8);
  p.vertices[3].role = VertexRole::Pruned;
  p.vertices[7].role = VertexRole::Class;
  p.vertices[7].label = 0;
  EXPECT_EQ(terminal_vertex(p, {0.9}), 7);
}

TEST(Predict, InvalidTree) {
  auto t = one_split(2.0, -1.0);
  t.vertices[3].role = VertexRole::Pruned;
  try {
    predict(t, {0.9});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidTree);
  }
}

TEST(TreeJson, RoundTrip) {
  auto t = one_split(2.5, -1.25);
  t.vertices[1].weak = true;
  const auto back = tree_from_json(nlohmann::json::parse(tree_to_json(t).dump()));
  EXPECT_EQ(back.depth, 1);
  EXPECT_EQ(back.class_names, t.class_names);
  EXPECT_EQ(back.at(1).split.a, t.at(1).split.a);
  EXPECT_EQ(back.at(1).split.c, t.at(1).split.c);
  EXPECT_TRUE(back.at(1).weak);
  EXPECT_EQ(back.at(3).label, 1);
  for (double x : {0.0, 0.4, 0.5, 0.6, 1.0}) EXPECT_EQ(predict(back, {x}), predict(t, {x}));
  auto bad = tree_to_json(t);
  bad["vertices"][0]["role"] = "leaf";
  EXPECT_THROW(tree_from_json(bad), Error);
  bad = tree_to_json(t);
  bad["vertices"][0]["a"] = {1.0, 2.0};
  EXPECT_THROW(tree_from_json(bad), Error);
  try {
    tree_from_json(nlohmann::json::parse("{\"depth\": 1}"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidTree);
  }
}

StructuredSolution root_routing(int points, const std::vector<int>& left, const std::vector<int>& right) {
  StructuredSolution sol;
  sol.shape = TreeShape(1);
  sol.points = points;
  sol.classes = 2;
  sol.b = {0, 1, 0, 0};
  sol.p = {0, 0, 1, 1};
  sol.w = {{0, 0}, {0, 0}, {1, 0}, {0, 1}};
  sol.q.assign(static_cast<std::size_t>(points), std::vector<int>(4, 0));
  sol.s = sol.q;
  for (auto& q : sol.q) q[1] = 1;
  for (int i : left) sol.q[static_cast<std::size_t>(i)][2] = 1;
  for (int i : right) sol.q[static_cast<std::size_t>(i)][3] = 1;
  return sol;
}

Dataset line(std::vector<double> xs, std::vector<int> ys) {
  Dataset d;
  d.class_names = {"L", "R"};
  d.feature_names = {"x"};
  for (double x : xs) d.X.push_back({x});
  d.y = std::move(ys);
  return d;
}

TEST(FinalizeTree, SeparableRouting) {
  const auto d = line({0.0, 0.2, 0.8, 1.0}, {0, 0, 1, 1});
  const auto t = finalize_tree(root_routing(4, {0, 1}, {2, 3}), d);
  EXPECT_EQ(t.at(1).role, VertexRole::Branch);
  EXPECT_FALSE(t.at(1).weak);
  EXPECT_EQ(t.at(2).label, 0);
  EXPECT_EQ(t.at(3).label, 1);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(predict(t, d.X[static_cast<std::size_t>(i)]), d.y[static_cast<std::size_t>(i)]);
  EXPECT_NEAR(t.at(1).split(d.X[1]), -1.0, 1e-6);
  EXPECT_NEAR(t.at(1).split(d.X[2]), 1.0, 1e-6);
}

TEST(FinalizeTree, EmptySidesSendEverythingToTheOccupiedChild) {
  const auto d = line({0.1, 0.9}, {1, 1});
  const auto right_only = finalize_tree(root_routing(2, {}, {0, 1}), d);
  EXPECT_EQ(right_only.at(1).split.c, 1.0);
  for (const auto& x : d.X) EXPECT_EQ(terminal_vertex(right_only, x), 3);
  const auto left_only = finalize_tree(root_routing(2, {0, 1}, {}), d);
  EXPECT_EQ(left_only.at(1).split.c, -1.0);
  for (const auto& x : d.X) EXPECT_EQ(terminal_vertex(left_only, x), 2);
}

TEST(FinalizeTree, WeakSeparationIsFlagged) {
  const auto d = line({0.0, 1.0, 0.5}, {0, 0, 1});
  const auto t = finalize_tree(root_routing(3, {0, 1}, {2}), d);
  EXPECT_TRUE(t.at(1).weak);
  EXPECT_EQ(t.weak_vertices(), std::vector<int>{1});
}

TEST(FinalizeTree, DegenerateSvmFallsBackToGenericHyperplane) {
  const auto d = line({0.4, 0.4}, {0, 1});
  FinalizeOptions opt;
  opt.C = 1.0;
  const auto t = finalize_tree(root_routing(2, {0}, {1}), d, opt);
  EXPECT_TRUE(t.at(1).weak);
  EXPECT_EQ(t.at(1).split.c, 1.0);
  EXPECT_EQ(t.at(1).split.a, std::vector<double>{0.0});
}

}  // namespace
}  // namespace mdt
