#include <gtest/gtest.h>

#include <random>

#include "mdt/oracle.hpp"
#include "mdt/trainer.hpp"

namespace mdt {
namespace {

Dataset make(std::vector<std::vector<double>> X, std::vector<int> y, int classes) {
  Dataset d;
  for (int k = 0; k < classes; ++k) d.class_names.push_back("c" + std::to_string(k));
  for (std::size_t f = 0; f < X.front().size(); ++f) d.feature_names.push_back("f" + std::to_string(f));
  d.X = std::move(X);
  d.y = std::move(y);
  return d;
}

Dataset xor4() { return make({{0, 0}, {1, 1}, {0, 1}, {1, 0}}, {0, 0, 1, 1}, 2); }

Dataset random_data(std::mt19937& rng, int n, int F, int K) {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  for (int i = 0; i < n; ++i) {
    std::vector<double> x(static_cast<std::size_t>(F));
    for (auto& v : x) v = static_cast<double>(rng() % 21) / 20.0;
    X.push_back(x);
    y.push_back(static_cast<int>(rng() % static_cast<unsigned>(K)));
  }
  return make(X, y, K);
}

TEST(Dichotomies, TwoPoints) {
  const auto cat = enumerate_dichotomies(make({{0.1}, {0.7}}, {0, 1}, 2));
  EXPECT_EQ(cat.masks.size(), 4u);
}

TEST(Dichotomies, XorDiagonalsAbsent) {
  const auto cat = enumerate_dichotomies(xor4());
  EXPECT_FALSE(cat.contains(0b0011));
  EXPECT_FALSE(cat.contains(0b1100));
  EXPECT_TRUE(cat.contains(0b0101));
  EXPECT_EQ(cat.masks.size(), 14u);
}

TEST(Dichotomies, CollinearMiddleOpposite) {
  const auto cat = enumerate_dichotomies(make({{0.0}, {0.5}, {1.0}}, {0, 1, 0}, 2));
  EXPECT_FALSE(cat.contains(0b101));
  EXPECT_FALSE(cat.contains(0b010));
  EXPECT_EQ(cat.masks.size(), 6u);
}

TEST(Dichotomies, SizeGuard) {
  std::mt19937 rng(1);
  try {
    enumerate_dichotomies(random_data(rng, 16, 2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SizeGuard);
  }
  EXPECT_THROW(enumerate_dichotomies_incremental(random_data(rng, 31, 2, 2)), Error);
}

TEST(Dichotomies, AgreesWithShatteringAndIsSwapClosed) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = random_data(rng, 4 + trial % 6, 1 + trial % 3, 2);
    const auto cat = enumerate_dichotomies(d);
    const std::uint32_t full = (1u << d.rows()) - 1u;
    const std::vector<double> w(static_cast<std::size_t>(d.rows()), 1.0);
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
      EXPECT_EQ(cat.contains(mask), cat.contains(full & ~mask));
      SideAssignment s;
      for (int i = 0; i < d.rows(); ++i) ((mask >> i) & 1u ? s.left : s.right).push_back(i);
      EXPECT_EQ(cat.contains(mask), check_separable(s, d.X, w).separable);
    }
    EXPECT_EQ(enumerate_dichotomies_incremental(d).masks, cat.masks);
  }
}

TEST(TreeDp, Examples) {
  const auto d = xor4();
  const auto cat = enumerate_dichotomies(d);
  EXPECT_EQ(optimal_tree_dp(cat, d, 2, 0), 2);
  EXPECT_EQ(optimal_tree_dp(cat, d, 1, 1), 3);
  EXPECT_EQ(optimal_tree_dp(cat, d, 2, 1), 3);
  EXPECT_EQ(optimal_tree_dp(cat, d, 2, 2), 4);
  EXPECT_EQ(optimal_tree_dp(cat, d, 2, 3), 4);
  EXPECT_THROW(optimal_tree_dp(cat, d, 4, 1), Error);
  EXPECT_THROW(optimal_tree_dp(cat, d, 2, -1), Error);
}

TEST(TreeDp, MonotoneAndMatchesSearch) {
  std::mt19937 rng(12);
  for (int trial = 0; trial < 12; ++trial) {
    const auto d = random_data(rng, 5 + trial % 7, 1 + trial % 2, 2 + trial % 2);
    const auto cat = enumerate_dichotomies(d);
    const auto sparse = enumerate_dichotomies_incremental(d);
    for (int h = 0; h <= 3; ++h) {
      for (int k = 0; k <= 7; ++k) {
        const int v = optimal_tree_dp(cat, d, h, k);
        EXPECT_EQ(v, optimal_tree_dp(sparse, d, h, k));
        if (h > 0) EXPECT_GE(v, optimal_tree_dp(cat, d, h - 1, k));
        if (k > 0) EXPECT_GE(v, optimal_tree_dp(cat, d, h, k - 1));
      }
    }
  }
}

TEST(Greedy, Examples) {
  const auto pure = make({{0.1}, {0.5}, {0.9}}, {1, 1, 1}, 2);
  const auto t = greedy_baseline(pure, 2);
  EXPECT_EQ(t.at(1).role, VertexRole::Class);
  EXPECT_EQ(count_correct(t, pure), 3);

  const auto line = make({{0.1}, {0.3}, {0.7}, {0.9}}, {0, 0, 1, 1}, 2);
  const auto s = greedy_baseline(line, 1);
  EXPECT_EQ(s.branching_count(), 1);
  EXPECT_EQ(count_correct(s, line), 4);

  EXPECT_LE(count_correct(greedy_baseline(xor4(), 1), xor4()), 3);
}

TEST(Greedy, NeverBeatsTheOracle) {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = random_data(rng, 4 + trial % 9, 1 + trial % 2, 2 + trial % 2);
    const auto cat = enumerate_dichotomies(d);
    for (int h = 1; h <= 3; ++h) {
      const auto g = greedy_baseline(d, h);
      EXPECT_GE(optimal_tree_dp(cat, d, h, g.branching_count()), count_correct(g, d));
    }
  }
}

}  // namespace
}  // namespace mdt
