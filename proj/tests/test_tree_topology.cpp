#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "mdt/tree_topology.hpp"

namespace mdt {
namespace {

std::set<int> as_set(std::span<const int> s) { return {s.begin(), s.end()}; }

TEST(TreeShape, CountsMatchCompleteTree) {
  for (int h = 1; h <= 8; ++h) {
    TreeShape shape(h);
    EXPECT_EQ(shape.size(), (1 << (h + 1)) - 1);
    EXPECT_EQ(shape.edge_count(), shape.size() - 1);
    int leaves = 0, branches = 0;
    for (int v = 1; v <= shape.size(); ++v) {
      EXPECT_NE(shape.is_branch(v), shape.is_leaf(v));
      leaves += shape.is_leaf(v);
      branches += shape.is_branch(v);
      if (v > 1) EXPECT_EQ(shape.parent(v), v / 2);
    }
    EXPECT_EQ(leaves, 1 << h);
    EXPECT_EQ(branches, (1 << h) - 1);
  }
}

TEST(TreeShape, Children) {
  TreeShape shape(2);
  EXPECT_EQ(shape.children(1), std::make_pair(2, 3));
  EXPECT_EQ(shape.children(3), std::make_pair(6, 7));
  try {
    shape.children(5);
    FAIL() << "expected NoChildren";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoChildren);
  }
}

TEST(TreeShape, PathTo) {
  EXPECT_EQ(TreeShape(2).path_to(5), (std::vector<int>{1, 2, 5}));
  EXPECT_EQ(TreeShape(2).path_to(1), (std::vector<int>{1}));
  EXPECT_EQ(TreeShape(3).path_to(11), (std::vector<int>{1, 2, 5, 11}));
  try {
    TreeShape(2).path_to(8);
    FAIL() << "expected InvalidVertex";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidVertex);
  }
  EXPECT_THROW(TreeShape(2).path_to(0), Error);
}

TEST(TreeShape, PathProperties) {
  for (int h = 1; h <= 6; ++h) {
    TreeShape shape(h);
    for (int v = 1; v <= shape.size(); ++v) {
      const auto path = shape.path_to(v);
      ASSERT_EQ(path.front(), 1);
      ASSERT_EQ(path.back(), v);
      ASSERT_EQ(static_cast<int>(path.size()), shape.vertex_depth(v) + 1);
      for (std::size_t k = 1; k < path.size(); ++k) {
        EXPECT_LT(path[k - 1], path[k]);
        EXPECT_EQ(shape.parent(path[k]), path[k - 1]);
      }
    }
  }
}

TEST(TreeShape, Descendants) {
  EXPECT_EQ(as_set(TreeShape(2).descendants(3)), (std::set<int>{6, 7}));
  EXPECT_TRUE(TreeShape(2).descendants(4).empty());
  EXPECT_EQ(as_set(TreeShape(3).descendants(2)), (std::set<int>{4, 5, 8, 9, 10, 11}));
  EXPECT_EQ(TreeShape(2).descendants(1).size(), 6u);
}

TEST(TreeShape, DescendantRecursionAndSize) {
  for (int h = 1; h <= 6; ++h) {
    TreeShape shape(h);
    for (int v = 1; v <= shape.size(); ++v) {
      const auto desc = as_set(shape.descendants(v));
      const int d = shape.vertex_depth(v);
      EXPECT_EQ(static_cast<int>(desc.size()), (1 << (h - d + 1)) - 2);
      for (int u = 1; u <= shape.size(); ++u) EXPECT_EQ(desc.count(u) == 1, shape.is_descendant(u, v));
      if (shape.is_branch(v)) {
        auto [l, r] = shape.children(v);
        std::set<int> expect{l, r};
        for (int u : shape.descendants(l)) expect.insert(u);
        for (int u : shape.descendants(r)) expect.insert(u);
        EXPECT_EQ(desc, expect);
      }
    }
  }
}

TEST(TreeShape, RejectsNonPositiveDepth) { EXPECT_THROW(TreeShape(0), Error); }

}  // namespace
}  // namespace mdt
