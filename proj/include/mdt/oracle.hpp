#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "mdt/data.hpp"
#include "mdt/error.hpp"
#include "mdt/shattering.hpp"
#include "mdt/svm.hpp"

namespace mdt {

/// Bit i of a mask set means point i goes left.
struct DichotomyCatalog {
  int points = 0;
  std::vector<char> separable;  // indexed by full-side mask
  std::vector<std::uint32_t> masks;  // separable masks, ascending

  bool contains(std::uint32_t left_mask) const {
    if (!separable.empty()) return separable.at(left_mask) != 0;
    return std::binary_search(masks.begin(), masks.end(), left_mask);
  }
};

inline DichotomyCatalog enumerate_dichotomies(const Dataset& data) {
  const int n = data.rows();
  if (n > 15) throw Error(Errc::SizeGuard, "dichotomy enumeration is limited to 15 points");
  DichotomyCatalog cat;
  cat.points = n;
  const std::uint32_t full = 1u << n;
  cat.separable.assign(full, 0);
  const std::vector<double> weights(static_cast<std::size_t>(n), 1.0);
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    SideAssignment sides;
    for (int i = 0; i < n; ++i) ((mask >> i) & 1u ? sides.left : sides.right).push_back(i);
    if (check_separable(sides, data.X, weights).separable) {
      cat.separable[mask] = 1;
      cat.masks.push_back(mask);
    }
  }
  return cat;
}

/// Catalog for up to 30 points, grown one point at a time: a split of the
/// first m + 1 points can only be separable if its restriction to the first
/// m points is. Only `masks` is filled.
inline DichotomyCatalog enumerate_dichotomies_incremental(const Dataset& data) {
  const int n = data.rows();
  if (n > 30) throw Error(Errc::SizeGuard, "incremental dichotomy enumeration is limited to 30 points");
  DichotomyCatalog cat;
  cat.points = n;
  const std::vector<double> weights(static_cast<std::size_t>(n), 1.0);
  std::vector<std::uint32_t> level{0u};
  for (int m = 0; m < n; ++m) {
    std::vector<std::uint32_t> next;
    for (std::uint32_t base : level) {
      for (std::uint32_t mask : {base, base | (1u << m)}) {
        SideAssignment sides;
        for (int i = 0; i <= m; ++i) ((mask >> i) & 1u ? sides.left : sides.right).push_back(i);
        if (check_separable(sides, data.X, weights).separable) next.push_back(mask);
      }
    }
    level = std::move(next);
  }
  std::sort(level.begin(), level.end());
  cat.masks = std::move(level);
  return cat;
}

namespace detail {

inline int majority_count(std::uint32_t set, const std::vector<int>& labels, int classes) {
  std::vector<int> counts(static_cast<std::size_t>(classes), 0);
  for (int i = 0; set; ++i, set >>= 1) {
    if (set & 1u) ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
  }
  return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
}

// Same recursion as TreeDp without materializing per-subset split lists, for
// catalogs too large to index densely. Stops as soon as every point of the
// current subset is classified.
class TreeSearch {
 public:
  TreeSearch(const DichotomyCatalog& cat, const std::vector<int>& labels, int classes)
      : cat_(cat) {
    for (int k = 0; k < classes; ++k) {
      std::uint32_t m = 0;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == k) m |= 1u << i;
      }
      by_class_.push_back(m);
    }
  }

  int value(std::uint32_t set, int depth, int budget) {
    if (set == 0) return 0;
    int best = majority(set);
    const int size = std::popcount(set);
    if (depth == 0 || budget == 0 || best == size) return best;
    const std::uint64_t key = (static_cast<std::uint64_t>(set) << 16) | (static_cast<std::uint64_t>(depth) << 8) |
                              static_cast<std::uint64_t>(budget);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    for (std::uint32_t m : cat_.masks) {
      const std::uint32_t left = set & m, right = set & ~m;
      // A split sending everything one way adds nothing over a shallower tree.
      if (left == 0 || right == 0) continue;
      for (int k1 = 0; k1 <= budget - 1 && best < size; ++k1) {
        const int lv = value(left, depth - 1, k1);
        if (lv + std::popcount(right) <= best) continue;
        best = std::max(best, lv + value(right, depth - 1, budget - 1 - k1));
      }
      if (best == size) break;
    }
    if (depth > 1) memo_[key] = best;
    return best;
  }

 private:
  int majority(std::uint32_t set) const {
    int best = 0;
    for (std::uint32_t m : by_class_) best = std::max(best, std::popcount(set & m));
    return best;
  }

  const DichotomyCatalog& cat_;
  std::vector<std::uint32_t> by_class_;
  std::unordered_map<std::uint64_t, int> memo_;
};

class TreeDp {
 public:
  TreeDp(const DichotomyCatalog& cat, const std::vector<int>& labels, int classes)
      : cat_(cat), labels_(labels), classes_(classes) {}

  int value(std::uint32_t set, int depth, int budget) {
    if (set == 0) return 0;
    const int base = majority(set);
    if (depth == 0 || budget == 0) return base;
    const std::uint64_t key = (static_cast<std::uint64_t>(set) << 16) | (static_cast<std::uint64_t>(depth) << 8) |
                              static_cast<std::uint64_t>(budget);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    int best = base;
    for (std::uint32_t left : splits(set)) {
      const std::uint32_t right = set & ~left;
      for (int k1 = 0; k1 <= budget - 1; ++k1) {
        const int lv = value(left, depth - 1, k1);
        const int rv = value(right, depth - 1, budget - 1 - k1);
        best = std::max(best, lv + rv);
      }
    }
    memo_[key] = best;
    return best;
  }

 private:
  int majority(std::uint32_t set) const { return majority_count(set, labels_, classes_); }

  // Left parts realizable on `set`: restrictions of separable full masks.
  const std::vector<std::uint32_t>& splits(std::uint32_t set) {
    auto it = splits_.find(set);
    if (it != splits_.end()) return it->second;
    std::vector<char> seen(1u << cat_.points, 0);
    std::vector<std::uint32_t> out;
    for (std::uint32_t m : cat_.masks) {
      const std::uint32_t left = m & set;
      if (!seen[left]) {
        seen[left] = 1;
        out.push_back(left);
      }
    }
    std::sort(out.begin(), out.end());
    return splits_.emplace(set, std::move(out)).first->second;
  }

  const DichotomyCatalog& cat_;
  const std::vector<int>& labels_;
  int classes_;
  std::unordered_map<std::uint64_t, int> memo_;
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> splits_;
};

}  // namespace detail

/// Largest number of correctly classified points over trees of depth <= h
/// with at most `budget` branching vertices whose splits are hyperplanes.
inline int optimal_tree_dp(const DichotomyCatalog& cat, const Dataset& data, int depth, int budget) {
  if (data.rows() != cat.points) throw Error(Errc::DimensionMismatch, "catalog and dataset sizes differ");
  if (depth < 0 || depth > 3) throw Error(Errc::SizeGuard, "oracle depth is limited to 3");
  if (budget < 0) throw Error(Errc::OutOfRange, "budget must be nonnegative");
  const std::uint32_t all = cat.points == 0 ? 0u : static_cast<std::uint32_t>((1ull << cat.points) - 1u);
  if (cat.separable.empty()) {
    detail::TreeSearch search(cat, data.y, std::max(1, data.classes()));
    return search.value(all, depth, std::min(budget, (1 << depth) - 1));
  }
  detail::TreeDp dp(cat, data.y, std::max(1, data.classes()));
  return dp.value(all, depth, std::min(budget, (1 << depth) - 1));
}

namespace detail {

inline double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    g -= p * p;
  }
  return g;
}

inline void grow_greedy(TrainedTree& tree, const Dataset& data, const std::vector<int>& rows, int v, int depth_left) {
  const int K = std::max(1, data.classes());
  std::vector<int> counts(static_cast<std::size_t>(K), 0);
  for (int i : rows) ++counts[static_cast<std::size_t>(data.y[static_cast<std::size_t>(i)])];
  const int label = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  auto& node = tree.vertices[static_cast<std::size_t>(v)];
  node.role = VertexRole::Class;
  node.label = label;
  const int n = static_cast<int>(rows.size());
  if (depth_left == 0 || n == 0 || counts[static_cast<std::size_t>(label)] == n) return;

  const double parent = gini(counts, n);
  double best_score = parent - 1e-12;
  int best_f = -1;
  double best_t = 0.0;
  for (int f = 0; f < data.features(); ++f) {
    std::vector<std::pair<double, int>> vals;
    for (int i : rows) vals.push_back({data.X[static_cast<std::size_t>(i)][static_cast<std::size_t>(f)], data.y[static_cast<std::size_t>(i)]});
    std::sort(vals.begin(), vals.end());
    std::vector<int> left(static_cast<std::size_t>(K), 0), right = counts;
    for (int k = 0; k + 1 < n; ++k) {
      ++left[static_cast<std::size_t>(vals[static_cast<std::size_t>(k)].second)];
      --right[static_cast<std::size_t>(vals[static_cast<std::size_t>(k)].second)];
      if (vals[static_cast<std::size_t>(k)].first == vals[static_cast<std::size_t>(k + 1)].first) continue;
      const int nl = k + 1, nr = n - nl;
      const double score = (nl * gini(left, nl) + nr * gini(right, nr)) / n;
      if (score < best_score) {
        best_score = score;
        best_f = f;
        best_t = 0.5 * (vals[static_cast<std::size_t>(k)].first + vals[static_cast<std::size_t>(k + 1)].first);
      }
    }
  }
  if (best_f < 0) return;
  node.role = VertexRole::Branch;
  node.label = -1;
  node.split.a.assign(static_cast<std::size_t>(data.features()), 0.0);
  node.split.a[static_cast<std::size_t>(best_f)] = 1.0;
  node.split.c = -best_t;
  std::vector<int> lrows, rrows;
  for (int i : rows) (data.X[static_cast<std::size_t>(i)][static_cast<std::size_t>(best_f)] < best_t ? lrows : rrows).push_back(i);
  grow_greedy(tree, data, lrows, 2 * v, depth_left - 1);
  grow_greedy(tree, data, rrows, 2 * v + 1, depth_left - 1);
}

}  // namespace detail

/// Axis-aligned greedy tree minimizing weighted Gini impurity at each split.
inline TrainedTree greedy_baseline(const Dataset& train, int depth) {
  if (depth < 1) throw Error(Errc::OutOfRange, "depth must be at least 1");
  TrainedTree tree;
  tree.depth = depth;
  tree.features = train.features();
  tree.class_names = train.class_names;
  tree.feature_names = train.feature_names;
  tree.vertices.assign(static_cast<std::size_t>(1 << (depth + 1)), TreeVertex{});
  std::vector<int> rows(static_cast<std::size_t>(train.rows()));
  for (int i = 0; i < train.rows(); ++i) rows[static_cast<std::size_t>(i)] = i;
  detail::grow_greedy(tree, train, rows, 1, depth);
  return tree;
}

}  // namespace mdt
