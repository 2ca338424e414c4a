#pragma once

#include <bit>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdt/error.hpp"

namespace mdt {

/// Complete binary tree of depth h with heap numbering: root 1, children 2v
/// and 2v+1. Branch vertices are 1..2^h-1, leaves 2^h..2^(h+1)-1.
class TreeShape {
 public:
  explicit TreeShape(int depth) : depth_(depth) {
    if (depth < 1 || depth > 20) {
      throw Error(Errc::OutOfRange, "tree depth must be in [1, 20], got " + std::to_string(depth));
    }
    size_ = (1 << (depth + 1)) - 1;
    // Subtree of v occupies, at each level below v, one contiguous id range.
    descendants_.resize(static_cast<std::size_t>(size_) + 1);
    for (int v = 1; v <= size_; ++v) {
      auto& out = descendants_[static_cast<std::size_t>(v)];
      for (int lo = 2 * v, width = 2; lo <= size_; lo *= 2, width *= 2) {
        for (int u = lo; u < lo + width; ++u) out.push_back(u);
      }
    }
  }

  int depth() const noexcept { return depth_; }
  int size() const noexcept { return size_; }
  int edge_count() const noexcept { return size_ - 1; }
  int branch_count() const noexcept { return (1 << depth_) - 1; }
  int leaf_count() const noexcept { return 1 << depth_; }
  int first_leaf() const noexcept { return 1 << depth_; }

  bool contains(int v) const noexcept { return v >= 1 && v <= size_; }
  bool is_branch(int v) const noexcept { return v >= 1 && v < first_leaf(); }
  bool is_leaf(int v) const noexcept { return v >= first_leaf() && v <= size_; }

  /// Depth of vertex v; the root has depth 0.
  int vertex_depth(int v) const {
    check(v);
    return std::bit_width(static_cast<unsigned>(v)) - 1;
  }

  int parent(int v) const {
    check(v);
    if (v == 1) throw Error(Errc::InvalidVertex, "root has no parent");
    return v / 2;
  }

  std::pair<int, int> children(int v) const {
    check(v);
    if (!is_branch(v)) throw Error(Errc::NoChildren, "vertex " + std::to_string(v) + " is a leaf");
    return {2 * v, 2 * v + 1};
  }
  int left(int v) const { return children(v).first; }
  int right(int v) const { return children(v).second; }

  /// Vertices of the unique root-to-v path, root first.
  std::vector<int> path_to(int v) const {
    check(v);
    std::vector<int> path(static_cast<std::size_t>(vertex_depth(v) + 1));
    for (auto it = path.rbegin(); it != path.rend(); ++it, v /= 2) *it = v;
    return path;
  }

  /// Proper descendants of v in increasing id order (CHILD(v)).
  std::span<const int> descendants(int v) const {
    check(v);
    return descendants_[static_cast<std::size_t>(v)];
  }

  /// True when u lies strictly below v.
  bool is_descendant(int u, int v) const {
    check(u);
    check(v);
    if (u <= v) return false;
    const int shift = vertex_depth(u) - vertex_depth(v);
    return (u >> shift) == v;
  }

 private:
  void check(int v) const {
    if (!contains(v)) {
      throw Error(Errc::InvalidVertex,
                  "vertex " + std::to_string(v) + " outside 1.." + std::to_string(size_));
    }
  }

  int depth_;
  int size_;
  std::vector<std::vector<int>> descendants_;
};

}  // namespace mdt
