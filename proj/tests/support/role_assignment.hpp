#pragma once

#include <functional>
#include <vector>

#include "mdt/master.hpp"

namespace mdt::testing {

// Role per vertex: -2 pruned, -1 branching, k >= 0 class k.
using Roles = std::vector<int>;

inline constexpr int kPruned = -2;
inline constexpr int kBranch = -1;

// Every role assignment whose active vertices (no class ancestor) branch or
// carry a class and whose inactive vertices are pruned.
inline std::vector<Roles> enumerate_roles(const TreeShape& shape, int classes) {
  std::vector<Roles> out;
  Roles r(static_cast<std::size_t>(shape.size()) + 1, kPruned);
  std::function<void(std::vector<int>)> rec = [&](std::vector<int> frontier) {
    if (frontier.empty()) {
      out.push_back(r);
      return;
    }
    const int v = frontier.back();
    frontier.pop_back();
    for (int k = 0; k < classes; ++k) {
      r[static_cast<std::size_t>(v)] = k;
      rec(frontier);
    }
    if (shape.is_branch(v)) {
      r[static_cast<std::size_t>(v)] = kBranch;
      auto next = frontier;
      next.push_back(shape.left(v));
      next.push_back(shape.right(v));
      rec(next);
    }
    r[static_cast<std::size_t>(v)] = kPruned;
  };
  rec({1});
  return out;
}

// Master assignment realizing `roles`; point i follows `walk[i]`, a sequence
// of vertices starting at the root, and is counted correct at its last vertex
// when that vertex carries its label.
inline std::vector<double> assignment_from_roles(const MasterModel& m, const Roles& roles,
                                                 const std::vector<std::vector<int>>& walks) {
  const auto& L = m.layout;
  std::vector<double> x(static_cast<std::size_t>(L.size()), 0.0);
  for (int v = 1; v <= m.shape.size(); ++v) {
    const int r = roles[static_cast<std::size_t>(v)];
    if (r == kBranch) x[static_cast<std::size_t>(L.b(v))] = 1.0;
    if (r >= 0) {
      x[static_cast<std::size_t>(L.p(v))] = 1.0;
      x[static_cast<std::size_t>(L.w(v, r))] = 1.0;
    }
  }
  for (int i = 0; i < L.points(); ++i) {
    x[static_cast<std::size_t>(L.q(i, 1))] = 1.0;
    const auto& walk = walks[static_cast<std::size_t>(i)];
    for (int v : walk) x[static_cast<std::size_t>(L.q(i, v))] = 1.0;
    const int end = walk.back();
    if (roles[static_cast<std::size_t>(end)] == m.labels[static_cast<std::size_t>(i)]) {
      x[static_cast<std::size_t>(L.s(i, end))] = 1.0;
    }
  }
  return x;
}

// A root-to-class walk through `roles` choosing children by `go_left`.
template <class Choose>
std::vector<int> walk_roles(const TreeShape& shape, const Roles& roles, Choose go_left) {
  std::vector<int> walk{1};
  int v = 1;
  while (roles[static_cast<std::size_t>(v)] == kBranch) {
    v = go_left(v) ? shape.left(v) : shape.right(v);
    walk.push_back(v);
  }
  return walk;
}

inline bool within_bounds(const LinearProgram& lp, const std::vector<double>& x) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < lp.lower[j] - 1e-9 || x[j] > lp.upper[j] + 1e-9) return false;
  }
  return true;
}

}  // namespace mdt::testing
