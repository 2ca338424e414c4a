#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdt/error.hpp"
#include "mdt/lp.hpp"
#include "mdt/master.hpp"
#include "mdt/shattering.hpp"
#include "mdt/tree_topology.hpp"

namespace mdt {

struct Hyperplane {
  std::vector<double> a;
  double c = 0.0;

  double operator()(const std::vector<double>& x) const {
    double f = c;
    for (std::size_t k = 0; k < a.size(); ++k) f += a[k] * x[k];
    return f;
  }
};

struct DualSolution {
  std::vector<double> beta;
  std::vector<int> delta;
  std::vector<double> a;   // sum_i beta_i delta_i x_i
  double objective = 0.0;  // sum beta - |a|^2 / 2
  double kkt_gap = 0.0;    // max violating-pair gap at termination
  long iterations = 0;
};

struct SvmOptions {
  double tolerance = 1e-6;
  long max_iterations = 100000;
};

/// Soft-margin dual SVM with a linear kernel by pairwise coordinate ascent.
/// The first index is the maximal KKT violator, its partner the violator
/// promising the largest second-order gain.
/// C may be +infinity for the hard-margin problem.
inline DualSolution solve_svm_dual(const std::vector<std::vector<double>>& X, const std::vector<int>& delta, double C,
                                   const SvmOptions& opt = {}) {
  const std::size_t n = X.size();
  if (delta.size() != n) throw Error(Errc::DimensionMismatch, "label count differs from point count");
  if (!(C > 0.0)) throw Error(Errc::OutOfRange, "box bound C must be positive");
  bool has_neg = false, has_pos = false;
  for (int d : delta) {
    if (d == -1) has_neg = true;
    else if (d == 1) has_pos = true;
    else throw Error(Errc::InvalidLabels, "labels must be -1 or +1");
  }
  if (!has_neg || !has_pos) throw Error(Errc::InvalidLabels, "both sides need at least one point");
  const std::size_t F = X.front().size();
  for (const auto& x : X) {
    if (x.size() != F) throw Error(Errc::DimensionMismatch, "ragged feature matrix");
  }

  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t f = 0; f < F; ++f) dot += X[i][f] * X[j][f];
      K[i * n + j] = K[j * n + i] = dot;
    }
  }
  DualSolution sol;
  sol.delta = delta;
  sol.beta.assign(n, 0.0);
  // grad_i of the minimization form 1/2 b'Qb - sum b, Q_ij = d_i d_j K_ij.
  std::vector<double> grad(n, -1.0);
  auto yd = [&](std::size_t i) { return static_cast<double>(delta[i]); };
  auto in_up = [&](std::size_t i) { return (delta[i] == 1 && sol.beta[i] < C) || (delta[i] == -1 && sol.beta[i] > 0.0); };
  auto in_low = [&](std::size_t i) { return (delta[i] == 1 && sol.beta[i] > 0.0) || (delta[i] == -1 && sol.beta[i] < C); };

  long it = 0;
  for (; it < opt.max_iterations; ++it) {
    std::size_t i = n, j = n;
    double gmax = -kInf, gmin = kInf;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -yd(t) * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
    }
    // Partner: the violator with the largest second-order objective gain.
    double best_gain = -kInf;
    for (std::size_t t = 0; t < n && i < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -yd(t) * grad[t];
      gmin = std::min(gmin, v);
      if (v >= gmax) continue;
      const double diff = gmax - v;
      const double curv = std::max(K[i * n + i] + K[t * n + t] - 2.0 * K[i * n + t], 1e-12);
      const double gain = diff * diff / curv;
      if (gain > best_gain) {
        best_gain = gain;
        j = t;
      }
    }
    sol.kkt_gap = gmax - gmin;
    if (i == n || j == n || sol.kkt_gap <= opt.tolerance) break;
    // Move along d_i e_i - d_j e_j, keeping sum beta_i d_i fixed.
    const double curv = std::max(K[i * n + i] + K[j * n + j] - 2.0 * K[i * n + j], 1e-12);
    double step = (gmax + yd(j) * grad[j]) / curv;
    auto room = [&](std::size_t t, double dir) {
      // Largest feasible step when beta_t changes by dir * step.
      if (dir > 0) return C - sol.beta[t];
      return sol.beta[t];
    };
    step = std::min(step, room(i, yd(i)));
    step = std::min(step, room(j, -yd(j)));
    if (!(step > 0.0)) break;
    const double di = yd(i) * step, dj = -yd(j) * step;
    sol.beta[i] += di;
    sol.beta[j] += dj;
    if (sol.beta[i] < 1e-15) sol.beta[i] = 0.0;
    if (sol.beta[j] < 1e-15) sol.beta[j] = 0.0;
    if (std::isfinite(C)) {
      if (C - sol.beta[i] < 1e-15 * C) sol.beta[i] = C;
      if (C - sol.beta[j] < 1e-15 * C) sol.beta[j] = C;
    }
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += yd(t) * (yd(i) * K[t * n + i] * di + yd(j) * K[t * n + j] * dj);
    }
  }
  sol.iterations = it;
  sol.a.assign(F, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.beta[i] == 0.0) continue;
    for (std::size_t f = 0; f < F; ++f) sol.a[f] += sol.beta[i] * yd(i) * X[i][f];
  }
  double norm2 = 0.0;
  for (double v : sol.a) norm2 += v * v;
  double total = 0.0;
  for (double b : sol.beta) total += b;
  sol.objective = total - 0.5 * norm2;
  return sol;
}

/// Offset from the lowest-index point with positive multiplier.
inline double svm_offset(const DualSolution& d, const std::vector<std::vector<double>>& X) {
  for (std::size_t k = 0; k < d.beta.size(); ++k) {
    if (d.beta[k] > 0.0) {
      double ax = 0.0;
      for (std::size_t f = 0; f < d.a.size(); ++f) ax += d.a[f] * X[k][f];
      return static_cast<double>(d.delta[k]) - ax;
    }
  }
  return 0.0;
}

enum class VertexRole { Branch, Class, Pruned };

inline const char* to_string(VertexRole r) {
  switch (r) {
    case VertexRole::Branch: return "branch";
    case VertexRole::Class: return "class";
    case VertexRole::Pruned: return "pruned";
  }
  return "?";
}

struct TreeVertex {
  VertexRole role = VertexRole::Pruned;
  Hyperplane split;
  int label = -1;
  bool weak = false;
};

struct TrainedTree {
  int depth = 1;
  int features = 0;
  std::vector<TreeVertex> vertices;  // index 1..2^(h+1)-1; slot 0 unused
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;

  int size() const noexcept { return static_cast<int>(vertices.size()) - 1; }
  const TreeVertex& at(int v) const { return vertices.at(static_cast<std::size_t>(v)); }
  int branching_count() const {
    int n = 0;
    for (int v = 1; v <= size(); ++v) n += at(v).role == VertexRole::Branch;
    return n;
  }
  std::vector<int> weak_vertices() const {
    std::vector<int> out;
    for (int v = 1; v <= size(); ++v) {
      if (at(v).weak) out.push_back(v);
    }
    return out;
  }
};

/// Vertex where x stops: the class vertex reached by the routing walk.
inline int terminal_vertex(const TrainedTree& tree, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != tree.features) throw Error(Errc::DimensionMismatch, "feature vector has wrong length");
  int v = 1;
  for (;;) {
    if (v > tree.size()) throw Error(Errc::InvalidTree, "walk left the tree without reaching a class vertex");
    const auto& node = tree.at(v);
    if (node.role == VertexRole::Class) return v;
    if (node.role == VertexRole::Branch) v = node.split(x) < 0.0 ? 2 * v : 2 * v + 1;
    else v = 2 * v + 1;
  }
}

inline int predict(const TrainedTree& tree, const std::vector<double>& x) {
  return tree.at(terminal_vertex(tree, x)).label;
}

struct FinalizeOptions {
  double C = 1000.0;
  SvmOptions svm;
};

/// Recovers a hyperplane for every branching vertex of an integral master
/// solution; class vertices take their assigned class, the rest are pruned.
inline TrainedTree finalize_tree(const StructuredSolution& sol, const Dataset& data, const FinalizeOptions& opt = {}) {
  const auto& shape = sol.shape;
  const int F = data.features();
  TrainedTree tree;
  tree.depth = shape.depth();
  tree.features = F;
  tree.class_names = data.class_names;
  tree.feature_names = data.feature_names;
  tree.vertices.assign(static_cast<std::size_t>(shape.size()) + 1, TreeVertex{});
  for (int v = 1; v <= shape.size(); ++v) {
    auto& node = tree.vertices[static_cast<std::size_t>(v)];
    const int cls = sol.class_at(v);
    if (cls >= 0) {
      node.role = VertexRole::Class;
      node.label = cls;
      continue;
    }
    if (!shape.is_branch(v) || !sol.is_branching(v)) continue;
    node.role = VertexRole::Branch;
    const auto sides = build_sides(sol, v);
    node.split.a.assign(static_cast<std::size_t>(F), 0.0);
    if (sides.left.empty()) {
      node.split.c = 1.0;
      continue;
    }
    if (sides.right.empty()) {
      node.split.c = -1.0;
      continue;
    }
    std::vector<std::vector<double>> pts;
    std::vector<int> delta;
    for (int i : sides.left) {
      pts.push_back(data.X[static_cast<std::size_t>(i)]);
      delta.push_back(-1);
    }
    for (int i : sides.right) {
      pts.push_back(data.X[static_cast<std::size_t>(i)]);
      delta.push_back(1);
    }
    const auto dual = solve_svm_dual(pts, delta, opt.C, opt.svm);
    double norm2 = 0.0;
    for (double v2 : dual.a) norm2 += v2 * v2;
    if (std::sqrt(norm2) <= 1e-9) {
      node.split.c = 1.0;
      node.weak = true;
      continue;
    }
    node.split.a = dual.a;
    node.split.c = svm_offset(dual, pts);
    for (std::size_t t = 0; t < pts.size(); ++t) {
      const bool goes_left = node.split(pts[t]) < 0.0;
      if (goes_left != (delta[t] == -1)) node.weak = true;
    }
  }
  return tree;
}

/// A tree that predicts one class at the root.
inline TrainedTree constant_tree(int depth, const Dataset& data, int label) {
  TrainedTree tree;
  tree.depth = depth;
  tree.features = data.features();
  tree.class_names = data.class_names;
  tree.feature_names = data.feature_names;
  tree.vertices.assign(static_cast<std::size_t>((1 << (depth + 1))), TreeVertex{});
  tree.vertices[1].role = VertexRole::Class;
  tree.vertices[1].label = label;
  return tree;
}

inline nlohmann::json tree_to_json(const TrainedTree& tree) {
  nlohmann::json j;
  j["depth"] = tree.depth;
  j["features"] = tree.features;
  j["class_names"] = tree.class_names;
  j["feature_names"] = tree.feature_names;
  auto& verts = j["vertices"] = nlohmann::json::array();
  for (int v = 1; v <= tree.size(); ++v) {
    const auto& node = tree.at(v);
    nlohmann::json e;
    e["id"] = v;
    e["role"] = to_string(node.role);
    if (node.role == VertexRole::Branch) {
      e["a"] = node.split.a;
      e["c"] = node.split.c;
      e["weak"] = node.weak;
    } else if (node.role == VertexRole::Class) {
      e["class"] = node.label;
    }
    verts.push_back(std::move(e));
  }
  return j;
}

inline TrainedTree tree_from_json(const nlohmann::json& j) {
  try {
    TrainedTree tree;
    tree.depth = j.at("depth").get<int>();
    if (tree.depth < 1 || tree.depth > 20) throw Error(Errc::InvalidTree, "depth out of range");
    tree.features = j.at("features").get<int>();
    tree.class_names = j.at("class_names").get<std::vector<std::string>>();
    tree.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    tree.vertices.assign(static_cast<std::size_t>(1 << (tree.depth + 1)), TreeVertex{});
    for (const auto& e : j.at("vertices")) {
      const int v = e.at("id").get<int>();
      if (v < 1 || v > tree.size()) throw Error(Errc::InvalidTree, "vertex id out of range");
      auto& node = tree.vertices[static_cast<std::size_t>(v)];
      const auto role = e.at("role").get<std::string>();
      if (role == "branch") {
        node.role = VertexRole::Branch;
        node.split.a = e.at("a").get<std::vector<double>>();
        node.split.c = e.at("c").get<double>();
        node.weak = e.value("weak", false);
        if (static_cast<int>(node.split.a.size()) != tree.features) throw Error(Errc::InvalidTree, "hyperplane length mismatch");
      } else if (role == "class") {
        node.role = VertexRole::Class;
        node.label = e.at("class").get<int>();
      } else if (role == "pruned") {
        node.role = VertexRole::Pruned;
      } else {
        throw Error(Errc::InvalidTree, "unknown role '" + role + "'");
      }
    }
    return tree;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::InvalidTree, ex.what());
  }
}

}  // namespace mdt
