#pragma once

#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "mdt/data.hpp"
#include "mdt/error.hpp"
#include "mdt/milp.hpp"
#include "mdt/tree_topology.hpp"

namespace mdt {

enum class Formulation { CutW, Cut };

inline const char* to_string(Formulation f) { return f == Formulation::CutW ? "cutw" : "cut"; }

struct ObjectiveMode {
  enum class Kind { Weighted, Lexicographic, EpsilonConstraint };
  Kind kind = Kind::Weighted;
  double lambda = 0.0;
  double degradation = 0.0;
  int budget = 0;

  static ObjectiveMode weighted(double lambda) { return {Kind::Weighted, lambda, 0.0, 0}; }
  static ObjectiveMode lexicographic(double degradation = 0.0) { return {Kind::Lexicographic, 0.0, degradation, 0}; }
  static ObjectiveMode epsilon_constraint(int k) { return {Kind::EpsilonConstraint, 0.0, 0.0, k}; }
};

/// Column indices of the master variables.
class MasterLayout {
 public:
  MasterLayout() = default;
  MasterLayout(int vertices, int points, int classes) : n_(vertices), I_(points), K_(classes) {}

  int vertices() const noexcept { return n_; }
  int points() const noexcept { return I_; }
  int classes() const noexcept { return K_; }

  int b(int v) const noexcept { return v - 1; }
  int w(int v, int k) const noexcept { return n_ + (v - 1) * K_ + k; }
  int p(int v) const noexcept { return n_ + n_ * K_ + v - 1; }
  int q(int i, int v) const noexcept { return 2 * n_ + n_ * K_ + i * n_ + v - 1; }
  int s(int i, int v) const noexcept { return 2 * n_ + n_ * K_ + I_ * n_ + i * n_ + v - 1; }
  int size() const noexcept { return 2 * n_ + n_ * K_ + 2 * I_ * n_; }

 private:
  int n_ = 0, I_ = 0, K_ = 0;
};

struct MasterModel {
  TreeShape shape{1};
  Formulation kind = Formulation::Cut;
  ObjectiveMode mode;
  bool balanced = false;
  std::vector<int> labels;
  MasterLayout layout;
  MilpModel milp;
  // Priority-ordered objectives for lexicographic solving.
  std::vector<ObjectiveSpec> objectives;
  std::map<std::string, int> row_counts;

  std::vector<double> classification_objective() const {
    std::vector<double> c(static_cast<std::size_t>(layout.size()), 0.0);
    for (int i = 0; i < layout.points(); ++i) {
      for (int v = 1; v <= shape.size(); ++v) c[static_cast<std::size_t>(layout.s(i, v))] = 1.0;
    }
    return c;
  }
  std::vector<double> branching_objective() const {
    std::vector<double> c(static_cast<std::size_t>(layout.size()), 0.0);
    for (int v = 1; v <= shape.size(); ++v) c[static_cast<std::size_t>(layout.b(v))] = 1.0;
    return c;
  }
};

/// Builds the routing master problem over (b, w, p, q, s). Hyperplane rows
/// are left out; they are enforced later through path and shattering cuts.
inline MasterModel build_master(const TreeShape& shape, const Dataset& data, Formulation kind, ObjectiveMode mode,
                                bool balanced) {
  if (mode.kind == ObjectiveMode::Kind::Weighted && !(mode.lambda >= 0.0 && mode.lambda <= 1.0)) {
    throw Error(Errc::OutOfRange, "lambda must lie in [0, 1]");
  }
  if (mode.kind == ObjectiveMode::Kind::EpsilonConstraint && (mode.budget < 0 || mode.budget > shape.branch_count())) {
    throw Error(Errc::OutOfRange, "branching budget must lie in [0, " + std::to_string(shape.branch_count()) + "]");
  }
  if (mode.kind == ObjectiveMode::Kind::Lexicographic && mode.degradation < 0.0) {
    throw Error(Errc::OutOfRange, "priority degradation must be nonnegative");
  }
  if (data.classes() < 1) throw Error(Errc::InvalidConfig, "dataset has no classes");
  if (static_cast<int>(data.y.size()) != data.rows()) throw Error(Errc::DimensionMismatch, "label count differs from row count");
  for (int y : data.y) {
    if (y < 0 || y >= data.classes()) throw Error(Errc::OutOfRange, "label outside 0..K-1");
  }

  MasterModel m;
  m.shape = shape;
  m.kind = kind;
  m.mode = mode;
  m.balanced = balanced;
  m.labels = data.y;
  const int n = shape.size(), I = data.rows(), K = data.classes();
  m.layout = MasterLayout(n, I, K);
  const auto& L = m.layout;
  auto& milp = m.milp;

  for (int v = 1; v <= n; ++v) milp.add_variable(0, shape.is_leaf(v) ? 0 : 1, 0, true, "b");
  for (int v = 1; v <= n; ++v) {
    for (int k = 0; k < K; ++k) milp.add_variable(0, 1, 0, true, "w");
  }
  for (int v = 1; v <= n; ++v) milp.add_variable(0, balanced && shape.is_branch(v) ? 0 : 1, 0, false, "p");
  for (int i = 0; i < I; ++i) {
    for (int v = 1; v <= n; ++v) milp.add_variable(v == 1 ? 1 : 0, 1, 0, true, "q");
  }
  for (int i = 0; i < I; ++i) {
    for (int v = 1; v <= n; ++v) milp.add_variable(0, 1, 0, true, "s");
  }

  auto add = [&](const char* family, std::vector<Term> terms, Relation rel, double rhs) {
    milp.lp.add_row(std::move(terms), rel, rhs);
    ++m.row_counts[family];
  };
  for (int v = 1; v <= n; ++v) {
    std::vector<Term> t{{L.p(v), 1.0}};
    for (int k = 0; k < K; ++k) t.push_back({L.w(v, k), -1.0});
    add("base1", std::move(t), Relation::Equal, 0.0);
  }
  for (int v = 1; v <= n; ++v) {
    std::vector<Term> t{{L.b(v), 1.0}};
    for (int u : shape.path_to(v)) t.push_back({L.p(u), 1.0});
    add("base2", std::move(t), Relation::Equal, 1.0);
  }
  for (int i = 0; i < I; ++i) {
    for (int v = 1; v <= n; ++v) {
      add("base4", {{L.s(i, v), 1.0}, {L.w(v, data.y[static_cast<std::size_t>(i)]), -1.0}}, Relation::LessEqual, 0.0);
    }
  }
  for (int i = 0; i < I; ++i) {
    std::vector<Term> t;
    for (int v = 1; v <= n; ++v) t.push_back({L.s(i, v), 1.0});
    add("base5", std::move(t), Relation::LessEqual, 1.0);
  }
  for (int v = 1; v < shape.first_leaf(); ++v) {
    for (int i = 0; i < I; ++i) add("base6", {{L.q(i, shape.left(v)), 1.0}, {L.b(v), -1.0}}, Relation::LessEqual, 0.0);
  }

  const auto s_obj = m.classification_objective();
  const auto b_obj = m.branching_objective();
  milp.lp.sense = Sense::Maximize;
  switch (mode.kind) {
    case ObjectiveMode::Kind::Weighted:
      for (std::size_t j = 0; j < s_obj.size(); ++j) milp.lp.objective[j] = (1.0 - mode.lambda) * s_obj[j] - mode.lambda * b_obj[j];
      break;
    case ObjectiveMode::Kind::Lexicographic:
      milp.lp.objective = s_obj;
      m.objectives = {{Sense::Maximize, s_obj}, {Sense::Minimize, b_obj}};
      break;
    case ObjectiveMode::Kind::EpsilonConstraint: {
      milp.lp.objective = s_obj;
      std::vector<Term> t;
      for (int v = 1; v <= n; ++v) t.push_back({L.b(v), 1.0});
      add("budget", std::move(t), Relation::Equal, mode.budget);
      break;
    }
  }
  if (m.objectives.empty()) m.objectives = {{Sense::Maximize, milp.lp.objective}};
  return m;
}

/// Role-indexed view of an integral master assignment (vertex ids 1..n).
struct StructuredSolution {
  TreeShape shape{1};
  int points = 0;
  int classes = 0;
  std::vector<int> b, p;                 // [v]
  std::vector<std::vector<int>> w;       // [v][k]
  std::vector<std::vector<int>> q, s;    // [i][v]

  int classification_count() const {
    int total = 0;
    for (const auto& row : s) {
      for (int x : row) total += x;
    }
    return total;
  }
  int branching_count() const {
    int total = 0;
    for (int v = 1; v <= shape.size(); ++v) total += b[static_cast<std::size_t>(v)];
    return total;
  }
  bool is_branching(int v) const {
    if (b[static_cast<std::size_t>(v)] != 1 || p[static_cast<std::size_t>(v)] != 0) return false;
    for (int k = 0; k < classes; ++k) {
      if (w[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] != 0) return false;
    }
    return true;
  }
  // Class assigned at v, or -1.
  int class_at(int v) const {
    if (p[static_cast<std::size_t>(v)] != 1) return -1;
    for (int k = 0; k < classes; ++k) {
      if (w[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] == 1) return k;
    }
    return -1;
  }
};

inline StructuredSolution extract_solution(const MasterModel& m, const std::vector<double>& x) {
  const auto& L = m.layout;
  if (static_cast<int>(x.size()) != L.size()) throw Error(Errc::DimensionMismatch, "assignment length differs from model");
  auto get = [&](int j, const char* name) {
    const double v = x[static_cast<std::size_t>(j)];
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-6) {
      throw Error(Errc::NonIntegral, std::string(name) + " variable " + std::to_string(j) + " = " + std::to_string(v));
    }
    return static_cast<int>(r);
  };
  StructuredSolution sol;
  sol.shape = m.shape;
  sol.points = L.points();
  sol.classes = L.classes();
  const int n = L.vertices();
  sol.b.assign(static_cast<std::size_t>(n) + 1, 0);
  sol.p.assign(static_cast<std::size_t>(n) + 1, 0);
  sol.w.assign(static_cast<std::size_t>(n) + 1, std::vector<int>(static_cast<std::size_t>(L.classes()), 0));
  sol.q.assign(static_cast<std::size_t>(L.points()), std::vector<int>(static_cast<std::size_t>(n) + 1, 0));
  sol.s = sol.q;
  for (int v = 1; v <= n; ++v) {
    sol.b[static_cast<std::size_t>(v)] = get(L.b(v), "b");
    sol.p[static_cast<std::size_t>(v)] = get(L.p(v), "p");
    for (int k = 0; k < L.classes(); ++k) sol.w[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] = get(L.w(v, k), "w");
  }
  for (int i = 0; i < L.points(); ++i) {
    for (int v = 1; v <= n; ++v) {
      sol.q[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)] = get(L.q(i, v), "q");
      sol.s[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)] = get(L.s(i, v), "s");
    }
  }
  return sol;
}

/// Variable and row counts per family, one `name count` pair per line.
inline void write_model_stats(const MasterModel& m, std::ostream& os) {
  os << "formulation " << to_string(m.kind) << '\n';
  os << "depth " << m.shape.depth() << '\n';
  os << "points " << m.layout.points() << '\n';
  os << "classes " << m.layout.classes() << '\n';
  for (const auto& [name, vars] : m.milp.groups) os << "var." << name << ' ' << vars.size() << '\n';
  for (const auto& [name, count] : m.row_counts) os << "row." << name << ' ' << count << '\n';
  os << "rows " << m.milp.lp.num_rows() << '\n';
  os << "variables " << m.milp.num_variables() << '\n';
}

}  // namespace mdt
