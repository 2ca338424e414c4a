#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mdt/data.hpp"
#include "mdt/master.hpp"
#include "mdt/milp.hpp"
#include "mdt/oracle.hpp"
#include "mdt/path_cuts.hpp"
#include "mdt/shattering.hpp"
#include "mdt/svm.hpp"
#include "mdt/tree_topology.hpp"

namespace mdt {

struct TrainConfig {
  int depth = 2;
  Formulation kind = Formulation::Cut;
  ObjectiveMode mode = ObjectiveMode::weighted(0.0);
  bool balanced = false;
  std::optional<FractionalVariant> fractional = FractionalVariant::I;
  FractionalCutMode fractional_where = FractionalCutMode::RootOnly;
  double time_limit = 900.0;
  int mis_rounds = 3;
  double svm_c = 1000.0;
  std::uint64_t seed = 0;
  double gap_tolerance = 0.0;
  // Seed the search with axis-aligned trees realizable by construction.
  bool greedy_start = true;
  std::ostream* event_sink = nullptr;

  void validate() const {
    if (depth < 1) throw Error(Errc::OutOfRange, "depth must be at least 1");
    if (!(time_limit > 0.0)) throw Error(Errc::OutOfRange, "time limit must be positive");
    if (mis_rounds < 1) throw Error(Errc::OutOfRange, "MIS rounds must be at least 1");
    if (!(svm_c > 0.0)) throw Error(Errc::OutOfRange, "SVM box bound must be positive");
  }
};

struct PoolTracePoint {
  double seconds;
  int correct;
  int branching;
};

struct TrainReport {
  TrainedTree tree;
  MilpStatus status = MilpStatus::Infeasible;
  bool has_incumbent = false;
  double objective = 0.0;
  int master_correct = 0;     // sum of s in the incumbent
  int branching = 0;          // sum of b in the incumbent
  int train_correct = 0;      // via predict on the realized hyperplanes
  double train_accuracy = 0;  // percent
  std::optional<double> test_accuracy;
  double seconds = 0.0;
  double gap_percent = 0.0;
  long nodes = 0;
  long lp_solves = 0;
  long path_cuts_integral = 0;
  long path_cuts_fractional = 0;
  long shattering_cuts = 0;
  ShatteringCounters mis;
  std::vector<PoolTracePoint> pool;
  std::vector<std::string> events;
  std::vector<double> stage_objectives;
  // Cuts the incumbent would still trigger; zero at a closed solve.
  long outstanding_path_cuts = 0;
  long outstanding_shattering_cuts = 0;
};

inline int count_correct(const TrainedTree& tree, const Dataset& data) {
  int ok = 0;
  for (int i = 0; i < data.rows(); ++i) {
    ok += predict(tree, data.X[static_cast<std::size_t>(i)]) == data.y[static_cast<std::size_t>(i)];
  }
  return ok;
}

/// Percentage of rows whose predicted class equals the label.
inline double evaluate(const TrainedTree& tree, const Dataset& data) {
  if (data.rows() == 0) return 0.0;
  return 100.0 * count_correct(tree, data) / data.rows();
}

inline int majority_class(const Dataset& data) {
  std::vector<int> counts(static_cast<std::size_t>(std::max(1, data.classes())), 0);
  for (int y : data.y) ++counts[static_cast<std::size_t>(y)];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

/// Solves the master problem with path and shattering cuts, then fits
/// hyperplanes to the resulting routing.
/// Master assignment that routes every row along `tree`; class vertices get
/// p = 1 and their label, vertices under a class vertex stay zero.
inline std::vector<double> master_assignment(const MasterModel& m, const TrainedTree& tree, const Dataset& data) {
  const auto& L = m.layout;
  std::vector<double> x(static_cast<std::size_t>(L.size()), 0.0);
  for (int v = 1; v <= m.shape.size(); ++v) {
    const auto& node = tree.at(v);
    if (node.role == VertexRole::Branch) {
      x[static_cast<std::size_t>(L.b(v))] = 1.0;
    } else if (node.role == VertexRole::Class) {
      x[static_cast<std::size_t>(L.p(v))] = 1.0;
      x[static_cast<std::size_t>(L.w(v, node.label))] = 1.0;
    }
  }
  for (int i = 0; i < data.rows(); ++i) {
    const auto& xi = data.X[static_cast<std::size_t>(i)];
    int v = 1;
    for (;;) {
      x[static_cast<std::size_t>(L.q(i, v))] = 1.0;
      const auto& node = tree.at(v);
      if (node.role != VertexRole::Branch) break;
      v = node.split(xi) < 0.0 ? 2 * v : 2 * v + 1;
    }
    if (tree.at(v).label == data.y[static_cast<std::size_t>(i)]) x[static_cast<std::size_t>(L.s(i, v))] = 1.0;
  }
  return x;
}

namespace detail {

// Turns the lowest-numbered class vertex above the leaf level into a branch
// that sends everything right, keeping its label on both children.
inline bool pad_once(TrainedTree& tree) {
  const int first_leaf = 1 << tree.depth;
  for (int v = 1; v < first_leaf; ++v) {
    auto& node = tree.vertices[static_cast<std::size_t>(v)];
    if (node.role != VertexRole::Class) continue;
    const int label = node.label;
    node.role = VertexRole::Branch;
    node.label = -1;
    node.split.a.assign(static_cast<std::size_t>(tree.features), 0.0);
    node.split.c = 1.0;
    for (int child : {2 * v, 2 * v + 1}) {
      auto& c = tree.vertices[static_cast<std::size_t>(child)];
      c.role = VertexRole::Class;
      c.label = label;
    }
    return true;
  }
  return false;
}

inline TrainedTree embed(const TrainedTree& small, int depth) {
  TrainedTree t = small;
  t.depth = depth;
  t.vertices.resize(static_cast<std::size_t>(1 << (depth + 1)));
  return t;
}

inline std::vector<std::vector<double>> greedy_starts(const MasterModel& m, const Dataset& data, const TrainConfig& config) {
  std::vector<std::vector<double>> out;
  const int h = config.depth;
  for (int d = 0; d <= h; ++d) {
    auto tree = d == 0 ? constant_tree(h, data, majority_class(data)) : embed(greedy_baseline(data, d), h);
    if (config.balanced) {
      while (pad_once(tree)) {
      }
    }
    if (config.mode.kind == ObjectiveMode::Kind::EpsilonConstraint) {
      while (tree.branching_count() < config.mode.budget && pad_once(tree)) {
      }
      if (tree.branching_count() != config.mode.budget) continue;
    }
    out.push_back(master_assignment(m, tree, data));
  }
  return out;
}

}  // namespace detail

inline TrainReport train(const Dataset& data, const TrainConfig& config) {
  config.validate();
  if (data.rows() == 0) throw Error(Errc::InvalidConfig, "training data is empty");
  const auto start = std::chrono::steady_clock::now();
  const TreeShape shape(config.depth);
  const auto master = build_master(shape, data, config.kind, config.mode, config.balanced);
  auto generator = std::make_shared<ShatteringGenerator>(data.rows(), config.mis_rounds);

  CutCallbackBundle cb;
  cb.on_integral = [&master, &data, generator](const std::vector<double>& x) {
    const auto sol = extract_solution(master, x);
    std::vector<CutRow> cuts;
    for (const auto& c : separate_integral(sol, master.kind)) cuts.push_back(render(master, c, "path"));
    for (const auto& c : generator->generate(sol, data.X)) cuts.push_back(render(master, c));
    return cuts;
  };
  if (config.fractional) {
    const auto variant = *config.fractional;
    cb.on_fractional = [&master, variant](const std::vector<double>& x) {
      std::vector<CutRow> cuts;
      for (const auto& c : separate_fractional(master, x, master.kind, variant)) {
        cuts.push_back(render(master, c, "path_fractional"));
      }
      return cuts;
    };
  }
  MilpParams params;
  params.time_limit = config.time_limit;
  params.gap_tolerance = config.gap_tolerance;
  params.fractional_cuts = config.fractional ? config.fractional_where : FractionalCutMode::Off;
  params.event_sink = config.event_sink;
  if (config.greedy_start) params.starts = detail::greedy_starts(master, data, config);

  MilpResult res;
  if (config.mode.kind == ObjectiveMode::Kind::Lexicographic) {
    res = solve_lexicographic(master.milp, master.objectives, config.mode.degradation, cb, params);
  } else {
    res = solve_milp(master.milp, cb, params);
  }

  TrainReport rep;
  rep.status = res.status;
  rep.has_incumbent = res.has_incumbent;
  rep.objective = res.objective;
  rep.gap_percent = res.has_incumbent ? 100.0 * res.gap : 100.0;
  rep.nodes = res.stats.nodes;
  rep.lp_solves = res.stats.lp_solves;
  auto family = [&](const char* name) {
    const auto it = res.stats.cuts_by_family.find(name);
    return it == res.stats.cuts_by_family.end() ? 0L : it->second;
  };
  rep.path_cuts_integral = family("path");
  rep.path_cuts_fractional = family("path_fractional");
  rep.shattering_cuts = family("shattering");
  rep.mis = generator->counters();
  rep.events = res.events.lines;
  rep.stage_objectives = res.stage_objectives;
  const auto s_obj = master.classification_objective();
  const auto b_obj = master.branching_objective();
  for (const auto& p : res.pool) {
    double s = 0, b = 0;
    for (std::size_t j = 0; j < p.x.size(); ++j) {
      s += s_obj[j] * p.x[j];
      b += b_obj[j] * p.x[j];
    }
    rep.pool.push_back({p.seconds, static_cast<int>(std::lround(s)), static_cast<int>(std::lround(b))});
  }
  if (res.has_incumbent) {
    const auto sol = extract_solution(master, res.x);
    rep.master_correct = sol.classification_count();
    rep.branching = sol.branching_count();
    rep.outstanding_path_cuts = static_cast<long>(separate_integral(sol, master.kind).size());
    ShatteringGenerator check(data.rows(), 1);
    rep.outstanding_shattering_cuts = static_cast<long>(check.generate(sol, data.X).size());
    FinalizeOptions fin;
    fin.C = config.svm_c;
    rep.tree = finalize_tree(sol, data, fin);
  } else {
    rep.tree = constant_tree(config.depth, data, majority_class(data));
  }
  rep.train_correct = count_correct(rep.tree, data);
  rep.train_accuracy = 100.0 * rep.train_correct / data.rows();
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

inline TrainReport train(const Dataset& train_data, const Dataset& test_data, const TrainConfig& config) {
  auto rep = train(train_data, config);
  if (test_data.rows() > 0) rep.test_accuracy = evaluate(rep.tree, test_data);
  return rep;
}

/// Picks lambda from `grid` by training on a calibration subset of the
/// training rows and scoring on the rows left out of it; ties go to the
/// smaller lambda.
inline double tune_lambda(const Dataset& train_data, TrainConfig config, std::vector<double> grid,
                          double calibration_fraction = 0.15) {
  if (grid.empty()) throw Error(Errc::InvalidConfig, "lambda grid is empty");
  for (double l : grid) {
    if (!(l >= 0.0 && l <= 1.0)) throw Error(Errc::OutOfRange, "lambda grid values must lie in [0, 1]");
  }
  std::sort(grid.begin(), grid.end());
  if (grid.size() == 1) return grid.front();
  auto calib_idx = calibration_indices(train_data.rows(), calibration_fraction, config.seed);
  if (calib_idx.size() < 2) {
    calib_idx.resize(static_cast<std::size_t>(train_data.rows()));
    std::iota(calib_idx.begin(), calib_idx.end(), 0);
  }
  std::vector<int> rest;
  std::vector<char> in_calib(static_cast<std::size_t>(train_data.rows()), 0);
  for (int i : calib_idx) in_calib[static_cast<std::size_t>(i)] = 1;
  for (int i = 0; i < train_data.rows(); ++i) {
    if (!in_calib[static_cast<std::size_t>(i)]) rest.push_back(i);
  }
  const auto calib = train_data.subset(calib_idx);
  const auto holdout = rest.empty() ? calib : train_data.subset(rest);
  double best_lambda = grid.front();
  double best_acc = -1.0;
  for (double l : grid) {
    config.mode = ObjectiveMode::weighted(l);
    const auto rep = train(calib, config);
    const double acc = evaluate(rep.tree, holdout);
    if (acc > best_acc + 1e-12) {
      best_acc = acc;
      best_lambda = l;
    }
  }
  return best_lambda;
}

struct ParetoPoint {
  int budget;
  int correct;           // master sum of s
  double accuracy;       // percent, via predict
  double seconds;
  double gap_percent;
  MilpStatus status;
  bool dominated = false;
};

/// Marks points beaten by another point using no more branching vertices and
/// classifying at least as many rows, with one of the two strict.
inline void mark_dominated(std::vector<ParetoPoint>& pts) {
  for (auto& a : pts) {
    a.dominated = false;
    for (const auto& b : pts) {
      if (&a == &b) continue;
      if (b.budget <= a.budget && b.correct >= a.correct && (b.budget < a.budget || b.correct > a.correct)) {
        a.dominated = true;
        break;
      }
    }
  }
}

/// Solves max sum s subject to exactly k branching vertices for every k.
inline std::vector<ParetoPoint> pareto_sweep(const Dataset& train_data, TrainConfig config) {
  const TreeShape shape(config.depth);
  std::vector<ParetoPoint> pts;
  for (int k = 0; k <= shape.branch_count(); ++k) {
    config.mode = ObjectiveMode::epsilon_constraint(k);
    const auto rep = train(train_data, config);
    pts.push_back({k, rep.master_correct, rep.train_accuracy, rep.seconds, rep.gap_percent, rep.status, false});
  }
  mark_dominated(pts);
  return pts;
}

}  // namespace mdt
