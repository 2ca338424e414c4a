#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mdt/error.hpp"
#include "mdt/lp.hpp"

namespace mdt {

struct MilpModel {
  LinearProgram lp;
  std::vector<char> integer;
  std::map<std::string, std::vector<int>> groups;

  int add_variable(double lo, double hi, double obj, bool is_integer, const std::string& group = {}) {
    const int j = lp.add_variable(lo, hi, obj);
    integer.push_back(is_integer ? 1 : 0);
    if (!group.empty()) groups[group].push_back(j);
    return j;
  }

  int num_variables() const noexcept { return lp.num_variables(); }

  void validate() const {
    mdt::validate(lp);
    if (integer.size() != lp.objective.size()) {
      throw Error(Errc::DimensionMismatch, "integrality flags do not match variable count");
    }
    for (std::size_t j = 0; j < integer.size(); ++j) {
      if (integer[j] && (!std::isfinite(lp.lower[j]) || !std::isfinite(lp.upper[j]))) {
        throw Error(Errc::InvalidConfig, "integer variable " + std::to_string(j) + " has an infinite bound");
      }
    }
    std::vector<char> seen(integer.size(), 0);
    for (const auto& [name, vars] : groups) {
      for (int j : vars) {
        if (j < 0 || j >= num_variables()) throw Error(Errc::DimensionMismatch, "group " + name + " references unknown variable");
        if (seen[static_cast<std::size_t>(j)]++) throw Error(Errc::InvalidConfig, "variable " + std::to_string(j) + " is in two groups");
      }
    }
  }
};

/// A cut row tagged with the family that produced it (for statistics).
struct CutRow {
  Row row;
  std::string family;
};

inline double row_activity(const Row& row, const std::vector<double>& x) {
  double act = 0.0;
  for (const auto& t : row.terms) act += t.coef * x[static_cast<std::size_t>(t.var)];
  return act;
}

/// Amount by which x violates the row; <= 0 when satisfied.
inline double row_violation(const Row& row, const std::vector<double>& x) {
  const double act = row_activity(row, x);
  switch (row.relation) {
    case Relation::LessEqual: return act - row.rhs;
    case Relation::GreaterEqual: return row.rhs - act;
    case Relation::Equal: return std::abs(act - row.rhs);
  }
  return 0.0;
}

/// Canonical text key of a row: terms sorted by variable, merged, zero-free.
inline std::string row_key(const Row& row) {
  auto terms = row.terms;
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
  std::ostringstream os;
  os.precision(17);
  for (std::size_t k = 0; k < terms.size();) {
    double c = 0.0;
    const int v = terms[k].var;
    for (; k < terms.size() && terms[k].var == v; ++k) c += terms[k].coef;
    if (c != 0.0) os << v << ':' << c << ' ';
  }
  os << static_cast<int>(row.relation) << ' ' << row.rhs;
  return os.str();
}

struct CutCallbackBundle {
  // Receives a candidate whose integer variables are rounded. Must return
  // every family member needed to reject an infeasible candidate.
  std::function<std::vector<CutRow>(const std::vector<double>&)> on_integral;
  // Receives the fractional relaxation values; cuts are optional.
  std::function<std::vector<CutRow>(const std::vector<double>&)> on_fractional;
};

enum class FractionalCutMode { Off, RootOnly, AllNodes };

struct NodeView {
  long id;
  int depth;
  const std::vector<double>& lower;
  const std::vector<double>& upper;
  double lp_objective;
  const std::vector<double>& x;
};

struct MilpParams {
  double time_limit = 900.0;
  double gap_tolerance = 0.0;
  FractionalCutMode fractional_cuts = FractionalCutMode::RootOnly;
  int root_cut_rounds = 50;
  int node_cut_rounds = 5;
  double violation_tol = 1e-4;
  double integrality_tol = 1e-6;
  long node_limit = -1;
  // Candidate solutions tried before the root; each is kept only if it meets
  // every row, bound and integrality flag and draws no lazy cut.
  std::vector<std::vector<double>> starts;
  // Called after every node LP that is solved to optimality (after cuts).
  std::function<void(const NodeView&)> node_observer;
  std::ostream* event_sink = nullptr;
};

enum class MilpStatus { Optimal, Feasible, Infeasible, TimeLimit };

inline const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::Optimal: return "Optimal";
    case MilpStatus::Feasible: return "Feasible";
    case MilpStatus::Infeasible: return "Infeasible";
    case MilpStatus::TimeLimit: return "TimeLimit";
  }
  return "?";
}

struct PoolEntry {
  double seconds;
  double objective;
  std::vector<double> x;
};

struct MilpStats {
  long nodes = 0;
  long lp_solves = 0;
  long pivots = 0;
  long integral_callbacks = 0;
  long fractional_callbacks = 0;
  long purged_cuts = 0;
  std::map<std::string, long> cuts_by_family;
};

struct EventLog {
  std::vector<std::string> lines;
  std::ostream* sink = nullptr;

  void add(double seconds, const std::string& text) {
    char stamp[32];
    std::snprintf(stamp, sizeof stamp, "%.4f", seconds);
    lines.push_back(std::string(stamp) + " " + text);
    if (sink) *sink << lines.back() << '\n';
  }
};

struct MilpResult {
  MilpStatus status = MilpStatus::Infeasible;
  bool has_incumbent = false;
  std::vector<double> x;
  double objective = 0.0;
  double bound = 0.0;
  double gap = 0.0;
  double seconds = 0.0;
  MilpStats stats;
  std::vector<PoolEntry> pool;
  std::vector<CutRow> cuts;
  EventLog events;
  std::vector<double> stage_objectives;
};

inline double relative_gap(double bound, double incumbent) {
  return std::abs(bound - incumbent) / std::max(1.0, std::abs(incumbent));
}

namespace detail {

// Granularity g > 0 such that every integral solution's objective is a
// multiple of g, or 0 when no such structure is detected.
inline double objective_granularity(const MilpModel& m) {
  double g = 0.0;
  for (int j = 0; j < m.num_variables(); ++j) {
    const double c = std::abs(m.lp.objective[static_cast<std::size_t>(j)]);
    if (c == 0.0) continue;
    if (!m.integer[static_cast<std::size_t>(j)]) return 0.0;
    if (g == 0.0 || c < g) g = c;
  }
  if (g == 0.0) return 0.0;
  for (int j = 0; j < m.num_variables(); ++j) {
    const double r = m.lp.objective[static_cast<std::size_t>(j)] / g;
    if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, std::abs(r))) return 0.0;
  }
  return g;
}

class BranchAndCut {
 public:
  BranchAndCut(const MilpModel& model, const CutCallbackBundle& cb, const MilpParams& params)
      : model_(model), cb_(cb), params_(params), solver_(model.lp) {
    model_.validate();
    sign_ = model.lp.sense == Sense::Maximize ? 1.0 : -1.0;
    granularity_ = objective_granularity(model);
    root_lower_ = model.lp.lower;
    root_upper_ = model.lp.upper;
    cur_lower_ = root_lower_;
    cur_upper_ = root_upper_;
    for (const auto& row : model.lp.rows) keys_.insert(row_key(row));
    result_.events.sink = params.event_sink;
    start_ = std::chrono::steady_clock::now();
  }

  MilpResult run() {
    for (const auto& x : params_.starts) {
      if (elapsed() > params_.time_limit) break;
      try_start(x);
    }
    push(Node{0, 0, kInf, {}});
    bool stopped_time = false, stopped_nodes = false;
    while (!open_.empty()) {
      if (elapsed() > params_.time_limit) {
        stopped_time = true;
        break;
      }
      if (params_.node_limit >= 0 && result_.stats.nodes >= params_.node_limit) {
        stopped_nodes = true;
        break;
      }
      if (has_inc_ && relative_gap(global_bound(), inc_obj_) <= params_.gap_tolerance) break;
      Node node = open_.top();
      open_.pop();
      if (has_inc_ && prunable(node.bound)) continue;
      process(node);
      if (result_.stats.nodes % kPurgeInterval == 0) purge();
    }
    finish(stopped_time, stopped_nodes);
    return std::move(result_);
  }

 private:
  struct Node {
    long id;
    int depth;
    double bound;  // parent LP bound in the internal max sense, rounded down to the objective granularity
    std::vector<BoundChange> decisions;
  };
  struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
      if (a.bound != b.bound) return a.bound < b.bound;
      if (a.depth != b.depth) return a.depth < b.depth;
      return a.id < b.id;
    }
  };

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  // Tightest bound implied by an LP value (internal max sense).
  double effective(double z) const {
    if (granularity_ > 0.0) return granularity_ * std::floor(z / granularity_ + 1e-6);
    return z;
  }

  bool prunable(double z) const {
    const double eff = effective(z);
    if (eff <= inc_obj_ + 1e-9) return true;
    return params_.gap_tolerance > 0.0 && relative_gap(eff, inc_obj_) <= params_.gap_tolerance;
  }

  double global_bound() const {
    double b = has_inc_ ? inc_obj_ : -kInf;
    if (!open_.empty()) b = std::max(b, effective(open_.top().bound));
    return b;
  }

  void push(Node n) { open_.push(std::move(n)); }

  void move_to(const Node& node) {
    std::vector<double> lo = root_lower_, hi = root_upper_;
    for (const auto& d : node.decisions) {
      lo[static_cast<std::size_t>(d.var)] = d.lower;
      hi[static_cast<std::size_t>(d.var)] = d.upper;
    }
    std::vector<BoundChange> changes;
    for (std::size_t j = 0; j < lo.size(); ++j) {
      if (lo[j] != cur_lower_[j] || hi[j] != cur_upper_[j]) changes.push_back({static_cast<int>(j), lo[j], hi[j]});
    }
    cur_lower_ = std::move(lo);
    cur_upper_ = std::move(hi);
    if (!started_) {
      started_ = true;
      status_ = solver_.solve();
    } else if (!changes.empty()) {
      status_ = solver_.change_bounds(changes);
    }
    count_lp();
  }

  void count_lp() {
    ++result_.stats.lp_solves;
    result_.stats.pivots = solver_.pivots();
  }

  // Adds the violated, unseen cuts; returns how many were added.
  int add_cuts(std::vector<CutRow> cuts, const std::vector<double>& x, const char* source) {
    std::vector<Row> rows;
    std::map<std::string, long> fam;
    for (auto& c : cuts) {
      if (row_violation(c.row, x) <= params_.violation_tol) continue;
      if (!keys_.insert(row_key(c.row)).second) continue;
      rows.push_back(c.row);
      ++fam[c.family];
      result_.cuts.push_back(std::move(c));
    }
    if (rows.empty()) return 0;
    for (const auto& [name, n] : fam) result_.stats.cuts_by_family[name] += n;
    std::ostringstream os;
    os << "cuts source=" << source << " added=" << rows.size();
    for (const auto& [name, n] : fam) os << ' ' << name << '=' << n;
    result_.events.add(elapsed(), os.str());
    status_ = solver_.add_rows(rows);
    count_lp();
    return static_cast<int>(rows.size());
  }

  bool has_duplicate_violation(const std::vector<CutRow>& cuts, const std::vector<double>& x) const {
    for (const auto& c : cuts) {
      if (row_violation(c.row, x) > params_.violation_tol && keys_.count(row_key(c.row))) return true;
    }
    return false;
  }

  std::vector<double> rounded(const std::vector<double>& x) const {
    auto r = x;
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (model_.integer[j]) r[j] = std::round(r[j]);
    }
    return r;
  }

  int most_fractional(const std::vector<double>& x) const {
    int best = -1;
    double best_frac = params_.integrality_tol;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!model_.integer[j]) continue;
      const double f = std::abs(x[j] - std::round(x[j]));
      if (f > best_frac + 1e-12) {
        best_frac = f;
        best = static_cast<int>(j);
      }
    }
    return best;
  }

  void process(const Node& node) {
    ++result_.stats.nodes;
    move_to(node);
    const bool root = node.depth == 0;
    const bool frac_here = cb_.on_fractional &&
                           (params_.fractional_cuts == FractionalCutMode::AllNodes ||
                            (root && params_.fractional_cuts == FractionalCutMode::RootOnly));
    int frac_rounds = 0;
    const int frac_cap = root ? params_.root_cut_rounds : params_.node_cut_rounds;
    bool refactored = false;
    for (;;) {
      if (status_ == LPStatus::Infeasible) return;
      if (status_ == LPStatus::Unbounded) throw Error(Errc::InvalidConfig, "node relaxation is unbounded");
      const auto x = solver_.solution();
      const double z = sign_ * solver_.objective();
      if (has_inc_ && prunable(z)) return;
      if (frac_here && frac_rounds < frac_cap) {
        ++frac_rounds;
        ++result_.stats.fractional_callbacks;
        if (add_cuts(cb_.on_fractional(x), x, "fractional") > 0) continue;
        frac_rounds = frac_cap;
      }
      if (params_.node_observer) params_.node_observer(NodeView{node.id, node.depth, cur_lower_, cur_upper_, sign_ * z, x});
      const int j = most_fractional(x);
      if (j < 0) {
        const auto cand = rounded(x);
        std::vector<CutRow> lazy;
        if (cb_.on_integral) {
          ++result_.stats.integral_callbacks;
          lazy = cb_.on_integral(cand);
        }
        if (add_cuts(lazy, cand, "integral") > 0) continue;
        if (has_duplicate_violation(lazy, cand)) {
          if (refactored) throw Error(Errc::InvalidConfig, "pooled lazy cut remains violated after refactorization");
          refactored = true;
          status_ = solver_.solve();
          count_lp();
          continue;
        }
        accept(cand);
        return;
      }
      const double v = x[static_cast<std::size_t>(j)];
      const double zb = effective(z);
      Node down{next_id_++, node.depth + 1, zb, node.decisions};
      down.decisions.push_back({j, cur_lower_[static_cast<std::size_t>(j)], std::floor(v)});
      Node up{next_id_++, node.depth + 1, zb, node.decisions};
      up.decisions.push_back({j, std::ceil(v), cur_upper_[static_cast<std::size_t>(j)]});
      push(std::move(down));
      push(std::move(up));
      return;
    }
  }

  // Drops cut rows that are slack at the current node. Their keys are
  // forgotten so that a callback can add them back when violated again.
  void purge() {
    const auto removed = solver_.remove_slack_rows(static_cast<std::size_t>(model_.lp.num_rows()), 1e-6);
    if (removed.empty()) return;
    for (const auto& row : removed) keys_.erase(row_key(row));
    result_.stats.purged_cuts += static_cast<long>(removed.size());
    result_.events.add(elapsed(), "purge removed=" + std::to_string(removed.size()));
  }

  void try_start(const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != model_.num_variables()) return;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] < root_lower_[j] - 1e-9 || x[j] > root_upper_[j] + 1e-9) return;
      if (model_.integer[j] && std::abs(x[j] - std::round(x[j])) > params_.integrality_tol) return;
    }
    for (const auto& row : model_.lp.rows) {
      if (row_violation(row, x) > 1e-9) return;
    }
    if (cb_.on_integral) {
      ++result_.stats.integral_callbacks;
      for (const auto& c : cb_.on_integral(x)) {
        if (row_violation(c.row, x) > params_.violation_tol) return;
      }
    }
    accept(x, "start");
  }

  void accept(const std::vector<double>& cand, const char* source = "search") {
    double obj = 0.0;
    for (std::size_t j = 0; j < cand.size(); ++j) obj += model_.lp.objective[j] * cand[j];
    const double internal = sign_ * obj;
    if (has_inc_ && internal <= inc_obj_ + 1e-9) return;
    has_inc_ = true;
    inc_obj_ = internal;
    inc_x_ = cand;
    result_.pool.push_back(PoolEntry{elapsed(), obj, cand});
    std::ostringstream os;
    os.precision(12);
    os << "incumbent objective=" << obj << " source=" << source << " nodes=" << result_.stats.nodes;
    result_.events.add(elapsed(), os.str());
  }

  void finish(bool stopped_time, bool stopped_nodes) {
    result_.seconds = elapsed();
    result_.has_incumbent = has_inc_;
    const bool exhausted = open_.empty();
    double bound_internal;
    if (exhausted) bound_internal = has_inc_ ? inc_obj_ : -kInf;
    else bound_internal = global_bound();
    if (has_inc_) {
      result_.x = inc_x_;
      result_.objective = sign_ * inc_obj_;
      result_.bound = sign_ * bound_internal;
      result_.gap = relative_gap(bound_internal, inc_obj_);
    } else {
      result_.bound = sign_ * bound_internal;
      result_.gap = kInf;
    }
    if (has_inc_ && result_.gap <= params_.gap_tolerance) result_.status = MilpStatus::Optimal;
    else if (stopped_time) result_.status = MilpStatus::TimeLimit;
    else if (stopped_nodes) result_.status = has_inc_ ? MilpStatus::Feasible : MilpStatus::TimeLimit;
    else result_.status = has_inc_ ? MilpStatus::Optimal : MilpStatus::Infeasible;
    result_.stats.pivots = solver_.pivots();
    std::ostringstream os;
    os.precision(12);
    os << "finish status=" << to_string(result_.status) << " nodes=" << result_.stats.nodes
       << " lps=" << result_.stats.lp_solves << " bound=" << result_.bound;
    if (has_inc_) os << " objective=" << result_.objective;
    result_.events.add(result_.seconds, os.str());
  }

  static constexpr long kPurgeInterval = 50;

  MilpModel model_;
  CutCallbackBundle cb_;
  MilpParams params_;
  SimplexSolver solver_;
  double sign_ = 1.0;
  double granularity_ = 0.0;
  std::vector<double> root_lower_, root_upper_, cur_lower_, cur_upper_;
  std::unordered_set<std::string> keys_;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open_;
  long next_id_ = 1;
  bool started_ = false;
  LPStatus status_ = LPStatus::Infeasible;
  bool has_inc_ = false;
  double inc_obj_ = -kInf;
  std::vector<double> inc_x_;
  MilpResult result_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Best-bound branch-and-cut with lazy (integral) and user (fractional) cuts.
inline MilpResult solve_milp(const MilpModel& model, const CutCallbackBundle& callbacks = {}, const MilpParams& params = {}) {
  return detail::BranchAndCut(model, callbacks, params).run();
}

struct ObjectiveSpec {
  Sense sense = Sense::Maximize;
  std::vector<double> coefficients;
};

/// Solves objectives in priority order; each later stage keeps every earlier
/// objective within `degradation` of its optimum and inherits all cuts.
inline MilpResult solve_lexicographic(const MilpModel& model, const std::vector<ObjectiveSpec>& objectives, double degradation,
                                      const CutCallbackBundle& callbacks = {}, MilpParams params = {}) {
  if (objectives.empty()) throw Error(Errc::InvalidConfig, "lexicographic solve needs at least one objective");
  if (degradation < 0.0) throw Error(Errc::InvalidConfig, "priority degradation must be nonnegative");
  const auto start = std::chrono::steady_clock::now();
  const double total_limit = params.time_limit;
  MilpModel stage = model;
  MilpResult out;
  MilpStats stats;
  std::vector<PoolEntry> pool;
  std::vector<CutRow> cuts;
  EventLog events;
  events.sink = nullptr;
  std::vector<double> stage_objectives;
  for (std::size_t k = 0; k < objectives.size(); ++k) {
    const auto& obj = objectives[k];
    if (static_cast<int>(obj.coefficients.size()) != model.num_variables()) {
      throw Error(Errc::DimensionMismatch, "objective length does not match variable count");
    }
    stage.lp.sense = obj.sense;
    stage.lp.objective = obj.coefficients;
    const double used = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    params.time_limit = std::max(0.0, total_limit - used);
    MilpResult r = solve_milp(stage, callbacks, params);
    const double offset = used;
    for (auto& p : r.pool) {
      p.seconds += offset;
      pool.push_back(std::move(p));
    }
    for (const auto& line : r.events.lines) events.lines.push_back("stage" + std::to_string(k + 1) + " " + line);
    stats.nodes += r.stats.nodes;
    stats.lp_solves += r.stats.lp_solves;
    stats.pivots += r.stats.pivots;
    stats.integral_callbacks += r.stats.integral_callbacks;
    stats.fractional_callbacks += r.stats.fractional_callbacks;
    for (const auto& [name, n] : r.stats.cuts_by_family) stats.cuts_by_family[name] += n;
    for (const auto& c : r.cuts) {
      stage.lp.rows.push_back(c.row);
      cuts.push_back(c);
    }
    out = std::move(r);
    if (!out.has_incumbent) break;
    stage_objectives.push_back(out.objective);
    if (k + 1 < objectives.size()) {
      if (out.status != MilpStatus::Optimal) break;
      std::vector<Term> terms;
      for (int j = 0; j < model.num_variables(); ++j) {
        const double c = obj.coefficients[static_cast<std::size_t>(j)];
        if (c != 0.0) terms.push_back({j, c});
      }
      params.starts = {out.x};
      if (obj.sense == Sense::Maximize) stage.lp.add_row(std::move(terms), Relation::GreaterEqual, out.objective - degradation - 1e-9);
      else stage.lp.add_row(std::move(terms), Relation::LessEqual, out.objective + degradation + 1e-9);
    }
  }
  out.stats = std::move(stats);
  out.pool = std::move(pool);
  out.cuts = std::move(cuts);
  out.events.lines = std::move(events.lines);
  out.stage_objectives = std::move(stage_objectives);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace mdt
