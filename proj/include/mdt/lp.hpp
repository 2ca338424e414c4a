#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mdt/error.hpp"

namespace mdt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Maximize, Minimize };
enum class Relation { LessEqual, Equal, GreaterEqual };

struct Term {
  int var;
  double coef;
};

struct Row {
  std::vector<Term> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

struct LinearProgram {
  Sense sense = Sense::Maximize;
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Row> rows;

  int num_variables() const noexcept { return static_cast<int>(objective.size()); }
  int num_rows() const noexcept { return static_cast<int>(rows.size()); }

  int add_variable(double lo, double hi, double obj = 0.0) {
    objective.push_back(obj);
    lower.push_back(lo);
    upper.push_back(hi);
    return num_variables() - 1;
  }

  void add_row(std::vector<Term> terms, Relation rel, double rhs) {
    rows.push_back(Row{std::move(terms), rel, rhs});
  }
};

enum class LPStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LPStatus s) {
  switch (s) {
    case LPStatus::Optimal: return "Optimal";
    case LPStatus::Infeasible: return "Infeasible";
    case LPStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

struct LPOutcome {
  LPStatus status = LPStatus::Infeasible;
  std::vector<double> x;   // primal values when Optimal
  double objective = 0.0;  // in the LP's own sense
  long pivots = 0;
};

struct SimplexOptions {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int bland_after = 1000;  // consecutive degenerate pivots before Bland's rule
};

/// Throws DimensionMismatch / NaNInput on malformed programs.
inline void validate(const LinearProgram& lp) {
  const auto n = lp.objective.size();
  if (lp.lower.size() != n || lp.upper.size() != n) {
    throw Error(Errc::DimensionMismatch, "bound vectors do not match objective length");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isnan(lp.objective[j]) || std::isnan(lp.lower[j]) || std::isnan(lp.upper[j])) {
      throw Error(Errc::NaNInput, "NaN in objective or bounds of variable " + std::to_string(j));
    }
    if (lp.lower[j] > lp.upper[j]) {
      throw Error(Errc::DimensionMismatch, "lower bound exceeds upper bound for variable " + std::to_string(j));
    }
  }
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    const auto& row = lp.rows[r];
    if (!std::isfinite(row.rhs)) throw Error(Errc::NaNInput, "non-finite rhs in row " + std::to_string(r));
    for (const auto& t : row.terms) {
      if (t.var < 0 || static_cast<std::size_t>(t.var) >= n) {
        throw Error(Errc::DimensionMismatch, "row " + std::to_string(r) + " references variable " + std::to_string(t.var));
      }
      if (!std::isfinite(t.coef)) throw Error(Errc::NaNInput, "non-finite coefficient in row " + std::to_string(r));
    }
  }
}

struct BoundChange {
  int var;
  double lower;
  double upper;
};

/// Dense bounded-variable simplex over [structural | slack | artificial]
/// columns. Every row is an equality a.x + slack = rhs whose slack bounds
/// encode the relation. solve() runs the two-phase primal method from
/// scratch; change_bounds()/add_rows() keep the current basis and restore
/// feasibility with dual simplex pivots, which is what branch-and-cut needs
/// between neighbouring nodes.
class SimplexSolver {
 public:
  explicit SimplexSolver(LinearProgram lp, SimplexOptions opt = {}) : lp_(std::move(lp)), opt_(opt) {
    validate(lp_);
  }

  const LinearProgram& program() const noexcept { return lp_; }
  LPStatus status() const noexcept { return status_; }
  long pivots() const noexcept { return total_pivots_; }
  /// Number of from-scratch solves, including fallbacks from warm paths.
  long cold_solves() const noexcept { return cold_solves_; }

  /// Cold two-phase primal solve of the current program.
  LPStatus solve() {
    ++cold_solves_;
    built_ = false;
    for (std::size_t j = 0; j < lp_.lower.size(); ++j) {
      if (lp_.lower[j] > lp_.upper[j]) return status_ = LPStatus::Infeasible;
    }
    build();
    if (num_art_ > 0) {
      std::fill(cost_.begin(), cost_.end(), 0.0);
      for (int j : art_cols_) cost_[u(j)] = 1.0;
      price();
      if (!primal_iterate()) throw Error(Errc::InvalidConfig, "phase 1 reported unbounded");
      refresh();
      double infeas = 0.0;
      for (int j : art_cols_) infeas += std::max(0.0, val_[u(j)]);
      if (infeas > opt_.feasibility_tol) return status_ = LPStatus::Infeasible;
      for (int j : art_cols_) {
        hi_[u(j)] = 0.0;
        if (pos_[u(j)] < 0) val_[u(j)] = 0.0;
      }
    }
    load_objective();
    if (!primal_iterate()) return status_ = LPStatus::Unbounded;
    refresh();
    built_ = true;
    return status_ = LPStatus::Optimal;
  }

  /// Applies bound changes and reoptimizes from the current basis.
  LPStatus change_bounds(const std::vector<BoundChange>& changes) {
    for (const auto& c : changes) {
      lp_.lower[u(c.var)] = c.lower;
      lp_.upper[u(c.var)] = c.upper;
    }
    if (!warm_ready()) return solve();
    for (const auto& c : changes) {
      if (c.lower > c.upper) {
        built_ = false;
        return status_ = LPStatus::Infeasible;
      }
    }
    for (const auto& c : changes) {
      const auto j = u(c.var);
      lo_[j] = c.lower;
      hi_[j] = c.upper;
      if (pos_[j] >= 0) continue;
      double target;
      if (d_[j] > opt_.optimality_tol) target = lo_[j];
      else if (d_[j] < -opt_.optimality_tol) target = hi_[j];
      else target = std::clamp(val_[j], lo_[j], hi_[j]);
      if (!std::isfinite(target)) {
        target = std::isfinite(lo_[j]) ? lo_[j] : (std::isfinite(hi_[j]) ? hi_[j] : 0.0);
      }
      move_nonbasic(c.var, target);
    }
    return reoptimize();
  }

  /// Appends rows and reoptimizes from the current basis.
  LPStatus add_rows(const std::vector<Row>& rows) {
    for (const auto& r : rows) lp_.rows.push_back(r);
    validate_rows(lp_.rows.size() - rows.size());
    if (!warm_ready()) return solve();
    for (const auto& r : rows) append_row(r);
    return reoptimize();
  }

  /// Removes rows from index `first` on whose slack is basic and at least
  /// `margin` inside its bounds. Such rows carry a zero dual, so the basis
  /// stays optimal. Returns the removed rows; nothing happens without a
  /// warm basis.
  std::vector<Row> remove_slack_rows(std::size_t first, double margin) {
    std::vector<Row> removed;
    if (!warm_ready()) return removed;
    std::vector<char> has_art(lp_.rows.size(), 0);
    for (int r : art_row_) has_art[u(r)] = 1;
    std::vector<char> drop_row(lp_.rows.size(), 0), drop_col(u(cols_), 0), drop_tab(u(m_), 0);
    for (std::size_t k = first; k < lp_.rows.size(); ++k) {
      const int sc = slack_col_[k];
      if (has_art[k] || pos_[u(sc)] < 0) continue;
      const double v = val_[u(sc)];
      if (v < lo_[u(sc)] + margin || v > hi_[u(sc)] - margin) continue;
      drop_row[k] = 1;
      drop_col[u(sc)] = 1;
      drop_tab[u(pos_[u(sc)])] = 1;
    }
    std::vector<int> col_map(u(cols_), -1), row_map(lp_.rows.size(), -1);
    int cols = 0;
    for (int j = 0; j < cols_; ++j) {
      if (!drop_col[u(j)]) col_map[u(j)] = cols++;
    }
    if (cols == cols_) return removed;
    int kept_rows = 0;
    std::vector<Row> rows;
    for (std::size_t k = 0; k < lp_.rows.size(); ++k) {
      if (drop_row[k]) {
        removed.push_back(std::move(lp_.rows[k]));
      } else {
        row_map[k] = kept_rows++;
        rows.push_back(std::move(lp_.rows[k]));
      }
    }
    lp_.rows = std::move(rows);
    std::vector<double> tab(u(kept_rows) * stride_, 0.0);
    std::vector<int> basis;
    for (int r = 0; r < m_; ++r) {
      if (drop_tab[u(r)]) continue;
      const double* src = &T(r, 0);
      double* dst = &tab[basis.size() * stride_];
      for (int j = 0; j < cols_; ++j) {
        if (col_map[u(j)] >= 0) dst[col_map[u(j)]] = src[j];
      }
      basis.push_back(col_map[u(basis_[u(r)])]);
    }
    tab_ = std::move(tab);
    auto compact = [&](std::vector<double>& v) {
      std::vector<double> out;
      out.reserve(u(cols));
      for (int j = 0; j < cols_; ++j) {
        if (col_map[u(j)] >= 0) out.push_back(v[u(j)]);
      }
      v = std::move(out);
    };
    compact(lo_);
    compact(hi_);
    compact(val_);
    compact(cost_);
    compact(d_);
    std::vector<int> slack;
    for (std::size_t k = 0; k < slack_col_.size(); ++k) {
      if (!drop_row[k]) slack.push_back(col_map[u(slack_col_[k])]);
    }
    slack_col_ = std::move(slack);
    for (auto& a : art_cols_) a = col_map[u(a)];
    for (auto& r : art_row_) r = row_map[u(r)];
    basis_ = std::move(basis);
    cols_ = cols;
    m_ = kept_rows;
    pos_.assign(u(cols_), -1);
    for (int r = 0; r < m_; ++r) pos_[u(basis_[u(r)])] = r;
    return removed;
  }

  std::vector<double> solution() const {
    std::vector<double> x(val_.begin(), val_.begin() + lp_.num_variables());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::clamp(x[j], lp_.lower[j], lp_.upper[j]);
    return x;
  }

  double objective() const {
    const auto x = solution();
    double obj = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) obj += lp_.objective[j] * x[j];
    return obj;
  }

 private:
  static std::size_t u(int j) { return static_cast<std::size_t>(j); }
  double& T(int r, int j) { return tab_[u(r) * stride_ + u(j)]; }
  const double& T(int r, int j) const { return tab_[u(r) * stride_ + u(j)]; }

  bool warm_ready() const { return built_ && since_build_ < kRefactorPivots; }

  void validate_rows(std::size_t from) const {
    for (std::size_t r = from; r < lp_.rows.size(); ++r) {
      const auto& row = lp_.rows[r];
      if (!std::isfinite(row.rhs)) throw Error(Errc::NaNInput, "non-finite rhs in appended row");
      for (const auto& t : row.terms) {
        if (t.var < 0 || t.var >= lp_.num_variables()) throw Error(Errc::DimensionMismatch, "appended row references unknown variable");
        if (!std::isfinite(t.coef)) throw Error(Errc::NaNInput, "non-finite coefficient in appended row");
      }
    }
  }

  static std::pair<double, double> slack_bounds(Relation rel) {
    switch (rel) {
      case Relation::LessEqual: return {0.0, kInf};
      case Relation::GreaterEqual: return {-kInf, 0.0};
      case Relation::Equal: return {0.0, 0.0};
    }
    return {0.0, 0.0};
  }

  void ensure_columns(int needed) {
    if (u(needed) <= stride_) return;
    std::size_t stride = std::max<std::size_t>(u(needed), stride_ * 2);
    std::vector<double> tab(u(m_) * stride, 0.0);
    for (int r = 0; r < m_; ++r) {
      std::copy_n(&tab_[u(r) * stride_], cols_, &tab[u(r) * stride]);
    }
    tab_ = std::move(tab);
    stride_ = stride;
  }

  int add_column(double lo, double hi, double val) {
    ensure_columns(cols_ + 1);
    lo_.push_back(lo);
    hi_.push_back(hi);
    val_.push_back(val);
    pos_.push_back(-1);
    cost_.push_back(0.0);
    d_.push_back(0.0);
    return cols_++;
  }

  void build() {
    const int n = lp_.num_variables();
    const int m = lp_.num_rows();
    n_ = n;
    m_ = 0;
    cols_ = 0;
    stride_ = u(n + m + 8);
    tab_.clear();
    lo_.clear();
    hi_.clear();
    val_.clear();
    pos_.clear();
    cost_.clear();
    d_.clear();
    basis_.clear();
    slack_col_.clear();
    art_cols_.clear();
    art_row_.clear();
    art_sign_.clear();
    num_art_ = 0;
    since_build_ = 0;
    for (int j = 0; j < n; ++j) {
      const double lo = lp_.lower[u(j)], hi = lp_.upper[u(j)];
      add_column(lo, hi, std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0));
    }
    for (int r = 0; r < m; ++r) append_cold_row(lp_.rows[u(r)]);
  }

  // Row appended before any pivoting: slack basic when its value fits, else
  // an artificial carries the residual.
  void append_cold_row(const Row& row) {
    const int r = m_;
    double act = 0.0;
    for (const auto& t : row.terms) act += t.coef * val_[u(t.var)];
    const double res = row.rhs - act;
    const auto [slo, shi] = slack_bounds(row.relation);
    const double sval = std::clamp(res, slo, shi);
    const bool need_art = res < slo - opt_.feasibility_tol || res > shi + opt_.feasibility_tol;
    const int s = add_column(slo, shi, need_art ? sval : res);
    int a = -1;
    if (need_art) a = add_column(0.0, kInf, 0.0);
    tab_.resize(u(m_ + 1) * stride_, 0.0);
    ++m_;
    const double sg = need_art ? (res - sval > 0 ? 1.0 : -1.0) : 1.0;
    for (const auto& t : row.terms) T(r, t.var) += sg * t.coef;
    T(r, s) = sg;
    slack_col_.push_back(s);
    if (need_art) {
      T(r, a) = 1.0;
      val_[u(a)] = sg * (res - sval);
      basis_.push_back(a);
      pos_[u(a)] = r;
      art_cols_.push_back(a);
      art_row_.push_back(r);
      art_sign_.push_back(sg);
      ++num_art_;
    } else {
      basis_.push_back(s);
      pos_[u(s)] = r;
    }
  }

  // Row appended to an optimal tableau: express it in the current basis
  // and make its slack basic.
  void append_row(const Row& row) {
    const auto [slo, shi] = slack_bounds(row.relation);
    double act = 0.0;
    for (const auto& t : row.terms) act += t.coef * val_[u(t.var)];
    const int s = add_column(slo, shi, row.rhs - act);
    const int r = m_;
    tab_.resize(u(m_ + 1) * stride_, 0.0);
    ++m_;
    double* nr = &T(r, 0);
    for (const auto& t : row.terms) nr[t.var] += t.coef;
    nr[s] = 1.0;
    for (const auto& t : row.terms) {
      const int p = pos_[u(t.var)];
      if (p < 0) continue;
      const double f = nr[t.var];
      if (f == 0.0) continue;
      const double* br = &T(p, 0);
      for (int j = 0; j < cols_; ++j) {
        if (br[j] != 0.0) nr[j] -= f * br[j];
      }
      nr[t.var] = 0.0;
    }
    for (int j = 0; j < cols_; ++j) {
      if (std::abs(nr[j]) < 1e-13) nr[j] = 0.0;
    }
    nr[s] = 1.0;
    slack_col_.push_back(s);
    basis_.push_back(s);
    pos_[u(s)] = r;
  }

  void load_objective() {
    std::fill(cost_.begin(), cost_.end(), 0.0);
    const double sign = lp_.sense == Sense::Maximize ? -1.0 : 1.0;
    for (int j = 0; j < n_; ++j) cost_[u(j)] = sign * lp_.objective[u(j)];
    price();
  }

  void price() {
    d_ = cost_;
    for (int r = 0; r < m_; ++r) {
      const double cb = cost_[u(basis_[u(r)])];
      if (cb == 0.0) continue;
      const double* row = &T(r, 0);
      for (int j = 0; j < cols_; ++j) d_[u(j)] -= cb * row[j];
    }
  }

  // Basic values from scratch: x_B = B^{-1}(rhs - N x_N). The slack columns
  // of the tableau hold B^{-1} since the original slack block is the identity.
  void refresh() {
    std::vector<double> rhs(u(m_));
    for (int r = 0; r < m_; ++r) {
      const auto& row = lp_.rows[u(r)];
      double v = row.rhs;
      for (const auto& t : row.terms) {
        if (pos_[u(t.var)] < 0) v -= t.coef * val_[u(t.var)];
      }
      const int s = slack_col_[u(r)];
      if (pos_[u(s)] < 0) v -= val_[u(s)];
      rhs[u(r)] = v;
    }
    for (std::size_t k = 0; k < art_cols_.size(); ++k) {
      const int a = art_cols_[k];
      if (pos_[u(a)] < 0) rhs[u(art_row_[k])] -= art_sign_[k] * val_[u(a)];
    }
    for (int r = 0; r < m_; ++r) {
      double v = 0.0;
      for (int k = 0; k < m_; ++k) {
        const double b = T(r, slack_col_[u(k)]);
        if (b != 0.0) v += b * rhs[u(k)];
      }
      val_[u(basis_[u(r)])] = v;
    }
  }

  void move_nonbasic(int j, double target) {
    const double delta = target - val_[u(j)];
    if (delta == 0.0) return;
    val_[u(j)] = target;
    for (int r = 0; r < m_; ++r) {
      const double a = T(r, j);
      if (a != 0.0) val_[u(basis_[u(r)])] -= a * delta;
    }
  }

  LPStatus reoptimize() {
    const auto before = total_pivots_;
    const int cap = 50 * (m_ + 10);
    bool ok = true;
    for (int it = 0;; ++it) {
      if (it > cap) {
        ok = false;
        break;
      }
      // Leaving row: largest bound violation.
      int leave = -1;
      double worst = opt_.feasibility_tol;
      for (int r = 0; r < m_; ++r) {
        const auto b = u(basis_[u(r)]);
        const double viol = std::max(lo_[b] - val_[b], val_[b] - hi_[b]);
        if (viol > worst) {
          worst = viol;
          leave = r;
        }
      }
      if (leave < 0) break;
      const auto lb = u(basis_[u(leave)]);
      const bool to_lower = val_[lb] < lo_[lb];
      const double bound = to_lower ? lo_[lb] : hi_[lb];
      // Entering column: two-pass dual ratio test. The first pass bounds the
      // step with the dual tolerance relaxed, the second takes the largest
      // pivot within that bound.
      const double* row = &T(leave, 0);
      auto eligible = [&](int j) {
        const double alpha = row[j];
        if (std::abs(alpha) <= kDualPivotTol || pos_[u(j)] >= 0) return false;
        if (hi_[u(j)] - lo_[u(j)] <= 0.0) return false;
        const bool can_up = !(std::isfinite(hi_[u(j)]) && val_[u(j)] >= hi_[u(j)]);
        const bool can_down = !(std::isfinite(lo_[u(j)]) && val_[u(j)] <= lo_[u(j)]);
        // Basic value moves by -alpha per unit increase of x_j.
        const bool need_up = to_lower ? alpha < 0.0 : alpha > 0.0;
        return need_up ? can_up : can_down;
      };
      double bound_ratio = kInf;
      for (int j = 0; j < cols_; ++j) {
        if (eligible(j)) bound_ratio = std::min(bound_ratio, (std::abs(d_[u(j)]) + opt_.optimality_tol) / std::abs(row[j]));
      }
      int enter = -1;
      double best_alpha = 0.0;
      for (int j = 0; j < cols_; ++j) {
        if (!eligible(j) || std::abs(d_[u(j)]) / std::abs(row[j]) > bound_ratio) continue;
        if (std::abs(row[j]) > std::abs(best_alpha)) {
          best_alpha = row[j];
          enter = j;
        }
      }
      if (enter < 0) return solve();
      const double delta = (val_[lb] - bound) / best_alpha;
      val_[u(enter)] += delta;
      for (int r = 0; r < m_; ++r) {
        const double a = T(r, enter);
        if (a != 0.0) val_[u(basis_[u(r)])] -= a * delta;
      }
      val_[lb] = bound;
      pivot(leave, enter);
      ++total_pivots_;
      ++since_build_;
    }
    if (ok) {
      // Clean up residual dual infeasibility, then verify against the rows.
      long p = 0;
      ok = primal_iterate(&p);
      total_pivots_ += p;
      since_build_ += p;
      if (ok) {
        refresh();
        ok = max_violation() <= 1e-6;
      }
    }
    (void)before;
    if (!ok) return solve();
    return status_ = LPStatus::Optimal;
  }

  double max_violation() const {
    double worst = 0.0;
    for (int j = 0; j < n_; ++j) {
      worst = std::max({worst, lo_[u(j)] - val_[u(j)], val_[u(j)] - hi_[u(j)]});
    }
    for (const auto& row : lp_.rows) {
      double act = 0.0;
      for (const auto& t : row.terms) act += t.coef * val_[u(t.var)];
      if (row.relation != Relation::GreaterEqual) worst = std::max(worst, act - row.rhs);
      if (row.relation != Relation::LessEqual) worst = std::max(worst, row.rhs - act);
    }
    return worst;
  }

  // Primal simplex on the current cost; false on unboundedness.
  bool primal_iterate(long* counter = nullptr) {
    int degenerate_run = 0;
    bool bland = false;
    const long cap = 200L * (static_cast<long>(m_) + cols_) + 100000L;
    for (long it = 0;; ++it) {
      if (it > cap) throw Error(Errc::InvalidConfig, "simplex iteration cap exceeded");
      int enter = -1;
      double dir = 0.0, best = 0.0;
      for (int j = 0; j < cols_; ++j) {
        const auto uj = u(j);
        if (pos_[uj] >= 0 || hi_[uj] - lo_[uj] <= 0.0) continue;
        const double dj = d_[uj];
        double dj_dir = 0.0;
        const bool at_lo = std::isfinite(lo_[uj]) && val_[uj] <= lo_[uj];
        const bool at_hi = std::isfinite(hi_[uj]) && val_[uj] >= hi_[uj];
        if (dj < -opt_.optimality_tol && !at_hi) dj_dir = 1.0;
        else if (dj > opt_.optimality_tol && !at_lo) dj_dir = -1.0;
        if (dj_dir == 0.0) continue;
        if (bland) {
          enter = j;
          dir = dj_dir;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          enter = j;
          dir = dj_dir;
        }
      }
      if (enter < 0) return true;

      const auto ue = u(enter);
      double theta = kInf;
      if (std::isfinite(lo_[ue]) && std::isfinite(hi_[ue])) theta = hi_[ue] - lo_[ue];
      // Step limit of row r, or -1 when its basic variable never blocks.
      auto limit_of = [&](int r, double slack_tol) {
        const double alpha = T(r, enter);
        if (std::abs(alpha) <= opt_.pivot_tol) return -1.0;
        const auto b = u(basis_[u(r)]);
        const double rate = -dir * alpha;
        if (rate < 0.0) {
          if (!std::isfinite(lo_[b])) return -1.0;
          return std::max(val_[b] - lo_[b] + slack_tol, 0.0) / -rate;
        }
        if (!std::isfinite(hi_[b])) return -1.0;
        return std::max(hi_[b] - val_[b] + slack_tol, 0.0) / rate;
      };
      int leave = -1;
      double leave_alpha = 0.0;
      if (bland) {
        for (int r = 0; r < m_; ++r) {
          const double limit = limit_of(r, 0.0);
          if (limit < 0.0) continue;
          if (limit < theta - 1e-12 || (limit <= theta + 1e-12 && (leave < 0 || basis_[u(r)] < basis_[u(leave)]))) {
            theta = std::min(theta, limit);
            leave = r;
            leave_alpha = T(r, enter);
          }
        }
      } else {
        double relaxed = theta;
        for (int r = 0; r < m_; ++r) {
          const double limit = limit_of(r, opt_.optimality_tol);
          if (limit >= 0.0) relaxed = std::min(relaxed, limit);
        }
        for (int r = 0; r < m_; ++r) {
          const double limit = limit_of(r, 0.0);
          if (limit < 0.0 || limit > relaxed) continue;
          if (std::abs(T(r, enter)) > std::abs(leave_alpha)) {
            leave = r;
            leave_alpha = T(r, enter);
            theta = limit;
          }
        }
        if (leave >= 0) {
          theta = std::min(theta, relaxed);
        }
      }
      if (!std::isfinite(theta)) return false;

      if (theta <= 1e-12) {
        if (++degenerate_run >= opt_.bland_after) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
      val_[ue] += dir * theta;
      if (theta != 0.0) {
        for (int r = 0; r < m_; ++r) {
          const double alpha = T(r, enter);
          if (alpha != 0.0) val_[u(basis_[u(r)])] -= dir * theta * alpha;
        }
      }
      if (leave < 0) {
        val_[ue] = dir > 0 ? hi_[ue] : lo_[ue];
        continue;
      }
      const auto lb = u(basis_[u(leave)]);
      val_[lb] = -dir * leave_alpha < 0.0 ? lo_[lb] : hi_[lb];
      pivot(leave, enter);
      ++total_pivots_;
      ++since_build_;
      if (counter) ++*counter;
    }
  }

  void pivot(int r, int e) {
    double* prow = &T(r, 0);
    const double inv = 1.0 / prow[e];
    nz_.clear();
    for (int j = 0; j < cols_; ++j) {
      if (prow[j] == 0.0) continue;
      prow[j] *= inv;
      if (std::abs(prow[j]) < 1e-13) prow[j] = 0.0;
      else nz_.push_back(j);
    }
    prow[e] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &T(i, 0);
      const double f = row[e];
      if (f == 0.0) continue;
      for (int j : nz_) {
        const double v = row[j] - f * prow[j];
        row[j] = std::abs(v) < 1e-13 ? 0.0 : v;
      }
      row[e] = 0.0;
    }
    const double fd = d_[u(e)];
    if (fd != 0.0) {
      for (int j : nz_) d_[u(j)] -= fd * prow[j];
      d_[u(e)] = 0.0;
    }
    pos_[u(basis_[u(r)])] = -1;
    basis_[u(r)] = e;
    pos_[u(e)] = r;
  }

  static constexpr long kRefactorPivots = 20000;
  static constexpr double kDualPivotTol = 1e-7;

  LinearProgram lp_;
  SimplexOptions opt_;
  LPStatus status_ = LPStatus::Infeasible;
  bool built_ = false;
  int n_ = 0, m_ = 0, cols_ = 0, num_art_ = 0;
  std::size_t stride_ = 0;
  long total_pivots_ = 0, since_build_ = 0, cold_solves_ = 0;
  std::vector<double> tab_, lo_, hi_, val_, cost_, d_;
  std::vector<int> pos_, basis_, slack_col_, art_cols_, art_row_, nz_;
  std::vector<double> art_sign_;
};

/// Two-phase bounded-variable primal simplex on a dense tableau.
inline LPOutcome solve_lp(const LinearProgram& lp, const SimplexOptions& opt = {}) {
  SimplexSolver solver(lp, opt);
  LPOutcome out;
  out.status = solver.solve();
  out.pivots = solver.pivots();
  if (out.status == LPStatus::Optimal) {
    out.x = solver.solution();
    out.objective = solver.objective();
  }
  return out;
}

/// Max absolute row violation of x against lp (bounds excluded).
inline double max_row_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (const auto& row : lp.rows) {
    double act = 0.0;
    for (const auto& t : row.terms) act += t.coef * x[static_cast<std::size_t>(t.var)];
    double v = 0.0;
    if (row.relation != Relation::GreaterEqual) v = std::max(v, act - row.rhs);
    if (row.relation != Relation::LessEqual) v = std::max(v, row.rhs - act);
    worst = std::max(worst, v);
  }
  return worst;
}

/// Writes lp in CPLEX LP text format (variables x0, x1, ...; rows c0, c1, ...).
inline void write_lp_format(const LinearProgram& lp, std::ostream& os) {
  auto term = [&os](double c, int j, bool first) {
    if (c < 0) os << (first ? "-" : " - ");
    else if (!first) os << " + ";
    const double a = std::abs(c);
    if (a != 1.0) os << a << ' ';
    os << 'x' << j;
  };
  os.precision(17);
  os << (lp.sense == Sense::Maximize ? "Maximize\n" : "Minimize\n") << " obj:";
  bool first = true;
  for (int j = 0; j < lp.num_variables(); ++j) {
    const double c = lp.objective[static_cast<std::size_t>(j)];
    if (c == 0.0) continue;
    if (first) os << ' ';
    term(c, j, first);
    first = false;
  }
  if (first) os << " 0 x0";
  os << "\nSubject To\n";
  for (int r = 0; r < lp.num_rows(); ++r) {
    const auto& row = lp.rows[static_cast<std::size_t>(r)];
    os << " c" << r << ":";
    bool f = true;
    for (const auto& t : row.terms) {
      if (f) os << ' ';
      term(t.coef, t.var, f);
      f = false;
    }
    if (f) os << " 0 x0";
    os << (row.relation == Relation::LessEqual ? " <= " : row.relation == Relation::Equal ? " = " : " >= ") << row.rhs
       << '\n';
  }
  os << "Bounds\n";
  for (int j = 0; j < lp.num_variables(); ++j) {
    const double lo = lp.lower[static_cast<std::size_t>(j)], hi = lp.upper[static_cast<std::size_t>(j)];
    if (!std::isfinite(lo) && !std::isfinite(hi)) {
      os << " x" << j << " free\n";
    } else {
      os << ' ';
      if (std::isfinite(lo)) os << lo;
      else os << "-inf";
      os << " <= x" << j << " <= ";
      if (std::isfinite(hi)) os << hi;
      else os << "+inf";
      os << '\n';
    }
  }
  os << "End\n";
}

}  // namespace mdt
