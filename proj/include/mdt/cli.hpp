#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdt/data.hpp"
#include "mdt/oracle.hpp"
#include "mdt/trainer.hpp"

namespace mdt::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kNoIncumbent = 4 };

using nlohmann::json;

namespace detail {

struct DataFlags {
  std::string data;
  std::string target;
  std::string types;
  std::string delimiter = ",";
  double split = 0.0;
  std::string fit_on = "train";
};

struct SolverFlags {
  int depth = 2;
  std::string model = "cut";
  std::string frac = "1";
  std::string frac_where = "root";
  bool balanced = false;
  std::optional<double> time_limit;
  int mis_rounds = 3;
  double svm_c = 1000.0;
  std::uint64_t seed = 0;
  bool verbose = false;
  bool no_start = false;
};

struct ObjectiveFlags {
  std::optional<double> lambda;
  bool tune = false;
  bool lex = false;
  bool pareto = false;
  double degradation = 0.0;
  std::vector<double> grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  double calibration_fraction = 0.15;
  double calibration_limit = 900.0;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline int exit_code_for(Errc code) {
  switch (code) {
    case Errc::MissingFile:
    case Errc::RaggedRow:
    case Errc::MissingTarget:
    case Errc::InvalidTarget:
    case Errc::ParseError:
    case Errc::NaNInput:
    case Errc::InvalidLabels:
    case Errc::DimensionMismatch:
    case Errc::InvalidTree:
      return kData;
    case Errc::OutOfRange:
    case Errc::InvalidConfig:
    case Errc::SizeGuard:
      return kUsage;
    default:
      return kInternal;
  }
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline char parse_delimiter(const std::string& s) {
  if (s == "tab" || s == "\\t") return '\t';
  if (s.size() != 1) throw UsageError("delimiter must be a single character, got '" + s + "'");
  return s[0];
}

inline std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

// Flag wins over the environment, which wins over the default.
inline double resolve_time_limit(const std::optional<double>& flag) {
  if (flag) return *flag;
  if (const auto v = env("MDT_TIME_LIMIT")) {
    double t;
    if (!mdt::detail::parse_number(*v, t) || !(t > 0.0)) throw UsageError("MDT_TIME_LIMIT must be a positive number");
    return t;
  }
  return 900.0;
}

inline int resolve_threads(const std::optional<int>& flag) {
  if (flag) return *flag;
  if (const auto v = env("MDT_THREADS")) {
    double t;
    if (!mdt::detail::parse_number(*v, t) || t < 1 || t != std::floor(t)) {
      throw UsageError("MDT_THREADS must be a positive integer");
    }
    return static_cast<int>(t);
  }
  return 1;
}

inline TrainConfig make_config(const SolverFlags& f) {
  TrainConfig c;
  c.depth = f.depth;
  c.kind = f.model == "cutw" ? Formulation::CutW : Formulation::Cut;
  c.balanced = f.balanced;
  if (f.frac == "off") c.fractional.reset();
  else if (f.frac == "1") c.fractional = FractionalVariant::I;
  else if (f.frac == "2") c.fractional = FractionalVariant::II;
  else c.fractional = FractionalVariant::III;
  c.fractional_where = f.frac_where == "all" ? FractionalCutMode::AllNodes : FractionalCutMode::RootOnly;
  c.time_limit = resolve_time_limit(f.time_limit);
  c.mis_rounds = f.mis_rounds;
  c.svm_c = f.svm_c;
  c.seed = f.seed;
  c.greedy_start = !f.no_start;
  if (f.verbose) c.event_sink = &std::cerr;
  return c;
}

inline void add_data_flags(CLI::App* app, DataFlags& f, bool with_split) {
  app->add_option("--data", f.data, "CSV file with a header row")->required();
  app->add_option("--target", f.target, "label column")->required();
  app->add_option("--types", f.types, "column type overrides, one 'name=categorical|numerical' per line");
  app->add_option("--delimiter", f.delimiter, "field delimiter (single character or 'tab')")->capture_default_str();
  if (with_split) {
    app->add_option("--split", f.split, "train fraction of a seeded split; 0 trains on every row")
        ->check(CLI::Range(0.0, 0.99))
        ->capture_default_str();
  }
  app->add_option("--fit-on", f.fit_on, "rows used for normalization statistics when splitting")
      ->check(CLI::IsMember({"train", "all"}))
      ->capture_default_str();
}

inline void add_solver_flags(CLI::App* app, SolverFlags& f) {
  app->add_option("--depth", f.depth, "tree depth")->check(CLI::Range(1, 20))->capture_default_str();
  app->add_option("--model", f.model, "master formulation")->check(CLI::IsMember({"cutw", "cut"}))->capture_default_str();
  app->add_option("--frac", f.frac, "fractional path-cut variant")
      ->check(CLI::IsMember({"off", "1", "2", "3"}))
      ->capture_default_str();
  app->add_option("--frac-where", f.frac_where, "nodes where fractional cuts are separated")
      ->check(CLI::IsMember({"root", "all"}))
      ->capture_default_str();
  app->add_flag("--balanced", f.balanced, "force every internal vertex to branch");
  app->add_option("--time-limit", f.time_limit, "seconds per solve (env MDT_TIME_LIMIT, default 900)")
      ->check(CLI::PositiveNumber);
  app->add_option("--mis-rounds", f.mis_rounds, "infeasible-subsystem rounds per vertex")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--svm-c", f.svm_c, "SVM box bound")->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--seed", f.seed, "split and calibration seed")->capture_default_str();
  app->add_flag("--no-start", f.no_start, "skip the axis-aligned starting trees");
  app->add_flag("--verbose", f.verbose, "stream solver events to stderr");
}

inline void add_objective_flags(CLI::App* app, ObjectiveFlags& f, bool with_pareto) {
  auto* lambda = app->add_option("--lambda", f.lambda, "branching penalty of the weighted objective")
                     ->check(CLI::Range(0.0, 1.0));
  auto* tune = app->add_flag("--tune", f.tune, "pick lambda on a calibration subset");
  auto* lex = app->add_flag("--lex", f.lex, "maximize accuracy, then minimize branching");
  lambda->excludes(tune)->excludes(lex);
  tune->excludes(lex);
  if (with_pareto) {
    auto* pareto = app->add_flag("--pareto", f.pareto, "sweep every branching budget");
    pareto->excludes(lambda)->excludes(tune)->excludes(lex);
  }
  app->add_option("--degradation", f.degradation, "accuracy slack for the second lexicographic stage")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app->add_option("--grid", f.grid, "lambda values tried by --tune")->check(CLI::Range(0.0, 1.0));
  app->add_option("--calibration-fraction", f.calibration_fraction, "share of training rows used by --tune")
      ->check(CLI::Range(0.01, 1.0))
      ->capture_default_str();
  app->add_option("--calibration-time-limit", f.calibration_limit, "seconds per calibration model")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

inline RawTable rows_of(const RawTable& t, const std::vector<int>& idx) {
  RawTable out;
  out.columns = t.columns;
  out.target = t.target;
  out.target_index = t.target_index;
  for (int i : idx) out.cells.push_back(t.cells.at(static_cast<std::size_t>(i)));
  return out;
}

struct Loaded {
  Encoder encoder;
  Dataset train;
  Dataset test;
  std::string fingerprint;
  int rows = 0;
};

inline Loaded load(const DataFlags& f, std::uint64_t seed) {
  const auto raw = load_table(f.data, f.target, parse_delimiter(f.delimiter));
  const EncodeOptions opt = f.types.empty() ? EncodeOptions{} : read_type_overrides(f.types);
  Loaded out;
  out.fingerprint = file_fingerprint(f.data);
  out.rows = static_cast<int>(raw.rows());
  if (f.split <= 0.0) {
    out.encoder = Encoder::fit(raw, opt);
    out.train = out.encoder.transform(raw);
    return out;
  }
  const auto s = split_indices(out.rows, f.split, seed);
  const auto train_raw = rows_of(raw, s.train);
  out.encoder = Encoder::fit(f.fit_on == "all" ? raw : train_raw, opt);
  out.train = out.encoder.transform(train_raw);
  out.test = out.encoder.transform(rows_of(raw, s.test));
  return out;
}

inline json encoder_to_json(const Encoder& e) {
  json j;
  j["target"] = e.target();
  j["classes"] = e.classes();
  auto& cols = j["columns"] = json::array();
  for (const auto& c : e.columns()) {
    json col;
    col["name"] = c.name;
    if (c.type == ColumnType::Numerical) {
      col["type"] = "numerical";
      col["min"] = c.min;
      col["max"] = c.max;
    } else {
      col["type"] = "categorical";
      col["categories"] = c.categories;
    }
    cols.push_back(std::move(col));
  }
  return j;
}

inline Encoder encoder_from_json(const json& j) {
  try {
    std::vector<ColumnSchema> cols;
    for (const auto& c : j.at("columns")) {
      ColumnSchema col;
      col.name = c.at("name").get<std::string>();
      const auto type = c.at("type").get<std::string>();
      if (type == "numerical") {
        col.type = ColumnType::Numerical;
        col.min = c.at("min").get<double>();
        col.max = c.at("max").get<double>();
      } else if (type == "categorical") {
        col.type = ColumnType::Categorical;
        col.categories = c.at("categories").get<std::vector<std::string>>();
      } else {
        throw Error(Errc::InvalidTree, "unknown column type '" + type + "'");
      }
      cols.push_back(std::move(col));
    }
    return Encoder::from_parts(j.at("target").get<std::string>(), std::move(cols),
                               j.at("classes").get<std::vector<std::string>>());
  } catch (const json::exception& ex) {
    throw Error(Errc::InvalidTree, ex.what());
  }
}

inline json model_json(const TrainedTree& tree, const Encoder& enc) {
  return json{{"format", "mdt-tree"}, {"version", 1}, {"encoder", encoder_to_json(enc)}, {"tree", tree_to_json(tree)}};
}

inline std::string objective_name(const TrainConfig& c) {
  switch (c.mode.kind) {
    case ObjectiveMode::Kind::Weighted: return "weighted";
    case ObjectiveMode::Kind::Lexicographic: return "lexicographic";
    case ObjectiveMode::Kind::EpsilonConstraint: return "budget";
  }
  return "?";
}

inline json config_json(const TrainConfig& c) {
  json j;
  j["depth"] = c.depth;
  j["model"] = to_string(c.kind);
  j["objective"] = objective_name(c);
  j["lambda"] = c.mode.lambda;
  j["degradation"] = c.mode.degradation;
  j["budget"] = c.mode.budget;
  j["balanced"] = c.balanced;
  j["frac"] = !c.fractional ? "off" : *c.fractional == FractionalVariant::I ? "1" : *c.fractional == FractionalVariant::II ? "2" : "3";
  j["frac_where"] = c.fractional_where == FractionalCutMode::AllNodes ? "all" : "root";
  j["time_limit"] = c.time_limit;
  j["mis_rounds"] = c.mis_rounds;
  j["svm_c"] = c.svm_c;
  j["seed"] = c.seed;
  j["greedy_start"] = c.greedy_start;
  return j;
}

// Everything here is a pure function of the inputs; wall-clock values live
// in the manifest and the pool trace.
inline json report_json(const TrainReport& r) {
  json j;
  j["status"] = to_string(r.status);
  j["has_incumbent"] = r.has_incumbent;
  j["objective"] = r.objective;
  j["gap_percent"] = r.gap_percent;
  j["master_correct"] = r.master_correct;
  j["branching"] = r.branching;
  j["train_correct"] = r.train_correct;
  j["train_accuracy"] = r.train_accuracy;
  j["test_accuracy"] = r.test_accuracy ? json(*r.test_accuracy) : json(nullptr);
  j["weak_vertices"] = r.tree.weak_vertices();
  j["nodes"] = r.nodes;
  j["lp_solves"] = r.lp_solves;
  j["cuts"] = {{"path", r.path_cuts_integral}, {"path_fractional", r.path_cuts_fractional}, {"shattering", r.shattering_cuts}};
  j["mis"] = {{"checks", r.mis.checks}, {"found", r.mis.mis_found}, {"repeated", r.mis.repeated}, {"duplicates", r.mis.duplicates}};
  j["stage_objectives"] = r.stage_objectives;
  j["outstanding_cuts"] = r.outstanding_path_cuts + r.outstanding_shattering_cuts;
  return j;
}

inline std::string pool_csv(const TrainReport& r, int rows) {
  std::ostringstream os;
  os << "seconds,correct,misclassified,branching\n";
  for (const auto& p : r.pool) os << fixed(p.seconds, 6) << ',' << p.correct << ',' << rows - p.correct << ',' << p.branching << '\n';
  return os.str();
}

inline std::string frontier_csv(const std::vector<ParetoPoint>& pts) {
  std::ostringstream os;
  os << "budget,correct,accuracy,gap_percent,status,dominated,seconds\n";
  for (const auto& p : pts) {
    os << p.budget << ',' << p.correct << ',' << fixed(p.accuracy, 4) << ',' << fixed(p.gap_percent, 4) << ','
       << to_string(p.status) << ',' << (p.dominated ? 1 : 0) << ',' << fixed(p.seconds, 3) << '\n';
  }
  return os.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::MissingFile, "cannot write " + path.string());
  out << content;
}

inline std::string lines(const std::vector<std::string>& v, const std::string& prefix = "") {
  std::string s;
  for (const auto& l : v) s += prefix + l + '\n';
  return s;
}

inline double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

inline json versions() {
  return {{"mdt", kVersion}, {"cli11", CLI11_VERSION}, {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

inline json data_json(const DataFlags& f, const Loaded& d) {
  return {{"path", f.data},
          {"target", f.target},
          {"types", f.types},
          {"delimiter", f.delimiter},
          {"split", f.split},
          {"fit_on", f.fit_on},
          {"fingerprint", d.fingerprint},
          {"rows", d.rows},
          {"train_rows", d.train.rows()},
          {"test_rows", d.test.rows()},
          {"features", d.train.features()},
          {"classes", d.train.classes()}};
}

struct Sweep {
  std::vector<ParetoPoint> points;
  std::vector<TrainReport> reports;
  bool complete = true;
};

inline Sweep sweep(const Dataset& data, TrainConfig config) {
  Sweep s;
  for (int k = 0; k <= TreeShape(config.depth).branch_count(); ++k) {
    config.mode = ObjectiveMode::epsilon_constraint(k);
    auto rep = train(data, config);
    s.complete = s.complete && rep.has_incumbent;
    s.points.push_back({k, rep.master_correct, rep.train_accuracy, rep.seconds, rep.gap_percent, rep.status, false});
    s.reports.push_back(std::move(rep));
  }
  mark_dominated(s.points);
  return s;
}

inline void print_frontier(std::ostream& out, const std::vector<ParetoPoint>& pts) {
  out << "budget  correct  accuracy  gap%    status\n";
  for (const auto& p : pts) {
    out << std::left << std::setw(8) << p.budget << std::setw(9) << p.correct << std::setw(10) << fixed(p.accuracy, 2)
        << std::setw(8) << fixed(p.gap_percent, 2) << to_string(p.status) << (p.dominated ? " (dominated)" : "") << '\n';
  }
}

inline int run_pareto(const DataFlags& df, const SolverFlags& sf, const std::string& out_dir, std::ostream& out,
                      const std::vector<std::string>& argv) {
  const auto start = std::chrono::steady_clock::now();
  const auto data = load(df, sf.seed);
  auto config = make_config(sf);
  const auto s = sweep(data.train, config);
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "frontier.csv", frontier_csv(s.points));
  json report;
  report["frontier"] = json::array();
  std::string events;
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    auto r = report_json(s.reports[k]);
    r["budget"] = s.points[k].budget;
    r["dominated"] = s.points[k].dominated;
    report["frontier"].push_back(std::move(r));
    events += lines(s.reports[k].events, "k=" + std::to_string(k) + " ");
    write_file(dir / ("tree_k" + std::to_string(k) + ".json"), model_json(s.reports[k].tree, data.encoder).dump(2) + "\n");
  }
  write_file(dir / "report.json", report.dump(2) + "\n");
  write_file(dir / "events.log", events);
  json timings = json::array();
  for (const auto& p : s.points) timings.push_back(p.seconds);
  config.mode = ObjectiveMode::epsilon_constraint(0);
  json manifest{{"command", argv},          {"config", config_json(config)}, {"data", data_json(df, data)},
                {"seed", sf.seed},          {"versions", versions()},        {"encoder", encoder_to_json(data.encoder)},
                {"timings", {{"budgets", timings}, {"total", seconds_since(start)}}}};
  manifest["config"]["objective"] = "pareto";
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  print_frontier(out, s.points);
  return s.complete ? kOk : kNoIncumbent;
}

inline int cmd_train(const DataFlags& df, const SolverFlags& sf, const ObjectiveFlags& of, const std::string& out_dir,
                     std::ostream& out, const std::vector<std::string>& argv) {
  if (of.pareto) return run_pareto(df, sf, out_dir, out, argv);
  const auto start = std::chrono::steady_clock::now();
  const auto data = load(df, sf.seed);
  auto config = make_config(sf);
  double tune_seconds = 0.0;
  if (of.tune) {
    const auto t0 = std::chrono::steady_clock::now();
    auto calib = config;
    calib.time_limit = of.calibration_limit;
    calib.event_sink = nullptr;
    config.mode = ObjectiveMode::weighted(tune_lambda(data.train, calib, of.grid, of.calibration_fraction));
    tune_seconds = seconds_since(t0);
  } else if (of.lex) {
    config.mode = ObjectiveMode::lexicographic(of.degradation);
  } else {
    config.mode = ObjectiveMode::weighted(of.lambda.value_or(0.0));
  }
  const auto rep = data.test.rows() > 0 ? train(data.train, data.test, config) : train(data.train, config);

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "tree.json", model_json(rep.tree, data.encoder).dump(2) + "\n");
  auto report = report_json(rep);
  report["config"] = config_json(config);
  report["config"].erase("time_limit");
  write_file(dir / "report.json", report.dump(2) + "\n");
  write_file(dir / "events.log", lines(rep.events));
  write_file(dir / "pool.csv", pool_csv(rep, data.train.rows()));
  json manifest{{"command", argv},
                {"config", config_json(config)},
                {"data", data_json(df, data)},
                {"seed", sf.seed},
                {"versions", versions()},
                {"timings", {{"tune", tune_seconds}, {"train", rep.seconds}, {"total", seconds_since(start)}}}};
  if (of.tune) manifest["config"]["grid"] = of.grid;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  out << "status " << to_string(rep.status) << " gap " << fixed(rep.gap_percent, 4) << "%\n";
  if (of.tune) out << "lambda " << config.mode.lambda << '\n';
  out << "correct " << rep.train_correct << '/' << data.train.rows() << " accuracy " << json(rep.train_accuracy).dump()
      << '\n';
  out << "branching " << rep.branching << '\n';
  if (rep.test_accuracy) out << "test accuracy " << fixed(*rep.test_accuracy, 4) << '\n';
  if (!rep.tree.weak_vertices().empty()) out << "weak splits at " << json(rep.tree.weak_vertices()).dump() << '\n';
  return rep.status == MilpStatus::TimeLimit && !rep.has_incumbent ? kNoIncumbent : kOk;
}

inline int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& target,
                       const std::string& delimiter, const std::string& out_path, std::ostream& out) {
  std::ifstream in(model_path);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + model_path);
  json model;
  try {
    in >> model;
  } catch (const json::exception& ex) {
    throw Error(Errc::InvalidTree, ex.what());
  }
  if (!model.is_object() || !model.contains("encoder") || !model.contains("tree")) {
    throw Error(Errc::InvalidTree, model_path + " is not a saved model");
  }
  const auto enc = encoder_from_json(model["encoder"]);
  const auto tree = tree_from_json(model["tree"]);
  auto raw = load_table(data_path, "", parse_delimiter(delimiter));
  const std::string label = target.empty() ? enc.target() : target;
  const auto it = std::find(raw.columns.begin(), raw.columns.end(), label);
  if (it != raw.columns.end()) {
    raw.target = label;
    raw.target_index = static_cast<int>(it - raw.columns.begin());
  } else if (!target.empty()) {
    throw Error(Errc::MissingTarget, "column '" + target + "' not found in " + data_path);
  }
  const auto d = enc.transform(raw);
  std::ostringstream csv;
  csv << "row,predicted" << (d.y.empty() ? "" : ",actual") << '\n';
  int correct = 0;
  for (int i = 0; i < d.rows(); ++i) {
    const int k = predict(tree, d.X[static_cast<std::size_t>(i)]);
    csv << i << ',' << tree.class_names.at(static_cast<std::size_t>(k));
    if (!d.y.empty()) {
      csv << ',' << raw.cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(raw.target_index)];
      correct += d.y[static_cast<std::size_t>(i)] == k;
    }
    csv << '\n';
  }
  if (out_path.empty()) out << csv.str();
  else write_file(out_path, csv.str());
  if (!d.y.empty() && d.rows() > 0) {
    const double acc = 100.0 * correct / d.rows();
    out << "correct " << correct << '/' << d.rows() << " accuracy " << json(acc).dump() << '\n';
  }
  return kOk;
}

struct BenchRow {
  std::uint64_t seed = 0;
  double lambda = 0.0;
  TrainReport report;
  double greedy_train = 0.0;
  double greedy_test = 0.0;
};

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard deviation.
inline double stdev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline constexpr int kBenchSplits = 5;

inline int cmd_bench(DataFlags df, const SolverFlags& sf, const ObjectiveFlags& of, std::optional<int> threads_flag,
                     const std::string& out_dir, std::ostream& out, const std::vector<std::string>& argv) {
  const auto start = std::chrono::steady_clock::now();
  df.split = 0.75;
  const int threads = std::min(resolve_threads(threads_flag), kBenchSplits);
  const auto base = make_config(sf);
  std::vector<BenchRow> rows(kBenchSplits);
  std::vector<Loaded> loaded;
  for (int s = 0; s < kBenchSplits; ++s) loaded.push_back(load(df, sf.seed + static_cast<std::uint64_t>(s)));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int s = next++; s < kBenchSplits; s = next++) {
      try {
        auto config = base;
        config.seed = sf.seed + static_cast<std::uint64_t>(s);
        if (threads > 1) config.event_sink = nullptr;
        const auto& d = loaded[static_cast<std::size_t>(s)];
        if (of.tune) {
          auto calib = config;
          calib.time_limit = of.calibration_limit;
          calib.event_sink = nullptr;
          config.mode = ObjectiveMode::weighted(tune_lambda(d.train, calib, of.grid, of.calibration_fraction));
        } else if (of.lex) {
          config.mode = ObjectiveMode::lexicographic(of.degradation);
        } else {
          config.mode = ObjectiveMode::weighted(of.lambda.value_or(0.0));
        }
        auto& row = rows[static_cast<std::size_t>(s)];
        row.seed = config.seed;
        row.lambda = config.mode.lambda;
        row.report = train(d.train, d.test, config);
        const auto g = greedy_baseline(d.train, config.depth);
        row.greedy_train = evaluate(g, d.train);
        row.greedy_test = evaluate(g, d.test);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::ostringstream csv;
  csv << "split,seed,lambda,status,gap_percent,branching,train_accuracy,test_accuracy,greedy_train_accuracy,"
         "greedy_test_accuracy,seconds\n";
  std::vector<double> tr, te, gtr, gte, gap, br, secs;
  bool complete = true;
  for (int s = 0; s < kBenchSplits; ++s) {
    const auto& r = rows[static_cast<std::size_t>(s)];
    const auto& rep = r.report;
    complete = complete && rep.has_incumbent;
    csv << s << ',' << r.seed << ',' << r.lambda << ',' << to_string(rep.status) << ',' << fixed(rep.gap_percent, 4)
        << ',' << rep.branching << ',' << fixed(rep.train_accuracy, 4) << ',' << fixed(rep.test_accuracy.value_or(0.0), 4)
        << ',' << fixed(r.greedy_train, 4) << ',' << fixed(r.greedy_test, 4) << ',' << fixed(rep.seconds, 3) << '\n';
    tr.push_back(rep.train_accuracy);
    te.push_back(rep.test_accuracy.value_or(0.0));
    gtr.push_back(r.greedy_train);
    gte.push_back(r.greedy_test);
    gap.push_back(rep.gap_percent);
    br.push_back(rep.branching);
    secs.push_back(rep.seconds);
  }
  const std::vector<std::pair<std::string, const std::vector<double>*>> metrics{
      {"train_accuracy", &tr},        {"test_accuracy", &te}, {"greedy_train_accuracy", &gtr},
      {"greedy_test_accuracy", &gte}, {"gap_percent", &gap},  {"branching", &br},
      {"seconds", &secs}};
  std::ostringstream summary;
  summary << "metric,mean,stdev\n";
  out << "metric                  mean +- stdev over " << kBenchSplits << " splits\n";
  for (const auto& [name, v] : metrics) {
    summary << name << ',' << fixed(mean(*v), 4) << ',' << fixed(stdev(*v), 4) << '\n';
    out << std::left << std::setw(24) << name << fixed(mean(*v), 2) << " +- " << fixed(stdev(*v), 2) << '\n';
  }
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "bench.csv", csv.str());
  write_file(dir / "summary.csv", summary.str());
  std::string events;
  for (int s = 0; s < kBenchSplits; ++s) events += lines(rows[static_cast<std::size_t>(s)].report.events, "split=" + std::to_string(s) + " ");
  write_file(dir / "events.log", events);
  auto config = base;
  json manifest{{"command", argv},
                {"config", config_json(config)},
                {"data", data_json(df, loaded.front())},
                {"seed", sf.seed},
                {"splits", kBenchSplits},
                {"threads", threads},
                {"versions", versions()},
                {"timings", {{"splits", secs}, {"total", seconds_since(start)}}}};
  manifest["config"]["objective"] = of.tune ? "tuned" : of.lex ? "lexicographic" : "weighted";
  if (of.tune) manifest["config"]["grid"] = of.grid;
  else manifest["config"]["lambda"] = of.lambda.value_or(0.0);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return complete ? kOk : kNoIncumbent;
}

}  // namespace detail

/// Entry point behind the `mdt` executable; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Optimal multivariate decision trees by branch and cut", "mdt"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  detail::DataFlags df;
  detail::SolverFlags sf;
  detail::ObjectiveFlags of;
  std::string out_dir = "mdt_out";
  std::optional<int> threads;

  auto* train_cmd = app.add_subcommand("train", "train a tree and write tree, report, events and pool trace");
  detail::add_data_flags(train_cmd, df, true);
  detail::add_solver_flags(train_cmd, sf);
  detail::add_objective_flags(train_cmd, of, true);
  train_cmd->add_option("--out", out_dir, "output directory")->capture_default_str();

  std::string model_path, predict_data, predict_target, predict_delim = ",", predict_out;
  auto* predict_cmd = app.add_subcommand("predict", "apply a saved tree to a CSV file");
  predict_cmd->add_option("--tree", model_path, "tree.json written by train")->required();
  predict_cmd->add_option("--data", predict_data, "CSV file with the training columns")->required();
  predict_cmd->add_option("--target", predict_target, "label column (defaults to the one used in training)");
  predict_cmd->add_option("--delimiter", predict_delim, "field delimiter")->capture_default_str();
  predict_cmd->add_option("--out", predict_out, "write predictions here instead of stdout");

  detail::DataFlags pdf;
  detail::SolverFlags psf;
  std::string pareto_out = "mdt_pareto";
  auto* pareto_cmd = app.add_subcommand("pareto", "accuracy against branching budget");
  detail::add_data_flags(pareto_cmd, pdf, true);
  detail::add_solver_flags(pareto_cmd, psf);
  pareto_cmd->add_option("--out", pareto_out, "output directory")->capture_default_str();

  detail::DataFlags bdf;
  detail::SolverFlags bsf;
  detail::ObjectiveFlags bof;
  std::string bench_out = "mdt_bench";
  auto* bench_cmd = app.add_subcommand("bench", "five seeded 75/25 splits with mean and standard deviation");
  detail::add_data_flags(bench_cmd, bdf, false);
  detail::add_solver_flags(bench_cmd, bsf);
  detail::add_objective_flags(bench_cmd, bof, false);
  bench_cmd->add_option("--threads", threads, "concurrent splits (env MDT_THREADS, default 1)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench_out, "output directory")->capture_default_str();

  std::vector<std::string> args(argv, argv + argc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) return detail::cmd_train(df, sf, of, out_dir, out, args);
    if (*predict_cmd) return detail::cmd_predict(model_path, predict_data, predict_target, predict_delim, predict_out, out);
    if (*pareto_cmd) return detail::run_pareto(pdf, psf, pareto_out, out, args);
    return detail::cmd_bench(bdf, bsf, bof, threads, bench_out, out, args);
  } catch (const detail::UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return detail::exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace mdt::cli
