#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mdt/error.hpp"

namespace mdt {

struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> cells;
  std::string target;
  int target_index = -1;  // -1 when the table carries no target column

  std::size_t rows() const noexcept { return cells.size(); }
};

struct Dataset {
  std::vector<std::vector<double>> X;
  std::vector<int> y;
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;

  int rows() const noexcept { return static_cast<int>(X.size()); }
  int features() const noexcept { return static_cast<int>(feature_names.size()); }
  int classes() const noexcept { return static_cast<int>(class_names.size()); }

  Dataset subset(const std::vector<int>& idx) const {
    Dataset out;
    out.class_names = class_names;
    out.feature_names = feature_names;
    for (int i : idx) {
      out.X.push_back(X.at(static_cast<std::size_t>(i)));
      if (!y.empty()) out.y.push_back(y.at(static_cast<std::size_t>(i)));
    }
    return out;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = b + s.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e && std::isfinite(out);
}

}  // namespace detail

/// Reads a delimited file with a header row. An empty target loads every
/// column as a feature.
inline RawTable load_table(const std::string& path, const std::string& target, char delimiter = ',') {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + path);
  RawTable t;
  std::string line;
  bool header = true;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_line(line, delimiter);
    if (header) {
      t.columns = std::move(fields);
      header = false;
      continue;
    }
    if (fields.size() != t.columns.size()) {
      throw Error(Errc::RaggedRow, path + ":" + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                                       " fields, header has " + std::to_string(t.columns.size()));
    }
    t.cells.push_back(std::move(fields));
  }
  if (header) throw Error(Errc::ParseError, path + " has no header row");
  t.target = target;
  if (!target.empty()) {
    const auto it = std::find(t.columns.begin(), t.columns.end(), target);
    if (it == t.columns.end()) throw Error(Errc::MissingTarget, "column '" + target + "' not found in " + path);
    t.target_index = static_cast<int>(it - t.columns.begin());
    std::set<std::string> values;
    for (const auto& row : t.cells) values.insert(row[static_cast<std::size_t>(t.target_index)]);
    if (t.rows() >= 2 && values.size() < 2) {
      throw Error(Errc::InvalidTarget, "target '" + target + "' takes a single value");
    }
  }
  const std::size_t features = t.columns.size() - (t.target_index >= 0 ? 1 : 0);
  if (features == 0) throw Error(Errc::ParseError, path + " has no feature columns");
  return t;
}

enum class ColumnType { Numerical, Categorical };

struct ColumnSchema {
  std::string name;
  ColumnType type = ColumnType::Numerical;
  double min = 0.0;
  double max = 0.0;
  std::vector<std::string> categories;
};

struct EncodeOptions {
  // Per-column type overrides; the key "*" applies to every column.
  std::map<std::string, ColumnType> overrides;
};

/// Parses override lines of the form `column=categorical|numerical`.
inline EncodeOptions read_type_overrides(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + path);
  EncodeOptions opt;
  std::string line;
  while (std::getline(in, line)) {
    const auto text = detail::trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw Error(Errc::ParseError, "expected key=value, got '" + text + "'");
    const auto key = detail::trim(text.substr(0, eq));
    const auto val = detail::trim(text.substr(eq + 1));
    if (val == "categorical") opt.overrides[key] = ColumnType::Categorical;
    else if (val == "numerical") opt.overrides[key] = ColumnType::Numerical;
    else throw Error(Errc::ParseError, "unknown column type '" + val + "'");
  }
  return opt;
}

namespace detail {

// Sorts labels numerically when all parse as numbers, else lexicographically.
inline void sort_labels(std::vector<std::string>& v) {
  bool numeric = true;
  double tmp;
  for (const auto& s : v) numeric = numeric && parse_number(s, tmp);
  if (numeric) {
    std::sort(v.begin(), v.end(), [](const std::string& a, const std::string& b) {
      double x, y;
      parse_number(a, x);
      parse_number(b, y);
      return x < y || (x == y && a < b);
    });
  } else {
    std::sort(v.begin(), v.end());
  }
}

}  // namespace detail

/// Fitted one-hot / min-max transformation.
class Encoder {
 public:
  Encoder() = default;

  static Encoder fit(const RawTable& t, const EncodeOptions& opt = {}) {
    Encoder enc;
    enc.target_ = t.target;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      if (static_cast<int>(c) == t.target_index) continue;
      ColumnSchema col;
      col.name = t.columns[c];
      bool numeric = true;
      double v;
      for (const auto& row : t.cells) numeric = numeric && detail::parse_number(row[c], v);
      col.type = numeric ? ColumnType::Numerical : ColumnType::Categorical;
      if (auto it = opt.overrides.find("*"); it != opt.overrides.end()) col.type = it->second;
      if (auto it = opt.overrides.find(col.name); it != opt.overrides.end()) col.type = it->second;
      if (col.type == ColumnType::Numerical) {
        col.min = kNoValue;
        col.max = -kNoValue;
        for (std::size_t r = 0; r < t.rows(); ++r) {
          if (!detail::parse_number(t.cells[r][c], v)) {
            throw Error(Errc::ParseError, "non-numeric value '" + t.cells[r][c] + "' in numerical column '" + col.name +
                                              "' (row " + std::to_string(r + 1) + ")");
          }
          col.min = std::min(col.min, v);
          col.max = std::max(col.max, v);
        }
        if (t.rows() == 0) col.min = col.max = 0.0;
      } else {
        std::set<std::string> cats;
        for (const auto& row : t.cells) cats.insert(row[c]);
        col.categories.assign(cats.begin(), cats.end());
        detail::sort_labels(col.categories);
      }
      enc.columns_.push_back(std::move(col));
    }
    if (t.target_index >= 0) {
      std::set<std::string> cls;
      for (const auto& row : t.cells) cls.insert(row[static_cast<std::size_t>(t.target_index)]);
      enc.classes_.assign(cls.begin(), cls.end());
      detail::sort_labels(enc.classes_);
    }
    return enc;
  }

  static Encoder from_parts(std::string target, std::vector<ColumnSchema> cols, std::vector<std::string> classes) {
    Encoder e;
    e.target_ = std::move(target);
    e.columns_ = std::move(cols);
    e.classes_ = std::move(classes);
    return e;
  }

  const std::string& target() const noexcept { return target_; }
  const std::vector<ColumnSchema>& columns() const noexcept { return columns_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (const auto& col : columns_) {
      if (col.type == ColumnType::Numerical) out.push_back(col.name);
      else for (const auto& cat : col.categories) out.push_back(col.name + "=" + cat);
    }
    return out;
  }

  /// Encodes a table with this schema. Values outside the fitted range clamp
  /// to [0,1]; unseen categories encode as all zeros; rows whose label is
  /// unknown get class -1.
  Dataset transform(const RawTable& t) const {
    std::vector<int> col_of(columns_.size(), -1);
    for (std::size_t k = 0; k < columns_.size(); ++k) {
      const auto it = std::find(t.columns.begin(), t.columns.end(), columns_[k].name);
      if (it == t.columns.end()) throw Error(Errc::MissingTarget, "feature column '" + columns_[k].name + "' not found");
      col_of[k] = static_cast<int>(it - t.columns.begin());
    }
    Dataset d;
    d.class_names = classes_;
    d.feature_names = feature_names();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const auto& row = t.cells[r];
      std::vector<double> x;
      x.reserve(d.feature_names.size());
      for (std::size_t k = 0; k < columns_.size(); ++k) {
        const auto& col = columns_[k];
        const auto& cell = row[static_cast<std::size_t>(col_of[k])];
        if (col.type == ColumnType::Numerical) {
          double v;
          if (!detail::parse_number(cell, v)) {
            throw Error(Errc::ParseError, "non-numeric value '" + cell + "' in numerical column '" + col.name + "'");
          }
          const double span = col.max - col.min;
          x.push_back(span > 0.0 ? std::clamp((v - col.min) / span, 0.0, 1.0) : 0.0);
        } else {
          for (const auto& cat : col.categories) x.push_back(cell == cat ? 1.0 : 0.0);
        }
      }
      d.X.push_back(std::move(x));
      if (t.target_index >= 0) {
        const auto& label = row[static_cast<std::size_t>(t.target_index)];
        const auto it = std::find(classes_.begin(), classes_.end(), label);
        d.y.push_back(it == classes_.end() ? -1 : static_cast<int>(it - classes_.begin()));
      }
    }
    return d;
  }

 private:
  static constexpr double kNoValue = 1e308;
  std::string target_;
  std::vector<ColumnSchema> columns_;
  std::vector<std::string> classes_;
};

/// One-hot encodes categorical columns and min-max scales numerical ones,
/// with statistics taken from the table itself.
inline Dataset encode(const RawTable& t, const EncodeOptions& opt = {}) { return Encoder::fit(t, opt).transform(t); }

/// Random permutation of 0..n-1 driven by a 64-bit Mersenne twister.
inline std::vector<int> seeded_permutation(int n, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;
};

inline SplitIndices split_indices(int n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(Errc::OutOfRange, "train fraction must lie in (0, 1)");
  }
  const auto perm = seeded_permutation(n, seed);
  const auto cut = static_cast<std::size_t>(std::lround(train_fraction * n));
  SplitIndices s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cut));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(cut), perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

inline std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  const auto s = split_indices(data.rows(), train_fraction, seed);
  return {data.subset(s.train), data.subset(s.test)};
}

inline std::vector<int> calibration_indices(int n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(Errc::OutOfRange, "calibration fraction must lie in (0, 1]");
  const auto perm = seeded_permutation(n, seed);
  const auto size = static_cast<std::size_t>(std::lround(fraction * n));
  std::vector<int> idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(size));
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline Dataset calibration_subset(const Dataset& train, double fraction, std::uint64_t seed) {
  return train.subset(calibration_indices(train.rows(), fraction, seed));
}

/// Draws up to `count` rows with class proportions kept as close as the
/// largest-remainder rule allows.
inline std::vector<int> stratified_indices(const Dataset& data, int count, std::uint64_t seed) {
  const int n = data.rows();
  count = std::min(count, n);
  std::map<int, std::vector<int>> by_class;
  for (int i : seeded_permutation(n, seed)) by_class[data.y[static_cast<std::size_t>(i)]].push_back(i);
  std::vector<std::pair<int, double>> quota;
  int assigned = 0;
  std::map<int, int> take;
  for (const auto& [k, rows] : by_class) {
    const double exact = static_cast<double>(count) * static_cast<double>(rows.size()) / n;
    take[k] = static_cast<int>(std::floor(exact));
    assigned += take[k];
    quota.push_back({k, exact - std::floor(exact)});
  }
  std::stable_sort(quota.begin(), quota.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t q = 0; assigned < count && q < quota.size(); ++q, ++assigned) ++take[quota[q].first];
  std::vector<int> idx;
  for (const auto& [k, rows] : by_class) {
    for (int j = 0; j < take[k] && j < static_cast<int>(rows.size()); ++j) idx.push_back(rows[static_cast<std::size_t>(j)]);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// FNV-1a 64-bit hash of a file's bytes, as 16 hex digits.
inline std::string file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingFile, "cannot open " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 1099511628211ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

}  // namespace mdt
