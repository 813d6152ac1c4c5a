#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvbf/bayes_factor.hpp"
#include "cvbf/core.hpp"
#include "cvbf/random.hpp"

namespace cvbf::io {

struct CsvOptions {
  int label_col = 1;  // 1-based
  int value_col = 2;  // 1-based
  char delimiter = ',';
  bool header = false;
  std::optional<std::size_t> subsample;  // rows drawn without replacement
  std::uint64_t seed = 0;
};

struct TwoSampleInput {
  std::string label_x;
  std::string label_y;
  Sample x;
  Sample y;
  std::size_t rows = 0;  // data rows used
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_line(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct Row {
  std::size_t line;
  std::string label;
  double value;
};

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

inline bool blank(std::string_view s) { return trim(s).empty(); }

inline std::vector<std::size_t> subsample_rows(std::size_t n, const CsvOptions& opts) {
  std::vector<std::size_t> idx;
  if (!opts.subsample) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  if (*opts.subsample < 1 || *opts.subsample > n) {
    throw InputError("subsample size " + std::to_string(*opts.subsample) +
                     " must lie in [1, " + std::to_string(n) + "]");
  }
  Rng rng(opts.seed);
  idx = sample_without_replacement(n, *opts.subsample, rng);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

/// Reads a labelled two-group file. Exactly two distinct labels are allowed;
/// the lexicographically smaller one becomes x. Errors name the file line.
inline TwoSampleInput ingest_csv(const std::string& path, const CsvOptions& opts = {}) {
  if (opts.label_col < 1 || opts.value_col < 1 || opts.label_col == opts.value_col) {
    throw InputError("label and value columns must be distinct 1-based indices");
  }
  const auto lines = detail::read_lines(path);
  std::vector<detail::Row> rows;
  const auto need = static_cast<std::size_t>(std::max(opts.label_col, opts.value_col));
  for (std::size_t i = opts.header ? 1 : 0; i < lines.size(); ++i) {
    if (detail::blank(lines[i])) continue;
    const auto cells = detail::split_line(lines[i], opts.delimiter);
    const std::size_t lineno = i + 1;
    if (cells.size() < need) {
      throw InputError(path + ": row " + std::to_string(lineno) + " has " +
                       std::to_string(cells.size()) + " columns, need " + std::to_string(need));
    }
    const auto label = cells[static_cast<std::size_t>(opts.label_col - 1)];
    const auto raw = cells[static_cast<std::size_t>(opts.value_col - 1)];
    if (label.empty()) {
      throw InputError(path + ": row " + std::to_string(lineno) + " has an empty label");
    }
    const auto v = detail::parse_double(raw);
    if (!v) {
      throw InputError(path + ": row " + std::to_string(lineno) + " has a non-numeric value '" +
                       std::string(raw) + "'");
    }
    rows.push_back({lineno, std::string(label), *v});
  }
  std::map<std::string, std::size_t> labels;
  for (const auto& r : rows) {
    labels.emplace(r.label, 0);
    if (labels.size() > 2) {
      throw InputError(path + ": row " + std::to_string(r.line) + " introduces a third label '" +
                       r.label + "'");
    }
  }
  if (labels.size() < 2) throw InputError(path + ": need two groups, found " +
                                          std::to_string(labels.size()));
  TwoSampleInput out;
  out.label_x = labels.begin()->first;
  out.label_y = std::next(labels.begin())->first;
  std::vector<double> xs, ys;
  for (auto i : detail::subsample_rows(rows.size(), opts)) {
    (rows[i].label == out.label_x ? xs : ys).push_back(rows[i].value);
    ++out.rows;
  }
  if (xs.size() < 2 || ys.size() < 2) {
    throw InputError(path + ": each group needs at least two observations (got " +
                     std::to_string(xs.size()) + " and " + std::to_string(ys.size()) + ")");
  }
  out.x = Sample(std::move(xs));
  out.y = Sample(std::move(ys));
  return out;
}

/// One value per line (column `value_col`), optional header.
inline Sample read_column(const std::string& path, const CsvOptions& opts = {.value_col = 1}) {
  const auto lines = detail::read_lines(path);
  std::vector<double> vals;
  const auto col = static_cast<std::size_t>(opts.value_col < 1 ? 1 : opts.value_col);
  for (std::size_t i = opts.header ? 1 : 0; i < lines.size(); ++i) {
    if (detail::blank(lines[i])) continue;
    const auto cells = detail::split_line(lines[i], opts.delimiter);
    const std::size_t lineno = i + 1;
    if (cells.size() < col) {
      throw InputError(path + ": row " + std::to_string(lineno) + " is missing column " +
                       std::to_string(col));
    }
    const auto v = detail::parse_double(cells[col - 1]);
    if (!v) {
      throw InputError(path + ": row " + std::to_string(lineno) + " has a non-numeric value '" +
                       std::string(cells[col - 1]) + "'");
    }
    vals.push_back(*v);
  }
  if (vals.size() < 2) throw InputError(path + ": need at least two observations");
  return Sample(std::move(vals));
}

struct SweepRow {
  std::size_t r = 0;
  int split = 0;
  double log_bf = 0.0;
};

struct SweepMean {
  std::size_t r = 0;
  double mean = 0.0;
  int failed = 0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::vector<SweepMean> means;
};

struct SweepOptions {
  int n_splits = 20;
  std::uint64_t seed = 0;
  KernelKind kernel = KernelKind::Hall;
  MarginalMethod method = MarginalMethod::Laplace;
};

/// For each r (= s) in r_list, n_splits random splits of both samples.
inline SweepTable run_split_sweep(const Sample& x, const Sample& y,
                                  const std::vector<std::size_t>& r_list,
                                  const SweepOptions& opts = {}) {
  if (r_list.empty()) throw InputError("sweep needs at least one training size");
  for (auto r : r_list) {
    if (r < 1 || r >= x.size() || r >= y.size()) {
      throw InputError("sweep training size " + std::to_string(r) +
                       " must be smaller than both group sizes");
    }
  }
  SweepTable t;
  for (std::size_t i = 0; i < r_list.size(); ++i) {
    CvbfConfig c;
    c.r = r_list[i];
    c.s = r_list[i];
    c.n_splits = opts.n_splits;
    c.seed = derive_seed(opts.seed, streams::replication, i);
    c.kernel = opts.kernel;
    c.method = opts.method;
    const auto rep = cvbf_multi_split(x, y, c);
    for (const auto& s : rep.splits) {
      if (s.ok) t.rows.push_back({r_list[i], s.index, s.result.log_bf});
    }
    t.means.push_back({r_list[i], rep.log_bf_geo, rep.failed});
  }
  return t;
}

// ------------------------------------------------------------- serialization

using Json = nlohmann::ordered_json;

/// Output record of a CLI command. Numbers are written as the shortest
/// decimal string that reads back to the same double.
struct ResultEnvelope {
  std::string command;
  std::uint64_t seed = 0;
  Json config = Json::object();
  Json results = Json::object();
  Json details = Json::object();
  double seconds = 0.0;

  [[nodiscard]] Json to_json() const {
    Json j;
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = config;
    j["results"] = results;
    j["details"] = details;
    j["timing"] = {{"seconds", seconds}};
    return j;
  }

  [[nodiscard]] std::string dump() const { return to_json().dump(2); }

  static ResultEnvelope from_json(const Json& j) {
    ResultEnvelope e;
    try {
      e.command = j.at("command").get<std::string>();
      e.seed = j.at("seed").get<std::uint64_t>();
      e.config = j.at("config");
      e.results = j.at("results");
      e.details = j.at("details");
      e.seconds = j.at("timing").at("seconds").get<double>();
    } catch (const nlohmann::json::exception& ex) {
      throw InputError(std::string("malformed result envelope: ") + ex.what());
    }
    return e;
  }

  static ResultEnvelope parse(const std::string& text) {
    try {
      return from_json(Json::parse(text));
    } catch (const nlohmann::json::parse_error& ex) {
      throw InputError(std::string("result envelope is not valid JSON: ") + ex.what());
    }
  }
};

/// Doubles with 17 significant digits.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Plot-ready CSV: header then rows; every cell already formatted.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw InputError("CSV row width mismatch");
    rows_.push_back(std::move(row));
  }

  [[nodiscard]] std::string str() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return os.str();
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace cvbf::io
