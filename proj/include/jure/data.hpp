#pragma once

// Series ingestion, per-channel normalization, sliding windows, and the
// mapping from window scores back to per-timestep scores.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "jure/error.hpp"
#include "jure/numerics.hpp"

namespace jure {

struct TimeSeries {
  Matrix<double> values;                 // T×C
  std::optional<std::vector<int>> labels;  // length T, 1 = anomalous
  std::string name;

  std::size_t length() const noexcept { return values.rows(); }
  std::size_t channels() const noexcept { return values.cols(); }
};

inline void validate(const TimeSeries& s) {
  if (s.labels) {
    require_dims(s.labels->size() == s.length(),
                 "series '" + s.name + "': label length " +
                     std::to_string(s.labels->size()) + " != T " +
                     std::to_string(s.length()));
  }
  for (double v : s.values.values()) {
    if (!std::isfinite(v)) fail(ErrorKind::data, "series '" + s.name + "' contains non-finite values");
  }
}

/// Parse failure with its location (1-based row including any header line,
/// 1-based column; column 0 when the whole row is at fault).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(ErrorKind::data, what), row_(row), column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Label column selected by header name or by 0-based index.
using LabelColumn = std::variant<std::monostate, std::string, std::size_t>;

struct CsvOptions {
  bool has_header = false;
  LabelColumn label_column;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

}  // namespace detail

inline TimeSeries parse_csv(std::istream& in, const CsvOptions& opts,
                            std::string name = "series") {
  std::string line;
  std::size_t row = 0;
  std::size_t ncols = 0;
  std::optional<std::size_t> label_idx;
  if (const auto* idx = std::get_if<std::size_t>(&opts.label_column)) label_idx = *idx;

  if (opts.has_header) {
    if (!std::getline(in, line)) throw ParseError("empty file", 1, 0);
    ++row;
    const auto fields = detail::split_fields(line);
    ncols = fields.size();
    if (const auto* lname = std::get_if<std::string>(&opts.label_column)) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (detail::trim(fields[i]) == *lname) label_idx = i;
      }
      if (!label_idx) throw ParseError("label column '" + *lname + "' not found in header", 1, 0);
    }
  } else if (std::holds_alternative<std::string>(opts.label_column)) {
    throw ParseError("label column given by name but the file has no header", 0, 0);
  }

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t data_rows = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    if (ncols == 0) ncols = fields.size();
    if (fields.size() != ncols) {
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(ncols),
                       row, 0);
    }
    if (label_idx && *label_idx >= ncols) {
      throw ParseError("label column index " + std::to_string(*label_idx) + " out of range", row, 0);
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto v = detail::parse_double(fields[i]);
      if (!v) {
        throw ParseError("non-numeric cell '" + std::string(detail::trim(fields[i])) +
                             "' at row " + std::to_string(row) + ", column " +
                             std::to_string(i + 1),
                         row, i + 1);
      }
      if (label_idx && i == *label_idx) {
        if (*v != 0.0 && *v != 1.0) {
          throw ParseError("label must be 0 or 1 at row " + std::to_string(row), row, i + 1);
        }
        labels.push_back(static_cast<int>(*v));
      } else {
        values.push_back(*v);
      }
    }
    ++data_rows;
  }
  if (data_rows == 0) throw ParseError("no data rows", row, 0);

  const std::size_t nchan = ncols - (label_idx ? 1 : 0);
  if (nchan == 0) throw ParseError("no value columns", row, 0);
  TimeSeries s;
  s.name = std::move(name);
  s.values = Matrix<double>(data_rows, nchan);
  std::copy(values.begin(), values.end(), s.values.values().begin());
  if (label_idx) s.labels = std::move(labels);
  return s;
}

inline TimeSeries load_csv(const std::string& path, const CsvOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open '" + path + "'");
  return parse_csv(in, opts, path);
}

/// Shortest text that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Writes values (and a trailing `label` column when present) with a header.
inline void write_csv(std::ostream& out, const TimeSeries& s) {
  for (std::size_t c = 0; c < s.channels(); ++c) out << (c ? "," : "") << "ch" << c;
  if (s.labels) out << ",label";
  out << '\n';
  for (std::size_t t = 0; t < s.length(); ++t) {
    for (std::size_t c = 0; c < s.channels(); ++c) out << (c ? "," : "") << format_double(s.values(t, c));
    if (s.labels) out << ',' << (*s.labels)[t];
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const TimeSeries& s) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::data, "cannot write '" + path + "'");
  write_csv(out, s);
}

/// One normalized score per line.
inline void write_scores(std::ostream& out, const std::vector<double>& scores) {
  for (double v : scores) out << format_double(v) << '\n';
}

inline std::vector<double> read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open '" + path + "'");
  std::vector<double> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty() || line.front() == '#') continue;
    const auto v = detail::parse_double(line);
    if (!v) throw ParseError("non-numeric score at row " + std::to_string(row), row, 1);
    out.push_back(*v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-channel normalization.

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> constant;  // std == 0

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

inline NormStats fit_normalize(const TimeSeries& train) {
  require_dims(train.length() >= 2, "fit_normalize: need at least 2 timesteps");
  const std::size_t n = train.length();
  const std::size_t ch = train.channels();
  NormStats st{std::vector<double>(ch, 0.0), std::vector<double>(ch, 0.0),
               std::vector<bool>(ch, false)};
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t c = 0; c < ch; ++c) st.mean[c] += train.values(t, c);
  for (auto& m : st.mean) m /= static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < ch; ++c) {
      const double d = train.values(t, c) - st.mean[c];
      st.std[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < ch; ++c) {
    st.std[c] = std::sqrt(st.std[c] / static_cast<double>(n));
    st.constant[c] = st.std[c] == 0.0;
  }
  return st;
}

inline TimeSeries apply_normalize(const TimeSeries& series, const NormStats& st) {
  require_dims(series.channels() == st.mean.size(),
               "apply_normalize: series has " + std::to_string(series.channels()) +
                   " channels, statistics have " + std::to_string(st.mean.size()));
  TimeSeries out = series;
  for (std::size_t t = 0; t < out.length(); ++t) {
    for (std::size_t c = 0; c < out.channels(); ++c) {
      double v = out.values(t, c) - st.mean[c];
      if (!st.constant[c]) v /= st.std[c];
      out.values(t, c) = v;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Windowing.

struct WindowSet {
  Batch3<double> batch;
  std::vector<std::size_t> starts;
};

inline std::vector<std::size_t> window_starts(std::size_t length, std::size_t window,
                                              std::size_t stride) {
  require_config(stride >= 1, "windows: stride must be >= 1");
  require_config(window >= 1, "windows: window length must be >= 1");
  require_config(length >= window, "windows: series length T=" + std::to_string(length) +
                                       " is shorter than window W=" + std::to_string(window));
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + window <= length; s += stride) starts.push_back(s);
  return starts;
}

/// Copies the windows starting at `starts` into a batch.
inline Batch3<double> gather_windows(const Matrix<double>& values,
                                     std::span<const std::size_t> starts,
                                     std::size_t window) {
  const std::size_t ch = values.cols();
  Batch3<double> batch(starts.size(), window, ch);
  for (std::size_t b = 0; b < starts.size(); ++b) {
    const double* src = values.values().data() + starts[b] * ch;
    std::copy(src, src + window * ch, batch.at(b, 0).data());
  }
  return batch;
}

inline WindowSet windows(const TimeSeries& series, std::size_t window, std::size_t stride) {
  auto starts = window_starts(series.length(), window, stride);
  auto batch = gather_windows(series.values, starts, window);
  return {std::move(batch), std::move(starts)};
}

enum class Aggregation { mean, max };

/// Per-timestep score: mean (or max) over every window covering the
/// timestep. Uncovered timesteps copy the nearest covered timestep.
inline std::vector<double> assemble_point_scores(std::span<const double> window_scores,
                                                 std::span<const std::size_t> starts,
                                                 std::size_t length, std::size_t window,
                                                 Aggregation mode = Aggregation::mean) {
  require_config(!window_scores.empty(), "assemble_point_scores: no windows");
  require_dims(window_scores.size() == starts.size(),
               "assemble_point_scores: score/index count mismatch");
  std::vector<double> acc(length, mode == Aggregation::mean ? 0.0 : -INFINITY);
  std::vector<std::size_t> cover(length, 0);
  for (std::size_t w = 0; w < starts.size(); ++w) {
    require_dims(starts[w] + window <= length,
                 "assemble_point_scores: window at " + std::to_string(starts[w]) +
                     " extends past T=" + std::to_string(length));
    for (std::size_t t = starts[w]; t < starts[w] + window; ++t) {
      if (mode == Aggregation::mean) {
        acc[t] += window_scores[w];
      } else {
        acc[t] = std::max(acc[t], window_scores[w]);
      }
      ++cover[t];
    }
  }
  for (std::size_t t = 0; t < length; ++t) {
    if (cover[t] && mode == Aggregation::mean) acc[t] /= static_cast<double>(cover[t]);
  }
  // Fill gaps from the nearest covered neighbour (ties go left).
  std::optional<std::size_t> last;
  std::vector<std::size_t> next_cov(length, length);
  for (std::size_t t = length; t-- > 0;) {
    next_cov[t] = cover[t] ? t : (t + 1 < length ? next_cov[t + 1] : length);
  }
  std::vector<double> out = acc;
  for (std::size_t t = 0; t < length; ++t) {
    if (cover[t]) {
      last = t;
      continue;
    }
    const std::size_t right = next_cov[t];
    if (!last || (right < length && right - t < t - *last)) {
      out[t] = acc[right];
    } else {
      out[t] = acc[*last];
    }
  }
  return out;
}

/// Maximal runs of label 1 as [start, end] (inclusive).
inline std::vector<std::pair<std::size_t, std::size_t>> label_spans(std::span<const int> labels) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] != 1) continue;
    if (!spans.empty() && spans.back().second + 1 == t) {
      spans.back().second = t;
    } else {
      spans.emplace_back(t, t);
    }
  }
  return spans;
}

}  // namespace jure
