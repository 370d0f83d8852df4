#pragma once

// Run configuration: every knob of training, scoring, windowing and
// evaluation, readable from a flat `key = value` file and overridable per key.
// Keys are kebab-case; underscores are accepted and normalized.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "jure/data.hpp"
#include "jure/error.hpp"
#include "jure/eval.hpp"
#include "jure/scoring.hpp"
#include "jure/training.hpp"

namespace jure {

#ifndef JURE_VERSION
#define JURE_VERSION "0.1.0"
#endif

inline constexpr const char* kToolVersion = JURE_VERSION;

struct RunConfig {
  TrainConfig train;
  ScoreWeights weights;
  std::size_t window = 100;
  std::size_t hidden = 128;
  std::size_t kernel = 5;
  std::size_t blocks = 1;
  bool zero_init = true;
  std::size_t infer_stride = 1;
  Aggregation aggregation = Aggregation::mean;
  std::vector<std::size_t> vus_buffers = default_vus_buffers();
  int precision = 64;

  std::string train_file;
  std::string test_file;
  std::string checkpoint = "model.ckpt";
  std::string output_dir = ".";
  std::string scores_file;
  std::string label_column;  // header name or 0-based index; empty = none
  bool has_header = false;
  std::string variant;       // ablation identifier, informational
  std::string metrics = "auc_pr,auc_roc,vus_pr,vus_roc,ucr";
  std::string variants;      // ablate: comma list, empty = all
  std::string sweep_axis = "sigma";
  std::string sweep_values = "0,0.025,0.05,0.1,0.2,0.4";

  // Synthetic benchmark suite used by ablate/sweep when no files are given.
  std::size_t suite_seeds = 5;
  std::size_t suite_length = 2000;

  ModelOptions model_options() const {
    return {window, hidden, kernel, blocks, zero_init};
  }

  CsvOptions csv_options() const {
    CsvOptions o;
    o.has_header = has_header;
    if (!label_column.empty()) {
      const bool numeric = std::all_of(label_column.begin(), label_column.end(),
                                       [](char c) { return c >= '0' && c <= '9'; });
      if (numeric) {
        o.label_column = static_cast<std::size_t>(std::stoull(label_column));
      } else {
        o.label_column = label_column;
      }
    }
    return o;
  }
};

inline void validate(const RunConfig& c) {
  validate(c.train);
  validate(c.weights);
  require_config(c.window >= 2, "window must be >= 2");
  require_config(c.weights.trend_window <= c.window, "trend-window must not exceed window");
  require_config(c.hidden >= 1, "hidden must be >= 1");
  require_config(c.kernel % 2 == 1, "kernel must be odd");
  require_config(c.blocks >= 1, "n-blocks must be >= 1");
  require_config(c.infer_stride >= 1, "infer-stride must be >= 1");
  require_config(c.precision == 64 || c.precision == 32, "precision must be 64 or 32");
  require_config(!c.vus_buffers.empty(), "vus-buffers must not be empty");
  require_config(c.suite_seeds >= 1, "suite-seeds must be >= 1");
}

/// Splits a comma list, trimming blanks and dropping empty items.
inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

namespace detail {

inline std::string normalize_key(std::string k) {
  std::replace(k.begin(), k.end(), '_', '-');
  return k;
}

template <class N>
N parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  N out{};
  is >> out;
  if (!is || !(is >> std::ws).eof()) fail(ErrorKind::config, "invalid value '" + v + "' for " + key);
  if constexpr (std::is_unsigned_v<N>) {
    if (v.find('-') != std::string::npos) fail(ErrorKind::config, "negative value for " + key);
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorKind::config, "invalid boolean '" + v + "' for " + key);
}

inline std::string fmt(double v) { return format_double(v); }

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

/// Ordered key table; the order is the echo order.
inline const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
#define JURE_REAL(KEY, EXPR)                                                              \
  t.push_back({KEY,                                                                        \
               {[](RunConfig& c, const std::string& v) { c.EXPR = parse_number<double>(KEY, v); }, \
                [](const RunConfig& c) { return fmt(c.EXPR); }}})
#define JURE_COUNT(KEY, EXPR)                                                                   \
  t.push_back({KEY,                                                                              \
               {[](RunConfig& c, const std::string& v) { c.EXPR = parse_number<std::size_t>(KEY, v); }, \
                [](const RunConfig& c) { return std::to_string(c.EXPR); }}})
#define JURE_TEXT(KEY, EXPR)                                                    \
  t.push_back({KEY,                                                              \
               {[](RunConfig& c, const std::string& v) { c.EXPR = v; },         \
                [](const RunConfig& c) { return c.EXPR; }}})
#define JURE_FLAG(KEY, EXPR)                                                          \
  t.push_back({KEY,                                                                    \
               {[](RunConfig& c, const std::string& v) { c.EXPR = parse_bool(KEY, v); }, \
                [](const RunConfig& c) { return std::string(c.EXPR ? "true" : "false"); }}})

    JURE_REAL("sigma", train.sigma);
    JURE_REAL("mask-p", train.mask_p);
    JURE_REAL("lambda-diff", train.lambda_diff);
    JURE_REAL("lr", train.lr);
    JURE_REAL("weight-decay", train.weight_decay);
    JURE_COUNT("batch-size", train.batch_size);
    JURE_COUNT("max-epochs", train.max_epochs);
    JURE_COUNT("patience", train.patience);
    JURE_REAL("val-fraction", train.val_fraction);
    t.push_back({"seed",
                 {[](RunConfig& c, const std::string& v) {
                    c.train.seed = parse_number<std::uint64_t>("seed", v);
                  },
                  [](const RunConfig& c) { return std::to_string(c.train.seed); }}});
    JURE_COUNT("train-stride", train.train_stride);
    JURE_REAL("w-amp", weights.amp);
    JURE_REAL("w-diff", weights.diff);
    JURE_REAL("w-trend", weights.trend);
    JURE_REAL("w-corr", weights.corr);
    JURE_COUNT("trend-window", weights.trend_window);
    JURE_COUNT("window", window);
    JURE_COUNT("hidden", hidden);
    JURE_COUNT("kernel", kernel);
    JURE_COUNT("n-blocks", blocks);
    JURE_FLAG("zero-init", zero_init);
    JURE_COUNT("infer-stride", infer_stride);
    t.push_back({"aggregation",
                 {[](RunConfig& c, const std::string& v) {
                    if (v == "mean") {
                      c.aggregation = Aggregation::mean;
                    } else if (v == "max") {
                      c.aggregation = Aggregation::max;
                    } else {
                      fail(ErrorKind::config, "aggregation must be 'mean' or 'max', got '" + v + "'");
                    }
                  },
                  [](const RunConfig& c) {
                    return std::string(c.aggregation == Aggregation::mean ? "mean" : "max");
                  }}});
    t.push_back({"vus-buffers",
                 {[](RunConfig& c, const std::string& v) {
                    c.vus_buffers.clear();
                    std::stringstream ss(v);
                    std::string item;
                    while (std::getline(ss, item, ',')) {
                      c.vus_buffers.push_back(parse_number<std::size_t>("vus-buffers", item));
                    }
                  },
                  [](const RunConfig& c) {
                    std::string out;
                    for (std::size_t i = 0; i < c.vus_buffers.size(); ++i) {
                      out += (i ? "," : "") + std::to_string(c.vus_buffers[i]);
                    }
                    return out;
                  }}});
    t.push_back({"precision",
                 {[](RunConfig& c, const std::string& v) { c.precision = parse_number<int>("precision", v); },
                  [](const RunConfig& c) { return std::to_string(c.precision); }}});
    JURE_TEXT("train-file", train_file);
    JURE_TEXT("test-file", test_file);
    JURE_TEXT("checkpoint", checkpoint);
    JURE_TEXT("output-dir", output_dir);
    JURE_TEXT("scores-file", scores_file);
    JURE_TEXT("label-column", label_column);
    JURE_FLAG("has-header", has_header);
    JURE_TEXT("variant", variant);
    JURE_TEXT("metrics", metrics);
    JURE_TEXT("variants", variants);
    JURE_TEXT("sweep-axis", sweep_axis);
    JURE_TEXT("sweep-values", sweep_values);
    JURE_COUNT("suite-seeds", suite_seeds);
    JURE_COUNT("suite-length", suite_length);
#undef JURE_REAL
#undef JURE_COUNT
#undef JURE_TEXT
#undef JURE_FLAG
    return t;
  }();
  return table;
}

inline const Field* find_field(const std::string& key) {
  const std::string k = normalize_key(key);
  for (const auto& [name, f] : fields()) {
    if (name == k) return &f;
  }
  return nullptr;
}

inline std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, f] : detail::fields()) keys.push_back(k);
  return keys;
}

inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto* f = detail::find_field(key);
  if (!f) fail(ErrorKind::config, "unknown configuration key '" + key + "'");
  f->set(cfg, value);
}

inline std::string get_config_value(const RunConfig& cfg, const std::string& key) {
  const auto* f = detail::find_field(key);
  if (!f) fail(ErrorKind::config, "unknown configuration key '" + key + "'");
  return f->get(cfg);
}

/// Applies `key = value` lines; '#' starts a comment.
inline void apply_config_text(RunConfig& cfg, std::istream& in, const std::string& origin = "config") {
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim_copy(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::config, origin + ":" + std::to_string(row) + ": expected 'key = value'");
    }
    set_config_value(cfg, detail::trim_copy(line.substr(0, eq)), detail::trim_copy(line.substr(eq + 1)));
  }
}

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot open config file '" + path + "'");
  apply_config_text(cfg, in, path);
}

/// Resolved configuration as `key = value` lines, prefixed by the tool
/// version. Embedded in every output artifact.
inline std::string config_echo(const RunConfig& cfg, const std::string& prefix = "") {
  std::ostringstream os;
  os << prefix << "jure-version = " << kToolVersion << '\n';
  for (const auto& [k, f] : detail::fields()) os << prefix << k << " = " << f.get(cfg) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Ablation variants: each identifier is exactly one config delta.

inline const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> ids{"amp_only", "no_corr_term", "no_diff_term",
                                            "no_noise", "no_mask",      "no_diff_loss",
                                            "two_blocks", "no_zero_init", "h8"};
  return ids;
}

inline RunConfig apply_variant(RunConfig cfg, const std::string& id) {
  if (id == "full") {
  } else if (id == "amp_only") {
    cfg.weights.diff = cfg.weights.trend = cfg.weights.corr = 0.0;
    cfg.weights.amp = 1.0;
  } else if (id == "no_corr_term") {
    cfg.weights.corr = 0.0;
  } else if (id == "no_diff_term") {
    cfg.weights.diff = 0.0;
  } else if (id == "no_noise") {
    cfg.train.sigma = 0.0;
  } else if (id == "no_mask") {
    cfg.train.mask_p = 0.0;
  } else if (id == "no_diff_loss") {
    cfg.train.lambda_diff = 0.0;
  } else if (id == "two_blocks") {
    cfg.blocks = 2;
  } else if (id == "no_zero_init") {
    cfg.zero_init = false;
  } else if (id == "h8") {
    cfg.hidden = 8;
  } else {
    std::string valid;
    for (const auto& v : ablation_variants()) valid += (valid.empty() ? "" : ", ") + v;
    fail(ErrorKind::config, "unknown ablation variant '" + id + "'; valid: " + valid);
  }
  cfg.variant = id;
  return cfg;
}

// ---------------------------------------------------------------------------
// Sweep axes.

inline const std::vector<std::string>& sweep_axes() {
  static const std::vector<std::string> axes{"sigma", "lambda_diff", "w_diff", "w_trend", "w_corr"};
  return axes;
}

inline RunConfig apply_sweep_value(RunConfig cfg, const std::string& axis, double value) {
  if (axis == "sigma") {
    cfg.train.sigma = value;
  } else if (axis == "lambda_diff" || axis == "lambda-diff") {
    cfg.train.lambda_diff = value;
  } else if (axis == "w_diff" || axis == "w-diff") {
    cfg.weights.diff = value;
  } else if (axis == "w_trend" || axis == "w-trend") {
    cfg.weights.trend = value;
  } else if (axis == "w_corr" || axis == "w-corr") {
    cfg.weights.corr = value;
  } else {
    fail(ErrorKind::config,
         "unknown sweep axis '" + axis + "'; valid: sigma, lambda_diff, w_diff, w_trend, w_corr");
  }
  return cfg;
}

}  // namespace jure
