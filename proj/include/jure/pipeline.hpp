#pragma once

// End-to-end pipeline used by the command-line tool: train a checkpoint,
// score a series, evaluate scores, and run ablation and sweep studies over a
// suite of train/test pairs. Every function here returns artifact contents
// as strings so callers decide where bytes go.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "jure/checkpoint.hpp"
#include "jure/config.hpp"
#include "jure/data.hpp"
#include "jure/error.hpp"
#include "jure/eval.hpp"
#include "jure/synthetic.hpp"
#include "jure/training.hpp"

namespace jure {

// ---------------------------------------------------------------------------
// Training.

struct TrainOutcome {
  Checkpoint checkpoint;
  TrainReport report;
};

template <class T>
JuReNet<double> to_double(const JuReNet<T>& net) {
  if constexpr (std::is_same_v<T, double>) {
    return net;
  } else {
    auto out = JuReNet<double>::init(net.shape(), 0, true);
    auto src = net.parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) {
      for (std::size_t j = 0; j < src[i]->size(); ++j) {
        dst[i]->value.values()[j] = static_cast<double>(src[i]->value.values()[j]);
      }
    }
    return out;
  }
}

/// Normalizes `raw`, fits a network and packages it with everything scoring
/// needs.
inline TrainOutcome train_model(const TimeSeries& raw, const RunConfig& cfg) {
  validate(cfg);
  validate(raw);
  TrainOutcome out;
  out.checkpoint.norm = fit_normalize(raw);
  const TimeSeries series = apply_normalize(raw, out.checkpoint.norm);
  const ModelOptions model = cfg.model_options();
  if (cfg.precision == 32) {
    auto r = train<float>(series, cfg.train, model, cfg.weights);
    out.checkpoint.net = to_double(r.net);
    out.report = std::move(r.report);
    // Statistics must come from the network that will do the scoring.
    const auto starts = window_starts(series.length(), model.window, cfg.train.train_stride);
    out.checkpoint.score_stats = fit_score_stats(
        score_windows(out.checkpoint.net, gather_windows(series.values, starts, model.window), cfg.weights));
  } else {
    auto r = train<double>(series, cfg.train, model, cfg.weights);
    out.checkpoint.net = std::move(r.net);
    out.report = std::move(r.report);
    out.checkpoint.score_stats = r.score_stats;
  }
  out.checkpoint.zero_init_output = cfg.zero_init;
  out.checkpoint.weights = cfg.weights;
  out.checkpoint.window = cfg.window;
  out.checkpoint.config = config_echo(cfg);
  return out;
}

/// Key-value training report. Wall-clock time is left out so that repeated
/// runs produce identical files.
inline std::string render_train_report(const TrainOutcome& t, const RunConfig& cfg) {
  std::ostringstream os;
  const auto& r = t.report;
  os << "parameters = " << t.checkpoint.net.parameter_count() << '\n';
  os << "train-windows = " << r.train_windows << '\n';
  os << "val-windows = " << r.val_windows << '\n';
  os << "initial-val-loss = " << format_double(r.initial_val_loss) << '\n';
  for (std::size_t e = 0; e < r.train_loss.size(); ++e) {
    os << "epoch." << e + 1 << ".train-loss = " << format_double(r.train_loss[e]) << '\n';
    os << "epoch." << e + 1 << ".val-loss = " << format_double(r.val_loss[e]) << '\n';
  }
  os << "stopped-epoch = " << r.stopped_epoch << '\n';
  os << "best-epoch = " << r.best_epoch << '\n';
  os << "best-val-loss = " << format_double(r.best_val_loss) << '\n';
  os << "score-median = " << format_double(t.checkpoint.score_stats.median) << '\n';
  os << "score-iqr = " << format_double(t.checkpoint.score_stats.iqr) << '\n';
  os << config_echo(cfg, "config.");
  return os.str();
}

// ---------------------------------------------------------------------------
// Scoring.

struct ScoreOutcome {
  std::vector<double> points;         // length T, robust z-scores
  std::vector<double> window_scores;  // normalized, one per window
  std::vector<std::size_t> starts;
  double seconds = 0.0;
};

/// Point scores of an uncorrupted series. Consumes no randomness.
inline ScoreOutcome score_series(const Checkpoint& ck, const TimeSeries& raw, std::size_t stride,
                                 Aggregation mode) {
  const std::size_t want = ck.net.shape().channels;
  require_config(raw.channels() == want, "channel mismatch: checkpoint expects C=" + std::to_string(want) +
                                             ", series '" + raw.name + "' has C=" +
                                             std::to_string(raw.channels()));
  validate(raw);
  const auto clock_start = std::chrono::steady_clock::now();
  const TimeSeries series = apply_normalize(raw, ck.norm);
  auto ws = windows(series, ck.window, stride);
  ScoreOutcome out;
  out.window_scores = normalize_scores(score_windows(ck.net, ws.batch, ck.weights), ck.score_stats);
  out.starts = std::move(ws.starts);
  out.points = assemble_point_scores(out.window_scores, out.starts, series.length(), ck.window, mode);
  for (double v : out.points) {
    if (!std::isfinite(v)) fail(ErrorKind::numeric, "score: non-finite point score");
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return out;
}

/// Score file contents: exactly one score per timestep.
inline std::string render_scores(const std::vector<double>& points) {
  std::ostringstream os;
  write_scores(os, points);
  return os.str();
}

/// Sidecar written next to a score file: the resolved config and, when
/// given, the configuration stored in the checkpoint that produced it.
inline std::string render_scores_config(const RunConfig& cfg, const std::string& checkpoint_config = "") {
  std::ostringstream os;
  os << config_echo(cfg);
  std::istringstream in(checkpoint_config);
  for (std::string line; std::getline(in, line);) os << "checkpoint." << line << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Evaluation reports.

struct MetricSet {
  bool auc_pr = true;
  bool auc_roc = true;
  bool vus_pr = true;
  bool vus_roc = true;
  bool ucr = true;
};

inline MetricSet parse_metric_set(const std::string& text) {
  MetricSet m{false, false, false, false, false};
  const auto items = split_list(text);
  require_config(!items.empty(), "metrics: at least one metric is required");
  for (const auto& raw : items) {
    std::string k = raw;
    std::replace(k.begin(), k.end(), '-', '_');
    if (k == "auc_pr") {
      m.auc_pr = true;
    } else if (k == "auc_roc") {
      m.auc_roc = true;
    } else if (k == "vus_pr") {
      m.vus_pr = true;
    } else if (k == "vus_roc") {
      m.vus_roc = true;
    } else if (k == "ucr") {
      m.ucr = true;
    } else {
      fail(ErrorKind::config, "unknown metric '" + raw + "'; valid: auc_pr, auc_roc, vus_pr, vus_roc, ucr");
    }
  }
  return m;
}

struct MetricReport {
  std::vector<MetricRow> rows;
  MetricRow mean;  // name "mean"; each entry averages the rows where it is defined
};

inline MetricReport summarize(std::vector<MetricRow> rows) {
  MetricReport r;
  r.rows = std::move(rows);
  r.mean.name = "mean";
  r.mean.auc_pr = mean_defined<>(std::span<const MetricRow>(r.rows), [](const MetricRow& m) { return m.auc_pr; });
  r.mean.auc_roc = mean_defined<>(std::span<const MetricRow>(r.rows), [](const MetricRow& m) { return m.auc_roc; });
  r.mean.vus_pr = mean_defined<>(std::span<const MetricRow>(r.rows), [](const MetricRow& m) { return m.vus_pr; });
  r.mean.vus_roc = mean_defined<>(std::span<const MetricRow>(r.rows), [](const MetricRow& m) { return m.vus_roc; });
  return r;
}

/// UCR mean over defined series; kept apart from MetricRow because the
/// aggregate is a fraction, not a per-series hit.
inline std::optional<double> ucr_mean(const std::vector<MetricRow>& rows) {
  return mean_defined<>(std::span<const MetricRow>(rows), [](const MetricRow& m) { return m.ucr; });
}

namespace detail {

inline std::string cell(const std::optional<double>& v, int digits = 4) {
  if (!v) return "undefined";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << *v;
  return os.str();
}

inline std::string cell(const std::optional<int>& v) {
  return v ? std::to_string(*v) : std::string("undefined");
}

inline std::string exact(const std::optional<double>& v) { return v ? format_double(*v) : "undefined"; }

inline std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

struct Column {
  std::string title;
  std::vector<std::string> values;
};

inline std::string render_columns(const std::vector<Column>& cols) {
  std::vector<std::size_t> width(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    width[i] = cols[i].title.size();
    for (const auto& v : cols[i].values) width[i] = std::max(width[i], v.size());
  }
  std::ostringstream os;
  auto line = [&](auto get) {
    std::string row;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      row += (i ? "  " : "") + pad(get(i), i + 1 < cols.size() ? width[i] : 0);
    }
    os << row << '\n';
  };
  line([&](std::size_t i) { return cols[i].title; });
  line([&](std::size_t i) { return std::string(width[i], '-'); });
  const std::size_t n = cols.empty() ? 0 : cols.front().values.size();
  for (std::size_t r = 0; r < n; ++r) line([&](std::size_t i) { return cols[i].values[r]; });
  return os.str();
}

}  // namespace detail

/// Per-epoch losses as an aligned table; epoch 0 is the initial network.
inline std::string render_train_table(const TrainOutcome& t, const RunConfig& cfg) {
  const auto& r = t.report;
  std::vector<detail::Column> cols{{"epoch", {}}, {"train-loss", {}}, {"val-loss", {}}, {"best", {}}};
  auto add = [&](std::size_t e, const std::string& train_loss, double val) {
    cols[0].values.push_back(std::to_string(e));
    cols[1].values.push_back(train_loss);
    cols[2].values.push_back(detail::cell(val, 6));
    cols[3].values.push_back(e == r.best_epoch ? "*" : "");
  };
  add(0, "-", r.initial_val_loss);
  for (std::size_t e = 0; e < r.train_loss.size(); ++e) add(e + 1, detail::cell(r.train_loss[e], 6), r.val_loss[e]);
  std::ostringstream os;
  os << config_echo(cfg, "# ");
  os << "# parameters " << t.checkpoint.net.parameter_count() << ", train windows " << r.train_windows
     << ", validation windows " << r.val_windows << '\n';
  os << detail::render_columns(cols);
  return os.str();
}

/// Aligned plain-text table: one row per series, then the mean row.
inline std::string render_metric_table(const MetricReport& rep, const MetricSet& m, const RunConfig& cfg) {
  std::vector<detail::Column> cols{{"series", {}}};
  if (m.auc_pr) cols.push_back({"AUC-PR", {}});
  if (m.auc_roc) cols.push_back({"AUC-ROC", {}});
  if (m.vus_pr) cols.push_back({"VUS-PR", {}});
  if (m.vus_roc) cols.push_back({"VUS-ROC", {}});
  if (m.ucr) cols.push_back({"UCR", {}});
  auto add = [&](const MetricRow& r, const std::optional<double>& ucr_value, bool aggregate) {
    std::size_t i = 0;
    cols[i++].values.push_back(r.name);
    if (m.auc_pr) cols[i++].values.push_back(detail::cell(r.auc_pr));
    if (m.auc_roc) cols[i++].values.push_back(detail::cell(r.auc_roc));
    if (m.vus_pr) cols[i++].values.push_back(detail::cell(r.vus_pr));
    if (m.vus_roc) cols[i++].values.push_back(detail::cell(r.vus_roc));
    if (m.ucr) cols[i++].values.push_back(aggregate ? detail::cell(ucr_value) : detail::cell(r.ucr));
  };
  for (const auto& r : rep.rows) add(r, std::nullopt, false);
  add(rep.mean, ucr_mean(rep.rows), true);
  return config_echo(cfg, "# ") + detail::render_columns(cols);
}

/// Machine-readable report: `key = value` per metric, exact digits.
inline std::string render_metric_kv(const MetricReport& rep, const MetricSet& m, const RunConfig& cfg) {
  std::ostringstream os;
  auto emit = [&](const std::string& prefix, const MetricRow& r, const std::optional<double>& ucr_value,
                  bool aggregate) {
    if (m.auc_pr) os << prefix << "auc-pr = " << detail::exact(r.auc_pr) << '\n';
    if (m.auc_roc) os << prefix << "auc-roc = " << detail::exact(r.auc_roc) << '\n';
    if (m.vus_pr) os << prefix << "vus-pr = " << detail::exact(r.vus_pr) << '\n';
    if (m.vus_roc) os << prefix << "vus-roc = " << detail::exact(r.vus_roc) << '\n';
    if (m.ucr) {
      os << prefix << "ucr = " << (aggregate ? detail::exact(ucr_value) : detail::cell(r.ucr)) << '\n';
    }
  };
  os << "series-count = " << rep.rows.size() << '\n';
  emit("mean.", rep.mean, ucr_mean(rep.rows), true);
  for (const auto& r : rep.rows) emit("series." + r.name + ".", r, std::nullopt, false);
  os << config_echo(cfg, "config.");
  return os.str();
}

inline MetricReport evaluate_scores(const std::vector<LabeledScores>& series,
                                    const std::vector<std::size_t>& buffers) {
  std::vector<MetricRow> rows;
  for (const auto& ls : series) {
    require_config(ls.scores.size() == ls.labels.size(),
                   "eval: '" + ls.name + "' has " + std::to_string(ls.scores.size()) + " scores but " +
                       std::to_string(ls.labels.size()) + " labels");
    rows.push_back(evaluate_series(ls, buffers));
  }
  return summarize(std::move(rows));
}

// ---------------------------------------------------------------------------
// Suites for ablation and sweep studies.

struct SuiteTask {
  std::string name;
  std::size_t group = 0;   // seed index for the synthetic suite
  std::uint64_t seed = 0;  // training seed
  TimeSeries train;
  TimeSeries test;
};

inline const std::vector<AnomalyKind>& suite_kinds() {
  static const std::vector<AnomalyKind> kinds{AnomalyKind::amplitude_spike, AnomalyKind::trend_shift,
                                              AnomalyKind::gradient_noise, AnomalyKind::correlation_break};
  return kinds;
}

/// The canonical spec of `kind` rescaled to series length `length`.
inline SyntheticSpec suite_spec(AnomalyKind kind, std::size_t length) {
  SyntheticSpec s = default_synthetic(kind);
  if (length != s.length) {
    const double f = static_cast<double>(length) / static_cast<double>(s.length);
    s.anomaly_start = static_cast<std::size_t>(static_cast<double>(s.anomaly_start) * f);
    s.anomaly_length = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(s.anomaly_length) * f));
    s.length = length;
  }
  return s;
}

/// Per-group seed shared by data generation and training.
inline std::uint64_t suite_seed(std::uint64_t base, std::size_t group) {
  Rng r(base);
  std::uint64_t s = 0;
  for (std::size_t i = 0; i <= group; ++i) s = r.fork();
  return s;
}

/// Four anomaly classes × `suite_seeds` seeds.
inline std::vector<SuiteTask> synthetic_suite(const RunConfig& cfg) {
  std::vector<SuiteTask> tasks;
  for (std::size_t g = 0; g < cfg.suite_seeds; ++g) {
    const std::uint64_t seed = suite_seed(cfg.train.seed, g);
    for (auto kind : suite_kinds()) {
      auto pair = generate_synthetic(suite_spec(kind, cfg.suite_length), seed);
      tasks.push_back({std::string(to_string(kind)) + "/" + std::to_string(g), g, seed, std::move(pair.train),
                       std::move(pair.test)});
    }
  }
  return tasks;
}

/// Pairs from comma-separated train-file and test-file lists.
inline std::vector<SuiteTask> file_suite(const RunConfig& cfg) {
  const auto trains = split_list(cfg.train_file);
  const auto tests = split_list(cfg.test_file);
  require_config(trains.size() == tests.size(),
                 "train-file lists " + std::to_string(trains.size()) + " files but test-file lists " +
                     std::to_string(tests.size()));
  std::vector<SuiteTask> tasks;
  const auto opts = cfg.csv_options();
  for (std::size_t i = 0; i < trains.size(); ++i) {
    SuiteTask t;
    t.name = std::filesystem::path(tests[i]).stem().string();
    t.group = 0;
    t.seed = cfg.train.seed;
    t.train = load_csv(trains[i], opts);
    t.train.labels.reset();
    t.test = load_csv(tests[i], opts);
    require_config(t.test.labels.has_value(), "test file '" + tests[i] + "' has no labels; set label-column");
    tasks.push_back(std::move(t));
  }
  return tasks;
}

/// The user's files when both lists are set, otherwise the synthetic suite.
inline std::vector<SuiteTask> study_suite(const RunConfig& cfg) {
  if (!cfg.train_file.empty() || !cfg.test_file.empty()) return file_suite(cfg);
  return synthetic_suite(cfg);
}

/// Train, score and evaluate one pair under `cfg` (its seed is replaced by
/// the task's).
inline MetricRow run_task(const RunConfig& cfg, const SuiteTask& task) {
  RunConfig c = cfg;
  c.train.seed = task.seed;
  const auto trained = train_model(task.train, c);
  const auto scored = score_series(trained.checkpoint, task.test, c.infer_stride, c.aggregation);
  LabeledScores ls{task.name, scored.points, *task.test.labels};
  return evaluate_series(ls, c.vus_buffers);
}

struct StudyResult {
  std::vector<std::string> labels;          // one per configuration
  std::vector<MetricReport> reports;        // parallel to labels
  std::vector<std::size_t> groups;          // task group per row
};

using Progress = std::function<void(const std::string& label, const std::string& task)>;

inline StudyResult run_study(const std::vector<std::pair<std::string, RunConfig>>& configs,
                             const std::vector<SuiteTask>& tasks, const Progress& progress = {}) {
  StudyResult out;
  for (const auto& t : tasks) out.groups.push_back(t.group);
  for (const auto& [label, cfg] : configs) {
    validate(cfg);
    std::vector<MetricRow> rows;
    for (const auto& t : tasks) {
      if (progress) progress(label, t.name);
      rows.push_back(run_task(cfg, t));
    }
    out.labels.push_back(label);
    out.reports.push_back(summarize(std::move(rows)));
  }
  return out;
}

inline std::vector<std::string> resolve_variants(const RunConfig& cfg) {
  auto ids = split_list(cfg.variants);
  if (ids.empty()) ids = ablation_variants();
  for (const auto& id : ids) apply_variant(cfg, id);  // validates
  return ids;
}

/// "full" first, then each variant, all with the same seed.
inline std::vector<std::pair<std::string, RunConfig>> ablation_configs(const RunConfig& cfg) {
  std::vector<std::pair<std::string, RunConfig>> out{{"full", apply_variant(cfg, "full")}};
  for (const auto& id : resolve_variants(cfg)) {
    if (id != "full") out.emplace_back(id, apply_variant(cfg, id));
  }
  return out;
}

inline std::vector<double> parse_sweep_values(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(detail::parse_number<double>("sweep-values", item));
  require_config(!out.empty(), "sweep-values must list at least one number");
  return out;
}

inline std::vector<std::pair<std::string, RunConfig>> sweep_configs(const RunConfig& cfg) {
  std::vector<std::pair<std::string, RunConfig>> out;
  for (double v : parse_sweep_values(cfg.sweep_values)) {
    out.emplace_back(format_double(v), apply_sweep_value(cfg, cfg.sweep_axis, v));
  }
  return out;
}

/// Comparison table with one row per configuration; `first_title` names the
/// leading column. The last column is the AUC-PR change from the first row.
inline std::string render_study_table(const StudyResult& st, const std::string& first_title,
                                      const RunConfig& cfg) {
  std::vector<detail::Column> cols{{first_title, {}}, {"AUC-PR", {}},  {"AUC-ROC", {}}, {"VUS-PR", {}},
                                   {"VUS-ROC", {}},   {"UCR", {}},     {"dAUC-PR", {}}};
  const bool has_base = !st.reports.empty() && st.reports.front().mean.auc_pr.has_value();
  const double base = has_base ? st.reports.front().mean.auc_pr.value() : 0.0;
  for (std::size_t i = 0; i < st.labels.size(); ++i) {
    const auto& m = st.reports[i].mean;
    cols[0].values.push_back(st.labels[i]);
    cols[1].values.push_back(detail::cell(m.auc_pr));
    cols[2].values.push_back(detail::cell(m.auc_roc));
    cols[3].values.push_back(detail::cell(m.vus_pr));
    cols[4].values.push_back(detail::cell(m.vus_roc));
    cols[5].values.push_back(detail::cell(ucr_mean(st.reports[i].rows)));
    std::optional<double> delta;
    if (has_base && m.auc_pr) delta = *m.auc_pr - base;
    std::string d = detail::cell(delta);
    if (delta && *delta >= 0) d = "+" + d;
    cols[6].values.push_back(d);
  }
  return config_echo(cfg, "# ") + detail::render_columns(cols);
}

/// Tab-separated rows (configuration, series, metrics) for plotting.
inline std::string render_study_tsv(const StudyResult& st, const std::string& first_title) {
  std::ostringstream os;
  os << first_title << "\tseries\tauc_pr\tauc_roc\tvus_pr\tvus_roc\tucr\n";
  for (std::size_t i = 0; i < st.labels.size(); ++i) {
    auto row = [&](const MetricRow& r, const std::string& ucr) {
      os << st.labels[i] << '\t' << r.name << '\t' << detail::exact(r.auc_pr) << '\t' << detail::exact(r.auc_roc)
         << '\t' << detail::exact(r.vus_pr) << '\t' << detail::exact(r.vus_roc) << '\t' << ucr << '\n';
    };
    for (const auto& r : st.reports[i].rows) row(r, detail::cell(r.ucr));
    row(st.reports[i].mean, detail::exact(ucr_mean(st.reports[i].rows)));
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// File output.

inline void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::data, "cannot write '" + path + "'");
    out << content;
    if (!out) fail(ErrorKind::data, "write failed for '" + path + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    fail(ErrorKind::data, "cannot move '" + tmp + "' into place");
  }
}

inline std::string output_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

}  // namespace jure
