// jure: train, score, evaluate, ablate and sweep from the command line.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
// failure, 1 anything else.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "jure.hpp"

namespace {

using namespace jure;

struct Overrides {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> values;  // key, raw text
  std::vector<std::pair<std::string, CLI::Option*>> options;
};

/// Registers --config plus one option per configuration key.
void add_config_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  const auto keys = config_keys();
  o.values.resize(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    o.values[i].first = keys[i];
    RunConfig defaults;
    auto* opt = cmd->add_option("--" + keys[i], o.values[i].second,
                                "default: " + get_config_value(defaults, keys[i]));
    o.options.emplace_back(keys[i], opt);
  }
}

/// File first, then flags.
RunConfig resolve(const Overrides& o) {
  RunConfig cfg;
  if (!o.config_file.empty()) apply_config_file(cfg, o.config_file);
  for (std::size_t i = 0; i < o.options.size(); ++i) {
    if (o.options[i].second->count() > 0) set_config_value(cfg, o.values[i].first, o.values[i].second);
  }
  validate(cfg);
  return cfg;
}

std::string scores_path(const RunConfig& cfg) {
  return cfg.scores_file.empty() ? output_path(cfg, "scores.csv") : cfg.scores_file;
}

TimeSeries load_required(const std::string& path, const char* what, const CsvOptions& opts) {
  require_config(!path.empty(), std::string(what) + " is required");
  return load_csv(path, opts);
}

int cmd_train(const RunConfig& cfg) {
  auto series = load_required(cfg.train_file, "train-file", cfg.csv_options());
  series.labels.reset();
  const auto t = train_model(series, cfg);
  save_checkpoint(cfg.checkpoint, t.checkpoint);
  const auto report = output_path(cfg, "train_report.txt");
  write_text_file(report, render_train_table(t, cfg));
  write_text_file(output_path(cfg, "train_report.kv"), render_train_report(t, cfg));
  std::printf("parameters %zu  epochs %zu  best epoch %zu  best val loss %.6g  (%.1f s)\n",
              t.checkpoint.net.parameter_count(), t.report.stopped_epoch, t.report.best_epoch,
              t.report.best_val_loss, t.report.seconds);
  std::printf("checkpoint %s\nreport %s\n", cfg.checkpoint.c_str(), report.c_str());
  return 0;
}

int cmd_score(const RunConfig& cfg) {
  const auto ck = load_checkpoint(cfg.checkpoint);
  auto series = load_required(cfg.test_file, "test-file", cfg.csv_options());
  const auto s = score_series(ck, series, cfg.infer_stride, cfg.aggregation);
  const auto path = scores_path(cfg);
  write_text_file(path, render_scores(s.points));
  write_text_file(path + ".config", render_scores_config(cfg, ck.config));
  const double secs = std::max(s.seconds, 1e-9);
  std::printf("scored %zu windows, %zu points in %.3f s (%.0f windows/s)\n", s.starts.size(), s.points.size(),
              s.seconds, static_cast<double>(s.starts.size()) / secs);
  std::printf("scores %s\n", path.c_str());
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  const auto metrics = parse_metric_set(cfg.metrics);
  const auto scores = read_scores(scores_path(cfg));
  auto series = load_required(cfg.test_file, "test-file", cfg.csv_options());
  require_config(series.labels.has_value(), "test file '" + cfg.test_file + "' has no labels; set label-column");
  require_config(scores.size() == series.length(), "length mismatch: " + std::to_string(scores.size()) +
                                                       " scores vs " + std::to_string(series.length()) +
                                                       " labelled rows");
  const std::string name = std::filesystem::path(cfg.test_file).stem().string();
  const auto report = evaluate_scores({{name, scores, *series.labels}}, cfg.vus_buffers);
  const auto table = render_metric_table(report, metrics, cfg);
  write_text_file(output_path(cfg, "metrics.txt"), table);
  write_text_file(output_path(cfg, "metrics.kv"), render_metric_kv(report, metrics, cfg));
  std::fputs(table.substr(config_echo(cfg, "# ").size()).c_str(), stdout);
  return 0;
}

Progress stderr_progress() {
  return [](const std::string& label, const std::string& task) {
    std::fprintf(stderr, "[%s] %s\n", label.c_str(), task.c_str());
  };
}

int run_and_write(const RunConfig& cfg, const std::vector<std::pair<std::string, RunConfig>>& configs,
                  const std::string& title, const std::string& stem) {
  const auto tasks = study_suite(cfg);
  const auto st = run_study(configs, tasks, stderr_progress());
  const auto table = render_study_table(st, title, cfg);
  write_text_file(output_path(cfg, stem + ".txt"), table);
  write_text_file(output_path(cfg, stem + ".tsv"), render_study_tsv(st, title));
  std::fputs(table.substr(config_echo(cfg, "# ").size()).c_str(), stdout);
  return 0;
}

int cmd_ablate(const RunConfig& cfg) { return run_and_write(cfg, ablation_configs(cfg), "variant", "ablation"); }

int cmd_sweep(const RunConfig& cfg) { return run_and_write(cfg, sweep_configs(cfg), cfg.sweep_axis, "sweep"); }

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::config:
    case ErrorKind::dimension: return 2;
    case ErrorKind::data:
    case ErrorKind::load: return 3;
    case ErrorKind::numeric: return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"jure: denoise-and-repair time-series anomaly detection"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
  };
  const std::vector<Command> commands{
      {"train", "fit a repair network and write a checkpoint", cmd_train},
      {"score", "write per-timestep anomaly scores for test-file", cmd_score},
      {"eval", "compute metrics of a score file against test-file labels", cmd_eval},
      {"ablate", "compare ablation variants against the full model", cmd_ablate},
      {"sweep", "evaluate one hyperparameter over a list of values", cmd_sweep},
  };
  std::vector<Overrides> overrides(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto* sub = app.add_subcommand(commands[i].name, commands[i].help);
    add_config_options(sub, overrides[i]);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    for (std::size_t i = 0; i < commands.size(); ++i) {
      if (subs[i]->parsed()) return commands[i].run(resolve(overrides[i]));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "jure: %s: %s\n", to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "jure: %s\n", e.what());
    return 1;
  }
  return 1;
}
