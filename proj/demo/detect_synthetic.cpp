// Train on a clean synthetic series, score a test series with one injected
// anomaly, and print where the scores peak next to the labelled span.

#include <algorithm>
#include <cstdio>

#include "jure.hpp"

int main(int argc, char** argv) {
  using namespace jure;
  tune_allocator();
  const AnomalyKind kind = parse_anomaly_kind(argc > 1 ? argv[1] : "trend_shift");
  const auto data = generate_synthetic(default_synthetic(kind), 7);

  RunConfig cfg;
  cfg.train.max_epochs = 8;
  cfg.train.train_stride = 5;
  const auto trained = train_model(data.train, cfg);
  std::printf("%s: %zu parameters, best validation loss %.5f at epoch %zu\n", to_string(kind),
              trained.checkpoint.net.parameter_count(), trained.report.best_val_loss, trained.report.best_epoch);

  const auto scored = score_series(trained.checkpoint, data.test, 1, Aggregation::mean);
  const auto& labels = *data.test.labels;
  for (const auto& [lo, hi] : label_spans(labels)) std::printf("labelled span [%zu, %zu)\n", lo, hi);
  const auto peak = std::max_element(scored.points.begin(), scored.points.end()) - scored.points.begin();
  std::printf("highest score %.2f at t = %td\n", scored.points[peak], peak);

  const auto m = evaluate_series({to_string(kind), scored.points, labels}, cfg.vus_buffers);
  std::printf("AUC-ROC %.4f  AUC-PR %.4f  VUS-PR %.4f\n", m.auc_roc.value_or(0), m.auc_pr.value_or(0),
              m.vus_pr.value_or(0));
}
