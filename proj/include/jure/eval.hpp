#pragma once

// Threshold-free detection metrics and the paired Wilcoxon signed-rank test.
// Undefined results (single-class labels, too few pairs) are std::nullopt,
// never a sentinel number.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jure/data.hpp"
#include "jure/error.hpp"

namespace jure {

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b, const char* who) {
  require_dims(a == b, std::string(who) + ": " + std::to_string(a) + " scores vs " +
                           std::to_string(b) + " labels");
}

/// Indices sorted by descending score, stable so ties keep input order.
inline std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

/// Positive mass and negative mass per distinct score, highest score first.
struct ThresholdGroups {
  std::vector<double> pos;
  std::vector<double> neg;
  double total_pos = 0.0;
  double total_neg = 0.0;
};

inline ThresholdGroups group_by_score(std::span<const double> scores,
                                      std::span<const double> weights) {
  ThresholdGroups g;
  const auto idx = descending_order(scores);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const std::size_t i = idx[k];
    if (k == 0 || scores[i] != scores[idx[k - 1]]) {
      g.pos.push_back(0.0);
      g.neg.push_back(0.0);
    }
    g.pos.back() += weights[i];
    g.neg.back() += 1.0 - weights[i];
  }
  for (std::size_t k = 0; k < g.pos.size(); ++k) {
    g.total_pos += g.pos[k];
    g.total_neg += g.neg[k];
  }
  return g;
}

inline std::vector<double> as_weights(std::span<const int> labels) {
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require_dims(labels[i] == 0 || labels[i] == 1, "labels must be 0 or 1");
    w[i] = static_cast<double>(labels[i]);
  }
  return w;
}

}  // namespace detail

/// ROC area for soft labels in [0, 1]: each point contributes `w` positive
/// and `1 − w` negative mass. Equal scores form one threshold step, which is
/// the same as counting tied positive/negative pairs as one half.
inline std::optional<double> auc_roc_weighted(std::span<const double> scores,
                                              std::span<const double> weights) {
  detail::require_same_length(scores.size(), weights.size(), "auc_roc");
  const auto g = detail::group_by_score(scores, weights);
  if (g.total_pos <= 0.0 || g.total_neg <= 0.0) return std::nullopt;
  // Twice the (tie-halved) count of correctly ordered positive/negative pairs.
  double pairs2 = 0.0;
  double pos_above = 0.0;
  for (std::size_t k = 0; k < g.pos.size(); ++k) {
    pairs2 += g.neg[k] * (2.0 * pos_above + g.pos[k]);
    pos_above += g.pos[k];
  }
  return pairs2 / (2.0 * g.total_pos * g.total_neg);
}

/// Average precision for soft labels: Σ_k (R_k − R_{k−1}) · P_k over
/// descending distinct thresholds.
inline std::optional<double> auc_pr_weighted(std::span<const double> scores,
                                             std::span<const double> weights) {
  detail::require_same_length(scores.size(), weights.size(), "auc_pr");
  const auto g = detail::group_by_score(scores, weights);
  if (g.total_pos <= 0.0) return std::nullopt;
  double ap = 0.0;
  double tp = 0.0;
  double fp = 0.0;
  double recall_prev = 0.0;
  for (std::size_t k = 0; k < g.pos.size(); ++k) {
    tp += g.pos[k];
    fp += g.neg[k];
    if (g.pos[k] == 0.0) continue;
    const double recall = tp / g.total_pos;
    ap += (recall - recall_prev) * (tp / (tp + fp));
    recall_prev = recall;
  }
  return ap;
}

inline std::optional<double> auc_roc(std::span<const double> scores, std::span<const int> labels) {
  detail::require_same_length(scores.size(), labels.size(), "auc_roc");
  return auc_roc_weighted(scores, detail::as_weights(labels));
}

inline std::optional<double> auc_pr(std::span<const double> scores, std::span<const int> labels) {
  detail::require_same_length(scores.size(), labels.size(), "auc_pr");
  return auc_pr_weighted(scores, detail::as_weights(labels));
}

// ---------------------------------------------------------------------------
// Volume under the surface.

enum class VusMode { pr, roc };

inline std::vector<std::size_t> default_vus_buffers() {
  std::vector<std::size_t> b;
  for (std::size_t l = 0; l <= 100; l += 10) b.push_back(l);
  return b;
}

/// Labels dilated by `buffer`/2 timesteps on each side of every anomaly
/// range, with weight decaying linearly from 1 at the range to 0 just past
/// the buffer: a point at distance d gets 1 − d/(h+1), h = buffer/2.
inline std::vector<double> dilate_labels(std::span<const int> labels, std::size_t buffer) {
  auto w = detail::as_weights(labels);
  const std::size_t half = buffer / 2;
  if (half == 0) return w;
  const double denom = static_cast<double>(half + 1);
  for (const auto& [lo, hi] : label_spans(labels)) {
    for (std::size_t d = 1; d <= half; ++d) {
      const double v = 1.0 - static_cast<double>(d) / denom;
      if (lo >= d) w[lo - d] = std::max(w[lo - d], v);
      if (hi + d < w.size()) w[hi + d] = std::max(w[hi + d], v);
    }
  }
  return w;
}

inline std::optional<double> vus_single(std::span<const double> scores, std::span<const int> labels,
                                        VusMode mode, std::size_t buffer) {
  detail::require_same_length(scores.size(), labels.size(), "vus");
  const auto w = dilate_labels(labels, buffer);
  return mode == VusMode::pr ? auc_pr_weighted(scores, w) : auc_roc_weighted(scores, w);
}

/// Mean over `buffers` of the soft-label AUC. Undefined if any buffer is.
inline std::optional<double> vus(std::span<const double> scores, std::span<const int> labels,
                                 VusMode mode,
                                 std::span<const std::size_t> buffers) {
  require_config(!buffers.empty(), "vus: empty buffer set");
  double sum = 0.0;
  for (std::size_t l : buffers) {
    const auto v = vus_single(scores, labels, mode, l);
    if (!v) return std::nullopt;
    sum += *v;
  }
  return sum / static_cast<double>(buffers.size());
}

// ---------------------------------------------------------------------------
// UCR score.

inline constexpr std::size_t kUcrTolerance = 100;

/// 1 if the earliest maximum lies within the single labelled span widened by
/// `tolerance` on both sides, else 0. Undefined unless exactly one span.
inline std::optional<int> ucr_hit(std::span<const double> scores, std::span<const int> labels,
                                  std::size_t tolerance = kUcrTolerance) {
  detail::require_same_length(scores.size(), labels.size(), "ucr_score");
  const auto spans = label_spans(labels);
  if (spans.size() != 1 || scores.empty()) return std::nullopt;
  const auto peak = static_cast<std::size_t>(
      std::max_element(scores.begin(), scores.end()) - scores.begin());
  const auto [lo, hi] = spans.front();
  const std::size_t from = lo >= tolerance ? lo - tolerance : 0;
  return (peak >= from && peak <= hi + tolerance) ? 1 : 0;
}

struct UcrSummary {
  std::optional<double> score;         // mean over defined series
  std::vector<std::optional<int>> hits;
  std::size_t excluded = 0;
};

struct LabeledScores {
  std::string name;
  std::vector<double> scores;
  std::vector<int> labels;
};

inline UcrSummary ucr_score(std::span<const LabeledScores> series,
                            std::size_t tolerance = kUcrTolerance) {
  UcrSummary s;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& ls : series) {
    const auto h = ucr_hit(ls.scores, ls.labels, tolerance);
    s.hits.push_back(h);
    if (!h) {
      ++s.excluded;
      continue;
    }
    sum += *h;
    ++n;
  }
  if (n > 0) s.score = sum / static_cast<double>(n);
  return s;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test.

inline constexpr std::size_t kWilcoxonExactMax = 25;
inline constexpr std::size_t kWilcoxonMinPairs = 5;

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W−)
  double w_plus = 0.0;
  double p_value = 1.0;    // two-sided
  bool exact = true;
  std::size_t n = 0;       // pairs after dropping zero differences
  std::size_t wins = 0;    // a > b
  std::size_t losses = 0;  // a < b
  double win_rate = 0.0;   // wins / all pairs
};

/// Average ranks (1-based) of |d|, returned doubled so they stay integral.
inline std::vector<std::uint64_t> doubled_abs_ranks(std::span<const double> diffs) {
  std::vector<std::size_t> idx(diffs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });
  std::vector<std::uint64_t> r2(diffs.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && std::abs(diffs[idx[j + 1]]) == std::abs(diffs[idx[i]])) ++j;
    // Ranks i+1..j+1 share their mean (i+j+2)/2; doubled: i+j+2.
    for (std::size_t k = i; k <= j; ++k) r2[idx[k]] = i + j + 2;
    i = j + 1;
  }
  return r2;
}

inline std::optional<WilcoxonResult> wilcoxon_signed_rank(std::span<const double> a,
                                                          std::span<const double> b) {
  require_dims(a.size() == b.size(), "wilcoxon: vectors differ in length");
  WilcoxonResult r;
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) ++r.wins;
    if (a[i] < b[i]) ++r.losses;
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  r.win_rate = a.empty() ? 0.0 : static_cast<double>(r.wins) / static_cast<double>(a.size());
  r.n = d.size();
  if (r.n < kWilcoxonMinPairs) return std::nullopt;

  const auto r2 = doubled_abs_ranks(d);
  std::uint64_t wplus2 = 0;
  std::uint64_t total2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    total2 += r2[i];
    if (d[i] > 0) wplus2 += r2[i];
  }
  r.w_plus = static_cast<double>(wplus2) / 2.0;
  r.statistic = static_cast<double>(std::min(wplus2, total2 - wplus2)) / 2.0;

  if (r.n <= kWilcoxonExactMax) {
    // Null distribution of 2·W+ over all 2^n sign assignments.
    std::vector<double> count(total2 + 1, 0.0);
    count[0] = 1.0;
    std::uint64_t reach = 0;
    for (const auto rank : r2) {
      for (std::uint64_t s = reach + 1; s-- > 0;) {
        if (count[s] != 0.0) count[s + rank] += count[s];
      }
      reach += rank;
    }
    double lower = 0.0;
    double upper = 0.0;
    for (std::uint64_t s = 0; s <= total2; ++s) {
      if (s <= wplus2) lower += count[s];
      if (s >= wplus2) upper += count[s];
    }
    const double all = std::ldexp(1.0, static_cast<int>(r.n));
    r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
    r.exact = true;
  } else {
    const double n = static_cast<double>(r.n);
    const double mean = n * (n + 1.0) / 4.0;
    double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    // Tie correction from the group sizes of |d|.
    std::vector<std::uint64_t> sorted = r2;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      var -= (t * t * t - t) / 48.0;
      i = j;
    }
    const double z = std::max(0.0, std::abs(r.w_plus - mean) - 0.5) / std::sqrt(var);
    r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    r.exact = false;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Per-series report.

struct MetricRow {
  std::string name;
  std::optional<double> auc_pr;
  std::optional<double> auc_roc;
  std::optional<double> vus_pr;
  std::optional<double> vus_roc;
  std::optional<int> ucr;
};

inline MetricRow evaluate_series(const LabeledScores& ls, std::span<const std::size_t> buffers) {
  detail::require_same_length(ls.scores.size(), ls.labels.size(), ls.name.c_str());
  MetricRow row;
  row.name = ls.name;
  row.auc_pr = auc_pr(ls.scores, ls.labels);
  row.auc_roc = auc_roc(ls.scores, ls.labels);
  row.vus_pr = vus(ls.scores, ls.labels, VusMode::pr, buffers);
  row.vus_roc = vus(ls.scores, ls.labels, VusMode::roc, buffers);
  row.ucr = ucr_hit(ls.scores, ls.labels);
  return row;
}

/// Mean over the rows where the metric is defined.
template <class Get>
std::optional<double> mean_defined(std::span<const MetricRow> rows, Get get) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    const auto v = get(r);
    if (!v) continue;
    sum += static_cast<double>(*v);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace jure
