#pragma once

// Parameter-free structural discrepancy between a window and its repair:
//
//   s = w_amp·s_amp + w_diff·s_diff + w_trend·s_trend + w_corr·s_corr
//
// with defaults (1, 1/2, 1/2, 1/4).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "jure/error.hpp"
#include "jure/numerics.hpp"

namespace jure {

struct ScoreWeights {
  double amp = 1.0;
  double diff = 0.5;
  double trend = 0.5;
  double corr = 0.25;
  std::size_t trend_window = 10;

  friend bool operator==(const ScoreWeights&, const ScoreWeights&) = default;
};

inline void validate(const ScoreWeights& w) {
  require_config(w.amp >= 0 && w.diff >= 0 && w.trend >= 0 && w.corr >= 0,
                 "score weights must be non-negative");
  require_config(w.trend_window >= 1, "trend window must be >= 1");
}

/// Median and IQR of the raw training-window scores.
struct ScoreStats {
  double median = 0.0;
  double iqr = 0.0;

  friend bool operator==(const ScoreStats&, const ScoreStats&) = default;
};

inline constexpr double kNormalizeEps = 1e-9;

namespace detail {

template <class T>
void require_same_window(const WindowView<T>& x, const WindowView<T>& xhat,
                         const char* who) {
  require_dims(x.steps == xhat.steps && x.channels == xhat.channels,
               std::string(who) + ": window shapes differ (" +
                   std::to_string(x.steps) + "x" + std::to_string(x.channels) +
                   " vs " + std::to_string(xhat.steps) + "x" +
                   std::to_string(xhat.channels) + ")");
  require_dims(x.steps > 0 && x.channels > 0, std::string(who) + ": empty window");
}

/// Truncated centered moving average of one channel at timestep t.
template <class T>
T moving_average(const WindowView<T>& x, std::size_t t, std::size_t c,
                 std::size_t span) {
  const std::size_t back = (span - 1) / 2;
  const std::size_t lo = t >= back ? t - back : 0;
  const std::size_t hi = std::min(t + span - back, x.steps);  // exclusive
  T sum{0};
  for (std::size_t i = lo; i < hi; ++i) sum += x(i, c);
  return sum / static_cast<T>(hi - lo);
}

/// Pearson correlation matrix (strict upper triangle, row-major order).
/// Channels with zero variance correlate 0 with everything.
template <class T>
std::vector<T> upper_correlations(const WindowView<T>& x) {
  const std::size_t n = x.steps;
  const std::size_t ch = x.channels;
  std::vector<T> mean(ch, T(0));
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t c = 0; c < ch; ++c) mean[c] += x(t, c);
  for (auto& m : mean) m /= static_cast<T>(n);

  std::vector<T> cov(ch * ch, T(0));
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < ch; ++i) {
      const T di = x(t, i) - mean[i];
      for (std::size_t j = i; j < ch; ++j) cov[i * ch + j] += di * (x(t, j) - mean[j]);
    }
  }
  std::vector<T> rho;
  rho.reserve(ch * (ch - 1) / 2);
  for (std::size_t i = 0; i < ch; ++i) {
    for (std::size_t j = i + 1; j < ch; ++j) {
      const T vi = cov[i * ch + i];
      const T vj = cov[j * ch + j];
      if (vi <= T(0) || vj <= T(0)) {
        rho.push_back(T(0));
      } else {
        rho.push_back(std::clamp(cov[i * ch + j] / std::sqrt(vi * vj), T(-1), T(1)));
      }
    }
  }
  return rho;
}

}  // namespace detail

/// Mean absolute amplitude error.
template <class T>
T s_amp(const WindowView<T>& x, const WindowView<T>& xhat) {
  detail::require_same_window(x, xhat, "s_amp");
  T sum{0};
  for (std::size_t i = 0; i < x.data.size(); ++i) sum += std::abs(x.data[i] - xhat.data[i]);
  return sum / static_cast<T>(x.data.size());
}

/// Mean absolute first-difference error.
template <class T>
T s_diff(const WindowView<T>& x, const WindowView<T>& xhat) {
  detail::require_same_window(x, xhat, "s_diff");
  require_dims(x.steps >= 2, "s_diff: window needs at least 2 timesteps");
  T sum{0};
  for (std::size_t t = 0; t + 1 < x.steps; ++t) {
    for (std::size_t c = 0; c < x.channels; ++c) {
      const T dx = x(t + 1, c) - x(t, c);
      const T dh = xhat(t + 1, c) - xhat(t, c);
      sum += std::abs(dx - dh);
    }
  }
  return sum / static_cast<T>((x.steps - 1) * x.channels);
}

/// Mean absolute difference between centered moving-average trends.
template <class T>
T s_trend(const WindowView<T>& x, const WindowView<T>& xhat, std::size_t trend_window) {
  detail::require_same_window(x, xhat, "s_trend");
  require_config(trend_window >= 1 && trend_window <= x.steps,
                 "s_trend: trend window " + std::to_string(trend_window) +
                     " must lie in [1, " + std::to_string(x.steps) + "]");
  T sum{0};
  for (std::size_t t = 0; t < x.steps; ++t) {
    for (std::size_t c = 0; c < x.channels; ++c) {
      const T a = detail::moving_average(x, t, c, trend_window);
      const T b = detail::moving_average(xhat, t, c, trend_window);
      sum += std::abs(a - b);
    }
  }
  return sum / static_cast<T>(x.steps * x.channels);
}

/// RMS change of the upper-triangular Pearson correlation matrix.
template <class T>
T s_corr(const WindowView<T>& x, const WindowView<T>& xhat) {
  detail::require_same_window(x, xhat, "s_corr");
  if (x.channels < 2) return T(0);
  const auto rx = detail::upper_correlations(x);
  const auto rh = detail::upper_correlations(xhat);
  T sum{0};
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const T d = rx[i] - rh[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<T>(rx.size()));
}

template <class T>
T score_window(const WindowView<T>& x, const WindowView<T>& xhat,
               const ScoreWeights& w = {}) {
  T total = static_cast<T>(w.amp) * s_amp(x, xhat);
  // Zero-weighted terms are skipped, not evaluated.
  if (w.diff != 0) total += static_cast<T>(w.diff) * s_diff(x, xhat);
  if (w.trend != 0) total += static_cast<T>(w.trend) * s_trend(x, xhat, w.trend_window);
  if (w.corr != 0) total += static_cast<T>(w.corr) * s_corr(x, xhat);
  return total;
}

/// Raw score of every window in a batch against its repair.
template <class T>
std::vector<double> score_batch(const Batch3<T>& x, const Batch3<T>& repair,
                                const ScoreWeights& w = {}) {
  require_dims(x.same_shape(repair), "score_batch: shape mismatch");
  std::vector<double> out(x.batch());
  for (std::size_t b = 0; b < x.batch(); ++b) {
    out[b] = static_cast<double>(score_window(x.window(b), repair.window(b), w));
  }
  return out;
}

/// Quantile with linear interpolation between order statistics
/// (position q·(n−1) in the sorted sample).
inline double quantile(std::vector<double> values, double q) {
  require_dims(!values.empty(), "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

inline ScoreStats fit_score_stats(const std::vector<double>& raw) {
  return {quantile(raw, 0.5), quantile(raw, 0.75) - quantile(raw, 0.25)};
}

inline std::vector<double> normalize_scores(std::span<const double> raw,
                                            const ScoreStats& stats) {
  const double scale = std::max(stats.iqr, kNormalizeEps);
  std::vector<double> z(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) z[i] = (raw[i] - stats.median) / scale;
  return z;
}

}  // namespace jure
