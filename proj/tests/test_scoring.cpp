#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "jure/scoring.hpp"
#include "test_support.hpp"

using namespace jure;
using jure::test::random_batch;

namespace {

Batch3<double> column(std::initializer_list<double> v) {
  Batch3<double> b(1, v.size(), 1);
  std::size_t i = 0;
  for (double x : v) b[i++] = x;
  return b;
}

Batch3<double> shifted(const Batch3<double>& x, double c) {
  auto y = x;
  for (auto& v : y.values()) v += c;
  return y;
}

Batch3<double> scaled(const Batch3<double>& x, double k) {
  auto y = x;
  for (auto& v : y.values()) v *= k;
  return y;
}

// Oracles written out longhand, one formula each.

double amp_oracle(const Batch3<double>& x, const Batch3<double>& y) {
  double s = 0.0;
  for (std::size_t t = 0; t < x.steps(); ++t)
    for (std::size_t c = 0; c < x.channels(); ++c) s += std::fabs(x(0, t, c) - y(0, t, c));
  return s / static_cast<double>(x.steps() * x.channels());
}

double trend_oracle(const Batch3<double>& x, const Batch3<double>& y, int k) {
  const int w = static_cast<int>(x.steps());
  const int back = (k - 1) / 2;
  double total = 0.0;
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (int t = 0; t < w; ++t) {
      double a = 0.0, b = 0.0;
      int n = 0;
      for (int i = t - back; i < t - back + k; ++i) {
        if (i < 0 || i >= w) continue;
        a += x(0, static_cast<std::size_t>(i), c);
        b += y(0, static_cast<std::size_t>(i), c);
        ++n;
      }
      total += std::fabs(a / n - b / n);
    }
  }
  return total / static_cast<double>(w * static_cast<int>(x.channels()));
}

double pearson(const Batch3<double>& x, std::size_t i, std::size_t j) {
  const std::size_t n = x.steps();
  double mi = 0, mj = 0;
  for (std::size_t t = 0; t < n; ++t) {
    mi += x(0, t, i);
    mj += x(0, t, j);
  }
  mi /= static_cast<double>(n);
  mj /= static_cast<double>(n);
  double sij = 0, sii = 0, sjj = 0;
  for (std::size_t t = 0; t < n; ++t) {
    sij += (x(0, t, i) - mi) * (x(0, t, j) - mj);
    sii += (x(0, t, i) - mi) * (x(0, t, i) - mi);
    sjj += (x(0, t, j) - mj) * (x(0, t, j) - mj);
  }
  if (sii == 0 || sjj == 0) return 0.0;
  return sij / std::sqrt(sii * sjj);
}

double corr_oracle(const Batch3<double>& x, const Batch3<double>& y) {
  double s = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < x.channels(); ++i) {
    for (std::size_t j = i + 1; j < x.channels(); ++j) {
      const double d = pearson(x, i, j) - pearson(y, i, j);
      s += d * d;
      ++n;
    }
  }
  return n ? std::sqrt(s / n) : 0.0;
}

}  // namespace

TEST(ScoreAmp, Cases) {
  Rng rng(1);
  const auto x = random_batch(1, 30, 3, rng);
  EXPECT_EQ(s_amp(x.window(0), x.window(0)), 0.0);
  EXPECT_NEAR(s_amp(x.window(0), shifted(x, -0.7).window(0)), 0.7, 1e-12);
  const auto y = random_batch(1, 30, 3, rng);
  EXPECT_NEAR(s_amp(x.window(0), y.window(0)), amp_oracle(x, y), 1e-12);
}

TEST(ScoreAmp, ShapeMismatchIsDimensionError) {
  try {
    s_amp(Batch3<double>(1, 4, 2).window(0), Batch3<double>(1, 4, 3).window(0));
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(ScoreDiff, Cases) {
  Rng rng(2);
  const auto x = random_batch(1, 30, 2, rng);
  EXPECT_NEAR(s_diff(x.window(0), shifted(x, 4.0).window(0)), 0.0, 1e-12);
  EXPECT_EQ(s_diff(column({0, 1, 0}).window(0), column({0, 0, 0}).window(0)), 1.0);

  const auto y = random_batch(1, 30, 2, rng);
  const auto dx = first_diff(x), dy = first_diff(y);
  EXPECT_NEAR(s_diff(x.window(0), y.window(0)), amp_oracle(dx, dy), 1e-12);

  try {
    s_diff(column({1}).window(0), column({2}).window(0));
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(ScoreTrend, Cases) {
  Rng rng(3);
  const auto x = random_batch(1, 25, 2, rng);
  const auto y = random_batch(1, 25, 2, rng);
  EXPECT_EQ(s_trend(x.window(0), x.window(0), 10), 0.0);
  EXPECT_EQ(s_trend(x.window(0), y.window(0), 1), s_amp(x.window(0), y.window(0)));
  for (int k : {2, 3, 4, 10, 25}) {
    EXPECT_NEAR(s_trend(x.window(0), y.window(0), static_cast<std::size_t>(k)), trend_oracle(x, y, k), 1e-12)
        << "k = " << k;
  }
}

TEST(ScoreTrend, RampWithStep) {
  Batch3<double> ramp(1, 20, 1), stepped(1, 20, 1);
  for (std::size_t t = 0; t < 20; ++t) {
    ramp[t] = 0.1 * static_cast<double>(t);
    stepped[t] = ramp[t] + (t >= 10 ? 0.8 : 0.0);
  }
  EXPECT_NEAR(s_trend(ramp.window(0), stepped.window(0), 4), trend_oracle(ramp, stepped, 4), 1e-12);
}

TEST(ScoreTrend, WindowLongerThanSeriesIsConfigError) {
  Rng rng(4);
  const auto x = random_batch(1, 8, 1, rng);
  try {
    s_trend(x.window(0), x.window(0), 9);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(ScoreCorr, Cases) {
  Rng rng(5);
  const auto one = random_batch(1, 20, 1, rng);
  EXPECT_EQ(s_corr(one.window(0), random_batch(1, 20, 1, rng).window(0)), 0.0);

  Batch3<double> pos(1, 20, 2), neg(1, 20, 2);
  for (std::size_t t = 0; t < 20; ++t) {
    const double v = std::sin(0.4 * static_cast<double>(t));
    pos(0, t, 0) = v;
    pos(0, t, 1) = 2 * v + 1;
    neg(0, t, 0) = v;
    neg(0, t, 1) = -v;
  }
  EXPECT_NEAR(s_corr(pos.window(0), neg.window(0)), 2.0, 1e-12);

  const auto a = random_batch(1, 40, 3, rng);
  const auto b = random_batch(1, 40, 3, rng);
  EXPECT_NEAR(s_corr(a.window(0), b.window(0)), corr_oracle(a, b), 1e-10);
}

TEST(ScoreCorr, ConstantChannelCorrelatesZero) {
  Rng rng(6);
  auto a = random_batch(1, 30, 3, rng);
  for (std::size_t t = 0; t < 30; ++t) a(0, t, 1) = 2.0;
  const auto b = random_batch(1, 30, 3, rng);
  const double v = s_corr(a.window(0), b.window(0));
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, corr_oracle(a, b), 1e-10);
}

TEST(ScoreWindow, Combination) {
  Rng rng(7);
  const auto x = random_batch(1, 30, 3, rng);
  const auto y = random_batch(1, 30, 3, rng);
  EXPECT_EQ(score_window(x.window(0), x.window(0)), 0.0);

  ScoreWeights amp_only;
  amp_only.diff = amp_only.trend = amp_only.corr = 0.0;
  EXPECT_EQ(score_window(x.window(0), y.window(0), amp_only), s_amp(x.window(0), y.window(0)));

  const double expect = amp_oracle(x, y) + 0.5 * amp_oracle(first_diff(x), first_diff(y)) +
                        0.5 * trend_oracle(x, y, 10) + 0.25 * corr_oracle(x, y);
  EXPECT_NEAR(score_window(x.window(0), y.window(0)), expect, 1e-12);
}

TEST(ScoreWindow, NonNegativeAndSymmetric) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(100 + seed);
    const auto x = random_batch(1, 20, 2, rng, 3.0);
    const auto y = random_batch(1, 20, 2, rng, 3.0);
    const auto a = x.window(0), b = y.window(0);
    EXPECT_GE(s_amp(a, b), 0.0);
    EXPECT_GE(s_diff(a, b), 0.0);
    EXPECT_GE(s_trend(a, b, 10), 0.0);
    EXPECT_GE(s_corr(a, b), 0.0);
    EXPECT_EQ(s_amp(a, b), s_amp(b, a));
    EXPECT_NEAR(s_diff(a, b), s_diff(b, a), 1e-12);
    EXPECT_NEAR(s_trend(a, b, 10), s_trend(b, a, 10), 1e-12);
  }
}

TEST(ScoreWindow, ScaleBehaviour) {
  Rng rng(8);
  const auto x = random_batch(1, 30, 3, rng);
  const auto y = random_batch(1, 30, 3, rng);
  const double k = 2.5;
  const auto xs = scaled(x, k), ys = scaled(y, k);
  EXPECT_NEAR(s_amp(xs.window(0), ys.window(0)), k * s_amp(x.window(0), y.window(0)), 1e-12);
  EXPECT_NEAR(s_diff(xs.window(0), ys.window(0)), k * s_diff(x.window(0), y.window(0)), 1e-12);
  EXPECT_NEAR(s_trend(xs.window(0), ys.window(0), 10), k * s_trend(x.window(0), y.window(0), 10), 1e-12);
  EXPECT_NEAR(s_corr(xs.window(0), ys.window(0)), s_corr(x.window(0), y.window(0)), 1e-12);
}

TEST(ScoreWindow, BrokenCorrelationRaisesOnlyCorrelationTerm) {
  // Channel 1 of the anomalous window is channel 1 of the normal window read
  // in reverse time. Over a whole number of periods this keeps every
  // marginal exactly but turns ρ from +1 into −1.
  const std::size_t w = 40;
  Batch3<double> normal(1, w, 2), broken(1, w, 2);
  for (std::size_t t = 0; t < w; ++t) {
    const double v = std::sin(2 * std::numbers::pi * (static_cast<double>(t) + 0.5) / static_cast<double>(w));
    normal(0, t, 0) = normal(0, t, 1) = v;
  }
  for (std::size_t t = 0; t < w; ++t) {
    broken(0, t, 0) = normal(0, t, 0);
    broken(0, t, 1) = normal(0, w - 1 - t, 1);
  }
  EXPECT_NEAR(pearson(normal, 0, 1), 1.0, 1e-12);
  EXPECT_NEAR(pearson(broken, 0, 1), -1.0, 1e-12);

  // Both repairs copy channel 0 into channel 1, so each has ρ = +1. The
  // normal repair is offset so its amplitude error equals the broken one's.
  Batch3<double> rb(1, w, 2), rn(1, w, 2);
  double gap = 0.0;
  for (std::size_t t = 0; t < w; ++t) gap += std::fabs(broken(0, t, 1) - broken(0, t, 0));
  const double offset = gap / (2.0 * static_cast<double>(w));
  for (std::size_t t = 0; t < w; ++t) {
    rb(0, t, 0) = rb(0, t, 1) = broken(0, t, 0);
    rn(0, t, 0) = rn(0, t, 1) = normal(0, t, 0) + offset;
  }
  EXPECT_NEAR(s_amp(normal.window(0), rn.window(0)), s_amp(broken.window(0), rb.window(0)), 1e-12);
  EXPECT_NEAR(s_corr(normal.window(0), rn.window(0)), 0.0, 1e-12);
  EXPECT_NEAR(s_corr(broken.window(0), rb.window(0)), 2.0, 1e-12);
}

TEST(Normalize, QuartileExample) {
  const auto stats = fit_score_stats({1, 2, 3, 4, 5});
  EXPECT_EQ(stats.median, 3.0);
  EXPECT_EQ(stats.iqr, 2.0);
  const std::vector<double> raw{5.0};
  EXPECT_EQ(normalize_scores(raw, stats)[0], 1.0);
}

TEST(Normalize, ConstantTrainingScoresStayFinite) {
  const auto stats = fit_score_stats({0.4, 0.4, 0.4, 0.4});
  EXPECT_EQ(stats.iqr, 0.0);
  const std::vector<double> raw{0.4, 0.5, 1e3};
  for (double z : normalize_scores(raw, stats)) EXPECT_TRUE(std::isfinite(z));
}

TEST(Normalize, PreservesRanking) {
  Rng rng(9);
  std::vector<double> train(101), raw(200);
  for (auto& v : train) v = rng.uniform(0, 3);
  for (auto& v : raw) v = rng.uniform(-1, 5);
  const auto z = normalize_scores(raw, fit_score_stats(train));
  std::vector<std::size_t> a(raw.size()), b(raw.size());
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), 0);
  std::stable_sort(a.begin(), a.end(), [&](auto i, auto j) { return raw[i] < raw[j]; });
  std::stable_sort(b.begin(), b.end(), [&](auto i, auto j) { return z[i] < z[j]; });
  EXPECT_EQ(a, b);
}
