#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "jure/training.hpp"
#include "test_support.hpp"

using namespace jure;
using jure::test::random_batch;

namespace {

TimeSeries make_series(std::size_t length, std::size_t channels, double (*f)(std::size_t, std::size_t)) {
  TimeSeries s;
  s.values = Matrix<double>(length, channels);
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t c = 0; c < channels; ++c) s.values(t, c) = f(t, c);
  return s;
}

double wave(std::size_t t, std::size_t c) {
  return std::sin(0.3 * static_cast<double>(t) + static_cast<double>(c));
}

ModelOptions small_model() {
  ModelOptions m;
  m.window = 16;
  m.hidden = 8;
  return m;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.max_epochs = 4;
  c.batch_size = 32;
  c.train_stride = 2;
  return c;
}

Batch3<double> single(std::initializer_list<double> v) {
  Batch3<double> b(1, v.size(), 1);
  std::size_t i = 0;
  for (double x : v) b[i++] = x;
  return b;
}

}  // namespace

TEST(Corrupt, NoNoiseNoMaskIsIdentity) {
  Rng data(1), rng(2);
  const auto x = random_batch(4, 10, 3, data);
  EXPECT_EQ(corrupt(x, 0.0, 0.0, rng), x);
  EXPECT_EQ(rng.position(), 0u);
}

TEST(Corrupt, FullMaskZeroesEverythingAfterNoise) {
  Rng data(3), rng(4);
  const auto x = random_batch(4, 10, 3, data);
  const auto y = corrupt(x, 0.5, 1.0, rng);
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Corrupt, NoiseMomentsWithinMonteCarloBounds) {
  Rng data(5), rng(6);
  const auto x = random_batch(100, 100, 10, data);
  const auto y = corrupt(x, 0.1, 0.0, rng);
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = y[i] - x[i];
    sum += d;
    sq += d * d;
  }
  const double n = static_cast<double>(x.size());
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 0.002);
  EXPECT_NEAR(sd, 0.1, 0.003);
}

TEST(Corrupt, MaskCoversWholeChannelsOnly) {
  Rng data(7), rng(8);
  const auto x = random_batch(200, 12, 3, data);
  const auto y = corrupt(x, 0.0, 0.3, rng);
  std::size_t masked = 0;
  for (std::size_t b = 0; b < 200; ++b) {
    for (std::size_t c = 0; c < 3; ++c) {
      std::size_t zeros = 0;
      for (std::size_t t = 0; t < 12; ++t) zeros += y(b, t, c) == 0.0;
      EXPECT_TRUE(zeros == 0 || zeros == 12);
      if (zeros == 12) {
        ++masked;
      } else {
        for (std::size_t t = 0; t < 12; ++t) EXPECT_EQ(y(b, t, c), x(b, t, c));
      }
    }
  }
  // 600 Bernoulli(0.3) draws: mean 180, sd ≈ 11.2.
  EXPECT_GT(masked, 130u);
  EXPECT_LT(masked, 230u);
}

TEST(Corrupt, InputIsNotModified) {
  Rng data(9), rng(10);
  const auto x = random_batch(2, 8, 2, data);
  const auto keep = x;
  corrupt(x, 0.3, 0.5, rng);
  EXPECT_EQ(x, keep);
}

TEST(RepairLoss, ExactRepairHasZeroLossAndGradient) {
  Rng rng(11);
  const auto x = random_batch(3, 9, 2, rng);
  const auto r = repair_loss(x, x, 0.25);
  EXPECT_EQ(r.value, 0.0);
  for (double v : r.grad.values()) EXPECT_EQ(v, 0.0);
}

TEST(RepairLoss, HandComputedExample) {
  const auto r = repair_loss(single({0, 0, 0}), single({0, 1, 0}), 0.25);
  // Amplitude term 0.5/3; difference term (0.5 + 0.5)/2 weighted by 0.25.
  const double amp = 0.5 / 3.0;
  const double diff = (0.5 + 0.5) / 2.0;
  EXPECT_NEAR(r.value, amp + 0.25 * diff, 1e-15);
  EXPECT_NEAR(r.value, 0.2916666666666667, 1e-15);
}

TEST(RepairLoss, ZeroLambdaIsPlainHuber) {
  Rng rng(12);
  const auto a = random_batch(2, 7, 3, rng, 3.0);
  const auto b = random_batch(2, 7, 3, rng, 3.0);
  const auto r = repair_loss(a, b, 0.0);
  EXPECT_EQ(r.value, huber(a, b));
  EXPECT_EQ(r.grad, huber_backward(a, b));
}

TEST(RepairLoss, ShapeErrors) {
  try {
    repair_loss(Batch3<double>(1, 4, 1), Batch3<double>(1, 5, 1), 0.25);
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
  EXPECT_THROW(repair_loss(Batch3<double>(1, 1, 1), Batch3<double>(1, 1, 1), 0.25), Error);
}

TEST(TrainConfigValidation, RejectsOutOfRangeValues) {
  auto expect_config_error = [](TrainConfig c) {
    try {
      validate(c);
      FAIL() << "expected a config error";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config);
    }
  };
  TrainConfig c;
  c.sigma = -0.1;
  expect_config_error(c);
  c = {};
  c.mask_p = 1.5;
  expect_config_error(c);
  c = {};
  c.val_fraction = 1.0;
  expect_config_error(c);
  c = {};
  c.patience = 0;
  expect_config_error(c);
}

TEST(Train, ZeroEpochsReturnsIdentity) {
  const auto s = make_series(200, 2, wave);
  auto cfg = quick_config();
  cfg.max_epochs = 0;
  const auto r = train(s, cfg, small_model());
  EXPECT_EQ(r.report.stopped_epoch, 0u);
  EXPECT_EQ(r.report.best_epoch, 0u);
  Rng rng(13);
  const auto x = random_batch(2, 16, 2, rng);
  EXPECT_EQ(r.net.forward(x), x);
  EXPECT_TRUE(std::isfinite(r.score_stats.median));
  EXPECT_TRUE(std::isfinite(r.score_stats.iqr));
}

TEST(Train, DenoisesConstantSeries) {
  const auto s = make_series(400, 1, [](std::size_t, std::size_t) { return 0.5; });
  auto cfg = quick_config();
  cfg.max_epochs = 15;
  cfg.mask_p = 0.0;
  cfg.train_stride = 1;
  const auto r = train(s, cfg, small_model());
  ASSERT_FALSE(r.report.val_loss.empty());
  EXPECT_LT(r.report.best_val_loss, r.report.initial_val_loss);
  EXPECT_LT(r.report.val_loss.front(), r.report.initial_val_loss);

  Rng rng(14);
  const Batch3<double> clean(64, 16, 1, 0.5);
  const auto noisy = corrupt(clean, 0.1, 0.0, rng);
  const auto rep = r.net.forward(noisy);
  double repair_err = 0.0, noise_err = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    repair_err += std::abs(rep[i] - clean[i]);
    noise_err += std::abs(noisy[i] - clean[i]);
  }
  EXPECT_LT(repair_err, noise_err);
}

TEST(Train, FixedSeedIsBitIdentical) {
  const auto s = make_series(200, 2, wave);
  auto cfg = quick_config();
  cfg.seed = 17;
  const auto a = train(s, cfg, small_model());
  const auto b = train(s, cfg, small_model());
  EXPECT_EQ(a.report.initial_val_loss, b.report.initial_val_loss);
  EXPECT_EQ(a.report.train_loss, b.report.train_loss);
  EXPECT_EQ(a.report.val_loss, b.report.val_loss);
  EXPECT_EQ(a.report.rng_position, b.report.rng_position);
  EXPECT_EQ(a.report.stopped_epoch, b.report.stopped_epoch);
  EXPECT_EQ(a.report.best_epoch, b.report.best_epoch);
  EXPECT_EQ(a.score_stats, b.score_stats);
  const auto pa = a.net.parameters(), pb = b.net.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);

  cfg.seed = 18;
  const auto c = train(s, cfg, small_model());
  EXPECT_NE(a.report.train_loss, c.report.train_loss);
}

TEST(Train, EarlyStoppingRespectsPatience) {
  const auto s = make_series(300, 1, wave);
  for (std::size_t patience : {1u, 2u, 3u}) {
    auto cfg = quick_config();
    cfg.max_epochs = 40;
    cfg.patience = patience;
    cfg.lr = 0.05;  // noisy optimization so validation loss plateaus early
    const auto r = train(s, cfg, small_model());
    EXPECT_LE(r.report.stopped_epoch - r.report.best_epoch, patience);
    double best = r.report.initial_val_loss;
    for (double v : r.report.val_loss) best = std::min(best, v);
    EXPECT_EQ(r.report.best_val_loss, best);
    if (r.report.stopped_epoch < cfg.max_epochs) {
      EXPECT_EQ(r.report.stopped_epoch - r.report.best_epoch, patience);
    }
  }
}

TEST(Train, ValidationSplitIsChronologicalTail) {
  const auto s = make_series(200, 1, wave);
  auto cfg = quick_config();
  cfg.max_epochs = 1;
  cfg.train_stride = 1;
  const auto r = train(s, cfg, small_model());
  const std::size_t n = 200 - 16 + 1;
  EXPECT_EQ(r.report.train_windows + r.report.val_windows, n);
  EXPECT_EQ(r.report.val_windows, static_cast<std::size_t>(std::floor(0.2 * n)));
}

TEST(Train, CorruptionIsResampledEachEpoch) {
  const auto s = make_series(200, 2, wave);
  auto cfg = quick_config();
  cfg.patience = 10;
  const auto r = train(s, cfg, small_model());
  ASSERT_GE(r.report.rng_position.size(), 2u);
  for (std::size_t i = 1; i < r.report.rng_position.size(); ++i) {
    EXPECT_GT(r.report.rng_position[i], r.report.rng_position[i - 1]);
  }
}

TEST(Train, CleanObjectiveKeepsOutputProjectionZero) {
  const auto s = make_series(200, 2, wave);
  auto cfg = quick_config();
  cfg.sigma = 0.0;
  cfg.mask_p = 0.0;
  cfg.patience = 10;
  const auto r = train(s, cfg, small_model());
  EXPECT_EQ(r.report.initial_val_loss, 0.0);
  for (double v : r.report.train_loss) EXPECT_EQ(v, 0.0);
  for (double v : r.net.proj_out().weight.value.values()) EXPECT_EQ(v, 0.0);
  for (double v : r.net.proj_out().bias.value.values()) EXPECT_EQ(v, 0.0);
}

TEST(Train, TooShortSeriesIsConfigError) {
  const auto s = make_series(16, 1, wave);
  try {
    train(s, quick_config(), small_model());
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(Train, NonFiniteDataIsNumericError) {
  auto s = make_series(200, 1, wave);
  s.values(190, 0) = std::numeric_limits<double>::infinity();
  try {
    train(s, quick_config(), small_model());
    FAIL() << "expected a numeric error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
  }
}

TEST(Train, SinglePrecisionTracksDouble) {
  const auto s = make_series(200, 2, wave);
  auto cfg = quick_config();
  const auto d = train<double>(s, cfg, small_model());
  const auto f = train<float>(s, cfg, small_model());
  ASSERT_EQ(d.report.val_loss.size(), f.report.val_loss.size());
  for (std::size_t i = 0; i < d.report.val_loss.size(); ++i) {
    EXPECT_NEAR(d.report.val_loss[i], f.report.val_loss[i], 1e-3 * (1 + d.report.val_loss[i]));
  }
}
