#pragma once

// Corruption, the amplitude + first-difference Huber objective, and the
// AdamW training loop with a chronological validation split and early
// stopping.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "jure/data.hpp"
#include "jure/error.hpp"
#include "jure/model.hpp"
#include "jure/numerics.hpp"
#include "jure/random.hpp"
#include "jure/scoring.hpp"

namespace jure {

struct TrainConfig {
  double sigma = 0.1;         // additive Gaussian noise scale
  double mask_p = 0.05;       // per (window, channel) masking probability
  double lambda_diff = 0.25;  // weight of the first-difference Huber term
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 30;
  std::size_t patience = 3;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
  std::size_t train_stride = 1;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline void validate(const TrainConfig& c) {
  require_config(c.sigma >= 0, "sigma must be >= 0");
  require_config(c.mask_p >= 0 && c.mask_p <= 1, "mask_p must lie in [0, 1]");
  require_config(c.lambda_diff >= 0, "lambda_diff must be >= 0");
  require_config(c.val_fraction > 0 && c.val_fraction < 1, "val_fraction must lie in (0, 1)");
  require_config(c.patience >= 1, "patience must be >= 1");
  require_config(c.batch_size >= 1, "batch_size must be >= 1");
  require_config(c.train_stride >= 1, "train_stride must be >= 1");
  require_config(c.lr > 0, "lr must be positive");
  require_config(c.weight_decay >= 0, "weight_decay must be >= 0");
}

/// Noise first, then masking, so masked channels read exactly zero. The
/// input batch is not modified.
template <class T>
Batch3<T> corrupt(const Batch3<T>& x, double sigma, double mask_p, Rng& rng) {
  Batch3<T> out = x;
  if (sigma > 0) {
    for (auto& v : out.values()) v += static_cast<T>(sigma * rng.normal());
  }
  if (mask_p > 0) {
    for (std::size_t b = 0; b < out.batch(); ++b) {
      for (std::size_t c = 0; c < out.channels(); ++c) {
        if (!rng.bernoulli(mask_p)) continue;
        for (std::size_t t = 0; t < out.steps(); ++t) out(b, t, c) = T(0);
      }
    }
  }
  return out;
}

template <class T>
struct LossResult {
  T value{};
  Batch3<T> grad;  // d(loss)/d(repair)
};

/// huber(repair, clean) + lambda_diff · huber(Δrepair, Δclean).
template <class T>
LossResult<T> repair_loss(const Batch3<T>& repair, const Batch3<T>& clean, double lambda_diff) {
  require_dims(repair.same_shape(clean), "loss: repair " + repair.shape_string() +
                                             " vs clean " + clean.shape_string());
  require_dims(repair.steps() >= 2, "loss: windows need at least 2 timesteps");
  const T delta = T(kHuberDelta);
  LossResult<T> r{huber(repair, clean, delta), huber_backward(repair, clean, delta)};
  if (lambda_diff != 0) {
    const auto dr = first_diff(repair);
    const auto dc = first_diff(clean);
    const T lam = static_cast<T>(lambda_diff);
    r.value += lam * huber(dr, dc, delta);
    auto gd = first_diff_adjoint(huber_backward(dr, dc, delta));
    for (std::size_t i = 0; i < gd.size(); ++i) r.grad[i] += lam * gd[i];
  }
  return r;
}

struct TrainReport {
  double initial_val_loss = 0.0;          // before any update
  std::vector<double> train_loss;          // epochs 1..n
  std::vector<double> val_loss;            // epochs 1..n
  std::vector<std::uint64_t> rng_position; // corruption stream position at epoch start
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;              // 0 = initial parameters
  double best_val_loss = 0.0;
  std::size_t train_windows = 0;
  std::size_t val_windows = 0;
  double seconds = 0.0;
};

/// Everything needed to fit one network besides the optimizer settings.
struct ModelOptions {
  std::size_t window = 100;
  std::size_t hidden = 128;
  std::size_t kernel = 5;
  std::size_t blocks = 1;
  bool zero_init_output = true;
};

template <class T = double>
struct TrainResult {
  JuReNet<T> net;
  TrainReport report;
  ScoreStats score_stats;
};

namespace detail {

template <class T>
Batch3<T> to_precision(const Batch3<double>& x) {
  if constexpr (std::is_same_v<T, double>) {
    return x;
  } else {
    Batch3<T> out(x.batch(), x.steps(), x.channels());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<T>(x[i]);
    return out;
  }
}

template <class T>
std::vector<Matrix<T>> snapshot(JuReNet<T>& net) {
  std::vector<Matrix<T>> out;
  for (auto* p : net.parameters()) out.push_back(p->value);
  return out;
}

template <class T>
void restore(JuReNet<T>& net, const std::vector<Matrix<T>>& values) {
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace detail

/// Repairs of `windows`, computed in chunks to bound memory.
template <class T>
Batch3<double> repair_windows(const JuReNet<T>& net, const Batch3<double>& windows,
                              std::size_t chunk = 256) {
  Batch3<double> out(windows.batch(), windows.steps(), windows.channels());
  const std::size_t per = windows.steps() * windows.channels();
  for (std::size_t lo = 0; lo < windows.batch(); lo += chunk) {
    const std::size_t n = std::min(chunk, windows.batch() - lo);
    Batch3<T> part(n, windows.steps(), windows.channels());
    for (std::size_t i = 0; i < n * per; ++i) part[i] = static_cast<T>(windows[lo * per + i]);
    const auto rep = net.forward(part);
    for (std::size_t i = 0; i < n * per; ++i) out[lo * per + i] = static_cast<double>(rep[i]);
  }
  return out;
}

/// Raw structural score of each window against its repair.
template <class T>
std::vector<double> score_windows(const JuReNet<T>& net, const Batch3<double>& windows,
                                  const ScoreWeights& weights) {
  validate(weights);
  return score_batch(windows, repair_windows(net, windows), weights);
}

/// Fits a repair network on an already-normalized series.
template <class T = double>
TrainResult<T> train(const TimeSeries& series, const TrainConfig& cfg,
                     const ModelOptions& model, const ScoreWeights& weights = {}) {
  validate(cfg);
  validate(weights);
  const auto clock_start = std::chrono::steady_clock::now();

  const auto starts = window_starts(series.length(), model.window, cfg.train_stride);
  require_config(starts.size() >= 2,
                 "train: series of length " + std::to_string(series.length()) +
                     " yields fewer than 2 windows of length " + std::to_string(model.window));
  std::size_t n_val = static_cast<std::size_t>(
      std::floor(cfg.val_fraction * static_cast<double>(starts.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, starts.size() - 1);
  const std::size_t n_train = starts.size() - n_val;
  const std::span<const std::size_t> train_starts(starts.data(), n_train);
  const std::span<const std::size_t> val_starts(starts.data() + n_train, n_val);

  Rng master(cfg.seed);
  const std::uint64_t init_seed = master.fork();
  Rng shuffle_rng(master.fork());
  Rng noise_rng(master.fork());
  const std::uint64_t val_seed = master.fork();

  TrainResult<T> result{
      JuReNet<T>::init({series.channels(), model.hidden, model.kernel, model.blocks},
                       init_seed, model.zero_init_output),
      {}, {}};
  JuReNet<T>& net = result.net;
  TrainReport& rep = result.report;
  rep.train_windows = n_train;
  rep.val_windows = n_val;

  AdamWConfig opt;
  opt.lr = cfg.lr;
  opt.weight_decay = cfg.weight_decay;

  // Validation inputs are corrupted once with a fixed stream so that the
  // early-stopping signal is comparable across epochs.
  const auto val_clean = detail::to_precision<T>(gather_windows(series.values, val_starts, model.window));
  Batch3<T> val_noisy;
  {
    Rng val_rng(val_seed);
    val_noisy = corrupt(val_clean, cfg.sigma, cfg.mask_p, val_rng);
  }
  auto validation_loss = [&]() {
    double total = 0.0;
    const std::size_t per = model.window * series.channels();
    for (std::size_t lo = 0; lo < n_val; lo += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, n_val - lo);
      Batch3<T> in(n, model.window, series.channels());
      Batch3<T> tgt(n, model.window, series.channels());
      std::copy_n(val_noisy.values().begin() + lo * per, n * per, in.values().begin());
      std::copy_n(val_clean.values().begin() + lo * per, n * per, tgt.values().begin());
      const auto r = repair_loss(net.forward(in), tgt, cfg.lambda_diff);
      total += static_cast<double>(r.value) * static_cast<double>(n);
    }
    const double v = total / static_cast<double>(n_val);
    if (!std::isfinite(v)) fail(ErrorKind::numeric, "train: non-finite validation loss");
    return v;
  };

  rep.initial_val_loss = validation_loss();
  rep.best_val_loss = rep.initial_val_loss;
  rep.best_epoch = 0;
  auto best = detail::snapshot(net);

  std::vector<std::size_t> order(train_starts.begin(), train_starts.end());
  std::vector<std::size_t> batch_starts;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rep.rng_position.push_back(noise_rng.position());
    shuffle_rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - lo);
      batch_starts.assign(order.begin() + static_cast<std::ptrdiff_t>(lo),
                          order.begin() + static_cast<std::ptrdiff_t>(lo + n));
      const auto clean = detail::to_precision<T>(gather_windows(series.values, batch_starts, model.window));
      const auto noisy = corrupt(clean, cfg.sigma, cfg.mask_p, noise_rng);
      ForwardCache<T> cache;
      const auto repair = net.forward(noisy, &cache);
      const auto loss = repair_loss(repair, clean, cfg.lambda_diff);
      if (!std::isfinite(static_cast<double>(loss.value))) {
        fail(ErrorKind::numeric, "train: non-finite loss at epoch " + std::to_string(epoch));
      }
      net.set_gradients(net.backward(cache, loss.grad));
      for (auto* p : net.parameters()) adamw_step(*p, opt);
      epoch_loss += static_cast<double>(loss.value) * static_cast<double>(n);
    }
    rep.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    const double val = validation_loss();
    rep.val_loss.push_back(val);
    rep.stopped_epoch = epoch;
    if (val < rep.best_val_loss) {
      rep.best_val_loss = val;
      rep.best_epoch = epoch;
      best = detail::snapshot(net);
    } else if (epoch - rep.best_epoch >= cfg.patience) {
      break;
    }
  }
  detail::restore(net, best);

  // Score statistics over every clean training-series window.
  const auto all = gather_windows(series.values, starts, model.window);
  result.score_stats = fit_score_stats(score_windows(net, all, weights));
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  return result;
}

}  // namespace jure
