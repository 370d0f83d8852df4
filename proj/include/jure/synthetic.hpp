#pragma once

// Synthetic train/test pairs for the four anomaly classes (amplitude spike,
// trend shift, gradient noise, correlation break) and a manifold generator
// whose windows lie on a smooth low-dimensional surface.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "jure/data.hpp"
#include "jure/error.hpp"
#include "jure/random.hpp"

namespace jure {

enum class AnomalyKind {
  amplitude_spike,
  trend_shift,
  gradient_noise,
  correlation_break,
  manifold,
};

inline const char* to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::amplitude_spike: return "amplitude_spike";
    case AnomalyKind::trend_shift: return "trend_shift";
    case AnomalyKind::gradient_noise: return "gradient_noise";
    case AnomalyKind::correlation_break: return "correlation_break";
    case AnomalyKind::manifold: return "manifold";
  }
  return "?";
}

inline AnomalyKind parse_anomaly_kind(const std::string& s) {
  for (auto k : {AnomalyKind::amplitude_spike, AnomalyKind::trend_shift,
                 AnomalyKind::gradient_noise, AnomalyKind::correlation_break,
                 AnomalyKind::manifold}) {
    if (s == to_string(k)) return k;
  }
  fail(ErrorKind::config, "unknown anomaly kind '" + s + "'");
}

struct SyntheticSpec {
  AnomalyKind kind = AnomalyKind::amplitude_spike;
  std::size_t length = 2000;  // T of both train and test
  std::size_t channels = 2;
  double period = 50.0;       // main sinusoid period
  double amplitude = 1.0;
  double noise_std = 0.2;     // observation noise
  std::size_t anomaly_start = 1000;
  std::size_t anomaly_length = 100;
  // Kind-specific size: spike height, level shift, noise std inside the span.
  // Unused for correlation_break and manifold.
  double magnitude = 3.0;
  // Manifold kind only.
  std::size_t intrinsic_dim = 4;
  std::size_t window = 100;
};

/// The canonical configuration of each class used by the test suites.
inline SyntheticSpec default_synthetic(AnomalyKind kind) {
  SyntheticSpec s;
  s.kind = kind;
  switch (kind) {
    case AnomalyKind::amplitude_spike:
      s.anomaly_start = 1100;
      s.anomaly_length = 5;
      s.magnitude = 3.0;
      break;
    case AnomalyKind::trend_shift:
      s.anomaly_start = 1000;
      s.anomaly_length = 200;
      s.magnitude = 1.5;
      break;
    case AnomalyKind::gradient_noise:
      s.anomaly_start = 1000;
      s.anomaly_length = 100;
      s.magnitude = 0.5;
      break;
    case AnomalyKind::correlation_break:
      // Whole periods of both base components, so in-span marginals match.
      // Lower noise keeps the normal cross-channel correlation near 1.
      s.anomaly_start = 800;
      s.anomaly_length = 400;
      s.noise_std = 0.1;
      break;
    case AnomalyKind::manifold:
      s.channels = 8;
      s.noise_std = 0.0;
      s.anomaly_length = 0;
      break;
  }
  return s;
}

inline void validate(const SyntheticSpec& s) {
  require_config(s.length >= 2, "synthetic: length must be >= 2");
  require_config(s.channels >= 1, "synthetic: channels must be >= 1");
  require_config(s.period > 0, "synthetic: period must be positive");
  require_config(s.noise_std >= 0, "synthetic: noise_std must be non-negative");
  if (s.anomaly_length > 0) {
    require_config(s.anomaly_start < s.length && s.anomaly_start + s.anomaly_length <= s.length,
                   "synthetic: anomaly span [" + std::to_string(s.anomaly_start) + ", " +
                       std::to_string(s.anomaly_start + s.anomaly_length) +
                       ") lies outside the series of length " + std::to_string(s.length));
  }
  if (s.kind == AnomalyKind::correlation_break) {
    require_config(s.channels >= 2, "synthetic: correlation_break needs >= 2 channels");
  }
  if (s.kind == AnomalyKind::manifold) {
    require_config(s.intrinsic_dim >= 1 && s.intrinsic_dim <= s.window * s.channels,
                   "synthetic: intrinsic dimension must lie in [1, W*C]");
  }
}

struct SyntheticPair {
  TimeSeries train;
  TimeSeries test;
};

namespace detail {

/// Shared base process: a main sinusoid plus a slower harmonic.
struct BaseSignal {
  double period;
  double amplitude;
  double phase;
  double slow_phase;

  double operator()(double t) const {
    const double w = 2.0 * std::numbers::pi / period;
    return amplitude * (std::sin(w * t + phase) + 0.3 * std::sin(w * t / 4.0 + slow_phase));
  }
};

inline TimeSeries base_series(const SyntheticSpec& s, const BaseSignal& base,
                              const std::vector<double>& gains, double t0, Rng& rng,
                              const std::string& name) {
  TimeSeries ts;
  ts.name = name;
  ts.values = Matrix<double>(s.length, s.channels);
  for (std::size_t t = 0; t < s.length; ++t) {
    const double v = base(t0 + static_cast<double>(t));
    for (std::size_t c = 0; c < s.channels; ++c) {
      ts.values(t, c) = gains[c] * v + s.noise_std * rng.normal();
    }
  }
  ts.labels = std::vector<int>(s.length, 0);
  return ts;
}

inline SyntheticPair generate_manifold(const SyntheticSpec& s, Rng& rng) {
  const std::size_t d = s.intrinsic_dim;
  const std::size_t ch = s.channels;
  // Latent coordinates: d sinusoids with incommensurate periods, so windows
  // trace a d-torus embedded in R^{W×C}.
  std::vector<double> periods(d);
  std::vector<double> phases(d);
  for (std::size_t j = 0; j < d; ++j) {
    periods[j] = s.period * std::pow(1.618033988749895, static_cast<double>(j) * 0.5) *
                 rng.uniform(0.8, 1.2);
    phases[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  // Random C×d mixing, columns scaled so each channel has unit-order variance.
  Matrix<double> mix(ch, d);
  for (auto& v : mix.values()) v = rng.normal() * std::sqrt(2.0 / static_cast<double>(d));

  auto make = [&](double t0, const std::string& name) {
    TimeSeries ts;
    ts.name = name;
    ts.values = Matrix<double>(s.length, ch);
    std::vector<double> z(d);
    for (std::size_t t = 0; t < s.length; ++t) {
      for (std::size_t j = 0; j < d; ++j) {
        z[j] = s.amplitude *
               std::sin(2.0 * std::numbers::pi * (t0 + static_cast<double>(t)) / periods[j] + phases[j]);
      }
      for (std::size_t c = 0; c < ch; ++c) {
        double v = 0.0;
        for (std::size_t j = 0; j < d; ++j) v += mix(c, j) * z[j];
        ts.values(t, c) = v + s.noise_std * rng.normal();
      }
    }
    ts.labels = std::vector<int>(s.length, 0);
    return ts;
  };
  SyntheticPair pair{make(0.0, "manifold_train"), make(static_cast<double>(s.length), "manifold_test")};
  return pair;
}

}  // namespace detail

/// Clean training series and a test series with the anomaly embedded in
/// [anomaly_start, anomaly_start + anomaly_length) and labelled.
inline SyntheticPair generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(seed);
  if (spec.kind == AnomalyKind::manifold) return detail::generate_manifold(spec, rng);

  const detail::BaseSignal base{spec.period, spec.amplitude,
                                rng.uniform(0.0, 2.0 * std::numbers::pi),
                                rng.uniform(0.0, 2.0 * std::numbers::pi)};
  std::vector<double> gains(spec.channels);
  for (std::size_t c = 0; c < spec.channels; ++c) gains[c] = 1.0 - 0.15 * static_cast<double>(c % 4);

  const std::string kind = to_string(spec.kind);
  SyntheticPair pair{detail::base_series(spec, base, gains, 0.0, rng, kind + "_train"),
                     detail::base_series(spec, base, gains, static_cast<double>(spec.length),
                                         rng, kind + "_test")};
  if (spec.anomaly_length == 0) return pair;

  auto& x = pair.test.values;
  const std::size_t lo = spec.anomaly_start;
  const std::size_t hi = lo + spec.anomaly_length;
  switch (spec.kind) {
    case AnomalyKind::amplitude_spike: {
      double peak = 0.0;
      for (double v : pair.train.values.values()) peak = std::max(peak, std::abs(v));
      for (std::size_t t = lo; t < hi; ++t) x(t, 0) = peak + spec.magnitude;
      break;
    }
    case AnomalyKind::trend_shift: {
      const double ramp = std::max<double>(1.0, static_cast<double>(spec.anomaly_length) / 4.0);
      for (std::size_t t = lo; t < hi; ++t) {
        const double level = spec.magnitude * std::min(1.0, static_cast<double>(t - lo + 1) / ramp);
        for (std::size_t c = 0; c < spec.channels; ++c) x(t, c) += level;
      }
      break;
    }
    case AnomalyKind::gradient_noise:
      for (std::size_t t = lo; t < hi; ++t)
        for (std::size_t c = 0; c < spec.channels; ++c) x(t, c) += spec.magnitude * rng.normal();
      break;
    case AnomalyKind::correlation_break:
      // Odd channels flip sign around the (zero) mean: marginals are kept
      // while the cross-channel correlation reverses.
      for (std::size_t t = lo; t < hi; ++t)
        for (std::size_t c = 1; c < spec.channels; c += 2) x(t, c) = -x(t, c);
      break;
    case AnomalyKind::manifold:
      break;
  }
  for (std::size_t t = lo; t < hi; ++t) (*pair.test.labels)[t] = 1;
  return pair;
}

}  // namespace jure
