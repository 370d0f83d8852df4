// The four window-score terms on hand-made repairs: a shifted copy, a
// smoothed copy and a copy whose second channel moves against the first.

#include <cmath>
#include <cstdio>

#include "jure.hpp"

int main() {
  using namespace jure;
  const std::size_t w = 64;
  Batch3<double> x(1, w, 2);
  for (std::size_t t = 0; t < w; ++t) {
    const double v = std::sin(0.25 * static_cast<double>(t));
    x(0, t, 0) = v;
    x(0, t, 1) = 0.7 * v + 0.2;
  }

  Batch3<double> shifted = x, smoothed = x, flipped = x;
  for (auto& v : shifted.values()) v += 0.5;
  for (std::size_t t = 1; t + 1 < w; ++t) {
    for (std::size_t c = 0; c < 2; ++c) {
      smoothed(0, t, c) = (x(0, t - 1, c) + x(0, t, c) + x(0, t + 1, c)) / 3.0;
    }
  }
  for (std::size_t t = 0; t < w; ++t) flipped(0, t, 1) = 0.4 - x(0, t, 1);

  std::printf("%-10s %8s %8s %8s %8s %8s\n", "repair", "amp", "diff", "trend", "corr", "total");
  auto row = [&](const char* name, const Batch3<double>& r) {
    const auto a = x.window(0), b = r.window(0);
    std::printf("%-10s %8.4f %8.4f %8.4f %8.4f %8.4f\n", name, s_amp(a, b), s_diff(a, b), s_trend(a, b, 10),
                s_corr(a, b), score_window(a, b));
  };
  row("identical", x);
  row("shifted", shifted);
  row("smoothed", smoothed);
  row("flipped", flipped);
}
