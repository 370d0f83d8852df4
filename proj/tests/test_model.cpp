#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "jure/model.hpp"
#include "jure/training.hpp"
#include "test_support.hpp"

using namespace jure;
using jure::test::random_batch;
using jure::test::rel_err;

namespace {

std::size_t enumerate_parameters(const JuReNet<double>& net) {
  std::size_t n = net.proj_in().weight.value.rows() * net.proj_in().weight.value.cols() +
                  net.proj_in().bias.value.cols();
  for (const auto& b : net.blocks()) {
    n += b.dw.weight.value.rows() * b.dw.weight.value.cols() + b.dw.bias.value.cols();
    n += b.pw.weight.value.rows() * b.pw.weight.value.cols() + b.pw.bias.value.cols();
  }
  n += net.proj_out().weight.value.rows() * net.proj_out().weight.value.cols() +
       net.proj_out().bias.value.cols();
  return n;
}

// Composes the layer primitives directly, independent of JuReNet::forward.
Batch3<double> manual_forward(const JuReNet<double>& net, const Batch3<double>& x) {
  auto h = conv1x1_forward(x, net.proj_in().weight.value, net.proj_in().bias.value);
  for (const auto& b : net.blocks()) {
    const auto d = depthwise_conv_forward(h, b.dw.weight.value, b.dw.bias.value);
    const auto p = conv1x1_forward(d, b.pw.weight.value, b.pw.bias.value);
    h = add(h, gelu_forward(p));
  }
  return add(x, conv1x1_forward(h, net.proj_out().weight.value, net.proj_out().bias.value));
}

}  // namespace

TEST(ModelInit, DefaultCountMatchesReference) {
  EXPECT_EQ(JuReNet<double>::init({1, 128, 5, 1}, 7).parameter_count(), 17665u);
  EXPECT_EQ(parameter_count_formula({1, 128, 5, 1}), 17665u);
  EXPECT_EQ(JuReNet<double>::init({2, 128, 5, 1}, 7).parameter_count(), 17922u);
}

TEST(ModelInit, CountMatchesEnumerationOnGrid) {
  for (std::size_t c : {1u, 2u, 3u, 5u}) {
    for (std::size_t h : {1u, 8u, 16u, 128u}) {
      for (std::size_t k : {1u, 3u, 5u, 7u}) {
        const ModelShape s{c, h, k, 1};
        const auto net = JuReNet<double>::init(s, 1);
        const std::size_t n = enumerate_parameters(net);
        EXPECT_EQ(net.parameter_count(), n);
        EXPECT_EQ(n, 2 * h * c + h * h + (k + 3) * h + c) << c << " " << h << " " << k;
      }
    }
  }
}

TEST(ModelInit, EachExtraBlockAddsOneSeparablePair) {
  for (std::size_t h : {4u, 8u, 32u}) {
    for (std::size_t k : {3u, 5u}) {
      const auto one = enumerate_parameters(JuReNet<double>::init({2, h, k, 1}, 1));
      const auto two = enumerate_parameters(JuReNet<double>::init({2, h, k, 2}, 1));
      const auto three = enumerate_parameters(JuReNet<double>::init({2, h, k, 3}, 1));
      EXPECT_EQ(two - one, h * h + (k + 2) * h);
      EXPECT_EQ(three - two, h * h + (k + 2) * h);
      EXPECT_EQ(two, parameter_count_formula({2, h, k, 2}));
    }
  }
}

TEST(ModelInit, OutputProjectionZeroAndOthersBounded) {
  const auto net = JuReNet<double>::init({3, 16, 5, 1}, 11);
  for (double v : net.proj_out().weight.value.values()) EXPECT_EQ(v, 0.0);
  for (double v : net.proj_out().bias.value.values()) EXPECT_EQ(v, 0.0);
  const double in_bound = 1.0 / std::sqrt(3.0);
  bool nonzero = false;
  for (double v : net.proj_in().weight.value.values()) {
    EXPECT_LE(std::abs(v), in_bound);
    nonzero = nonzero || v != 0.0;
  }
  EXPECT_TRUE(nonzero);
  for (double v : net.blocks()[0].pw.weight.value.values()) EXPECT_LE(std::abs(v), 0.25);
}

TEST(ModelInit, DeterministicForSeed) {
  const auto a = JuReNet<double>::init({2, 8, 5, 1}, 42, false);
  const auto b = JuReNet<double>::init({2, 8, 5, 1}, 42, false);
  const auto c = JuReNet<double>::init({2, 8, 5, 1}, 43, false);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  bool differs = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->value, pb[i]->value);
    differs = differs || !(pa[i]->value == pc[i]->value);
  }
  EXPECT_TRUE(differs);
}

TEST(ModelInit, InvalidShapeIsConfigError) {
  for (const ModelShape s : {ModelShape{0, 8, 5, 1}, ModelShape{1, 0, 5, 1}, ModelShape{1, 8, 4, 1},
                             ModelShape{1, 8, 5, 0}}) {
    try {
      JuReNet<double>::init(s, 0);
      FAIL() << "expected a config error";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config);
    }
  }
}

TEST(ModelForward, FreshNetIsExactIdentity) {
  const auto net = JuReNet<double>::init({2, 32, 5, 1}, 3);
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_batch(1, 24, 2, rng, 5.0);
    const auto y = net.forward(x);
    double dev = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dev = std::max(dev, std::abs(y[j] - x[j]));
    ASSERT_EQ(dev, 0.0) << "input " << i;
  }
}

TEST(ModelForward, MatchesManualComposition) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto net = JuReNet<double>::init({3, 16, 5, 1 + seed % 3}, seed, false);
    Rng rng(500 + seed);
    const auto x = random_batch(3, 20, 3, rng, 2.0);
    const auto y = net.forward(x);
    const auto z = manual_forward(net, x);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_LE(std::abs(y[i] - z[i]), 1e-12);
  }
}

TEST(ModelForward, CorrectionScalesLinearlyWithOutputWeight) {
  auto net = JuReNet<double>::init({2, 8, 5, 1}, 5);
  Rng rng(6);
  const auto x = random_batch(2, 10, 2, rng);
  auto correction = [&](double eps) {
    for (std::size_t i = 0; i < 8; ++i) net.proj_out().weight.value(i, i % 2) = eps;
    const auto y = net.forward(x);
    std::vector<double> d(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) d[i] = y[i] - x[i];
    return d;
  };
  const auto d1 = correction(1e-3);
  const auto d3 = correction(3e-3);
  for (std::size_t i = 0; i < d1.size(); ++i) EXPECT_LE(std::abs(d3[i] - 3.0 * d1[i]), 1e-14);
}

TEST(ModelForward, ChannelMismatchIsDimensionError) {
  const auto net = JuReNet<double>::init({2, 8, 5, 1}, 5);
  try {
    net.forward(Batch3<double>(1, 10, 3));
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(ModelBackward, ZeroUpstreamGivesZeroGradients) {
  const auto net = JuReNet<double>::init({2, 8, 5, 1}, 8, false);
  Rng rng(9);
  ForwardCache<double> cache;
  const auto x = random_batch(2, 12, 2, rng);
  net.forward(x, &cache);
  const auto g = net.backward(cache, Batch3<double>(2, 12, 2));
  for (const auto& m : g.params)
    for (double v : m.values()) EXPECT_EQ(v, 0.0);
  for (double v : g.input.values()) EXPECT_EQ(v, 0.0);
}

TEST(ModelBackward, ZeroNetPassesGradientThroughSkip) {
  auto net = JuReNet<double>::init({2, 8, 5, 1}, 8, false);
  for (auto* p : net.parameters()) p->value.fill(0.0);
  Rng rng(10);
  ForwardCache<double> cache;
  net.forward(random_batch(2, 12, 2, rng), &cache);
  const auto up = random_batch(2, 12, 2, rng);
  EXPECT_EQ(net.backward(cache, up).input, up);
}

TEST(ModelBackward, StaleCacheIsDimensionError) {
  const auto small = JuReNet<double>::init({2, 8, 5, 1}, 1);
  const auto deep = JuReNet<double>::init({2, 8, 5, 2}, 1);
  Rng rng(11);
  ForwardCache<double> cache;
  const auto x = random_batch(1, 12, 2, rng);
  small.forward(x, &cache);
  EXPECT_THROW(deep.backward(cache, x), Error);
  EXPECT_THROW(small.backward(cache, Batch3<double>(1, 11, 2)), Error);
}

TEST(ModelBackward, FullModelMatchesFiniteDifferencesOfLoss) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto net = JuReNet<double>::init({2, 8, 5, 1}, 100 + seed, false);
    Rng rng(200 + seed);
    auto x = random_batch(2, 12, 2, rng);
    const auto clean = random_batch(2, 12, 2, rng);
    auto loss = [&] { return repair_loss(net.forward(x), clean, 0.25).value; };

    ForwardCache<double> cache;
    const auto rep = net.forward(x, &cache);
    const auto g = net.backward(cache, repair_loss(rep, clean, 0.25).grad);
    const auto params = net.parameters();
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto vals = params[p]->value.values();
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const double keep = vals[i];
        vals[i] = keep + h;
        const double up = loss();
        vals[i] = keep - h;
        const double down = loss();
        vals[i] = keep;
        worst = std::max(worst, rel_err(g.params[p][i], (up - down) / (2 * h)));
      }
    }
    auto xv = x.values();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double keep = xv[i];
      xv[i] = keep + h;
      const double up = loss();
      xv[i] = keep - h;
      const double down = loss();
      xv[i] = keep;
      worst = std::max(worst, rel_err(g.input[i], (up - down) / (2 * h)));
    }
    EXPECT_LE(worst, 1e-4) << "seed " << seed;
  }
}

TEST(ModelBackward, TwoBlockGradientsMatchFiniteDifferences) {
  auto net = JuReNet<double>::init({2, 6, 3, 2}, 77, false);
  Rng rng(78);
  const auto x = random_batch(2, 9, 2, rng);
  const auto clean = random_batch(2, 9, 2, rng);
  ForwardCache<double> cache;
  const auto rep = net.forward(x, &cache);
  const auto g = net.backward(cache, repair_loss(rep, clean, 0.25).grad);
  const auto params = net.parameters();
  const double h = 1e-6;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto vals = params[p]->value.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double keep = vals[i];
      vals[i] = keep + h;
      const double up = repair_loss(net.forward(x), clean, 0.25).value;
      vals[i] = keep - h;
      const double down = repair_loss(net.forward(x), clean, 0.25).value;
      vals[i] = keep;
      EXPECT_LE(rel_err(g.params[p][i], (up - down) / (2 * h)), 1e-4) << "tensor " << p << " entry " << i;
    }
  }
}

TEST(ModelGradients, SetGradientsRejectsWrongCount) {
  auto net = JuReNet<double>::init({1, 4, 3, 1}, 1);
  Gradients<double> g;
  g.params.resize(3);
  EXPECT_THROW(net.set_gradients(g), Error);
}
