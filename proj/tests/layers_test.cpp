#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "grad_check.hpp"
#include "hsicnn/layers.hpp"
#include "hsicnn/optim.hpp"

using namespace hsicnn;

namespace {

template <typename T>
Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::config;
}

}  // namespace

TEST(Conv3D, AllOnesCountsTaps) {
  Tensor<float> x({1, 3, 3, 3}, 1.0f), w({1, 1, 3, 3, 3}, 1.0f), b({1});
  EXPECT_EQ(conv3d_direct(w, b, x)[0], 27.0f);
  EXPECT_EQ(conv3d_lowered(w, b, x)[0], 27.0f);
}

TEST(Conv3D, UnitKernelIsIdentity) {
  Rng rng(1);
  auto x = random_tensor<float>({1, 4, 5, 6}, rng);
  Tensor<float> w({1, 1, 1, 1, 1}, 1.0f), b({1});
  EXPECT_EQ(conv3d_lowered(w, b, x), x);
  EXPECT_EQ(conv3d_direct(w, b, x), x);
}

TEST(Conv3D, FirstLayerShape) {
  Conv3D<float> layer(1, 8, 3, 3, 7);
  Tensor<float> x({1, 11, 11, 20});
  EXPECT_EQ(layer.apply(x).shape(), (Shape{8, 9, 9, 14}));
  EXPECT_EQ(layer.parameter_count(), 512u);
}

TEST(Conv3D, ExtentUnderflow) {
  Conv3D<float> layer(1, 2, 3, 3, 7);
  EXPECT_EQ(kind_of([&] { layer.apply(Tensor<float>({1, 11, 11, 5})); }), ErrorKind::shape);
}

TEST(Conv3D, DirectAndLoweredAgree) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t c = 1 + rng.below(4), o = 1 + rng.below(5);
    const std::size_t kh = 1 + 2 * rng.below(2), kd = 1 + 2 * rng.below(3);
    const std::size_t h = kh + rng.below(4), d = kd + rng.below(5);
    auto x = random_tensor<double>({c, h, h, d}, rng);
    auto w = random_tensor<double>({o, c, kh, kh, kd}, rng);
    auto b = random_tensor<double>({o}, rng);
    auto direct = conv3d_direct(w, b, x);
    auto lowered = conv3d_lowered(w, b, x);
    ASSERT_EQ(direct.shape(), lowered.shape());
    for (std::size_t i = 0; i < direct.size(); ++i) EXPECT_NEAR(direct[i], lowered[i], 1e-12);
  }
}

TEST(Conv3D, BackwardBeforeForward) {
  Conv3D<float> layer(1, 1, 1, 1, 1);
  EXPECT_EQ(kind_of([&] { layer.backward(Tensor<float>({1, 1, 1, 1})); }), ErrorKind::state);
}

TEST(Conv3D, ZeroUpstreamGivesZeroGrads) {
  Rng rng(3);
  Conv3D<double> layer(2, 3, 3, 3, 3);
  layer.weight = random_tensor<double>(layer.weight.shape(), rng);
  auto x = random_tensor<double>({2, 4, 4, 4}, rng);
  auto y = layer.forward(x);
  auto gx = layer.backward(Tensor<double>(y.shape()));
  for (double v : gx.data()) EXPECT_EQ(v, 0.0);
  for (double v : layer.grad_weight.data()) EXPECT_EQ(v, 0.0);
  for (double v : layer.grad_bias.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv3D, ScalarChainRule) {
  Conv3D<double> layer(1, 1, 1, 1, 1);
  layer.weight[0] = 1.7;
  layer.bias[0] = -0.3;
  Tensor<double> x({1, 1, 1, 1}, 0.6);
  const double out = layer.forward(x)[0];
  EXPECT_DOUBLE_EQ(out, 1.7 * 0.6 - 0.3);
  auto gx = layer.backward(Tensor<double>({1, 1, 1, 1}, 2.5));
  EXPECT_DOUBLE_EQ(layer.grad_weight[0], 0.6 * 2.5);
  EXPECT_DOUBLE_EQ(layer.grad_bias[0], 2.5);
  EXPECT_DOUBLE_EQ(gx[0], 1.7 * 2.5);
}

// Loss = sum(upstream * conv(x)); analytic gradients vs central differences.
TEST(Conv3D, GradientsMatchFiniteDifferences) {
  Rng rng(4);
  Conv3D<double> layer(2, 3, 3, 3, 3);
  layer.weight = random_tensor<double>(layer.weight.shape(), rng);
  layer.bias = random_tensor<double>(layer.bias.shape(), rng);
  auto x = random_tensor<double>({2, 5, 5, 5}, rng);
  const auto upstream = random_tensor<double>({3, 3, 3, 3}, rng);

  auto loss = [&] {
    const auto y = layer.apply(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * upstream[i];
    return s;
  };
  layer.forward(x);
  const auto gx = layer.backward(upstream);

  for (std::size_t i = 0; i < layer.weight.size(); ++i)
    EXPECT_LT(relative_error(layer.grad_weight[i], central_difference(layer.weight[i], loss)), 1e-6);
  for (std::size_t i = 0; i < layer.bias.size(); ++i)
    EXPECT_LT(relative_error(layer.grad_bias[i], central_difference(layer.bias[i], loss)), 1e-6);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_LT(relative_error(gx[i], central_difference(x[i], loss)), 1e-6);
}

TEST(Dense, IdentityWeights) {
  Dense<double> d(3, 3);
  for (std::size_t i = 0; i < 3; ++i) d.weight.at({i, i}) = 1.0;
  const auto x = Tensor<double>::from_values({3}, {0.5, -2.0, 3.0});
  EXPECT_EQ(d.apply(x), x);
}

TEST(Dense, ParameterCount) { EXPECT_EQ(Dense<float>(3456, 256).parameter_count(), 884992u); }

TEST(Dense, ShapeMismatch) {
  Dense<float> d(4, 2);
  EXPECT_EQ(kind_of([&] { d.apply(Tensor<float>({3})); }), ErrorKind::shape);
}

TEST(Dense, GradientsMatchFiniteDifferences) {
  Rng rng(5);
  Dense<double> d(7, 4);
  d.weight = random_tensor<double>(d.weight.shape(), rng);
  d.bias = random_tensor<double>(d.bias.shape(), rng);
  auto x = random_tensor<double>({7}, rng);
  const auto upstream = random_tensor<double>({4}, rng);
  auto loss = [&] {
    const auto y = d.apply(x);
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) s += y[i] * upstream[i];
    return s;
  };
  d.forward(x);
  const auto gx = d.backward(upstream);
  for (std::size_t i = 0; i < d.weight.size(); ++i)
    EXPECT_LT(relative_error(d.grad_weight[i], central_difference(d.weight[i], loss)), 1e-7);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_LT(relative_error(gx[i], central_difference(x[i], loss)), 1e-7);
}

TEST(Relu, ForwardAndMask) {
  Relu<double> r;
  const auto y = r.forward(Tensor<double>::from_values({3}, {-1, 0, 2}));
  EXPECT_EQ(y, Tensor<double>::from_values({3}, {0, 0, 2}));
  const auto g = r.backward(Tensor<double>::from_values({3}, {5, 6, 7}));
  EXPECT_EQ(g, Tensor<double>::from_values({3}, {0, 0, 7}));
}

TEST(Dropout, RateZeroAndEvalAreIdentity) {
  Rng rng(6);
  const auto x = random_tensor<float>({100}, rng);
  Dropout<float> none(0.0);
  EXPECT_EQ(none.forward(x, Mode::train, &rng), x);
  EXPECT_EQ(none.forward(x, Mode::eval, nullptr), x);
  Dropout<float> heavy(0.9);
  EXPECT_EQ(heavy.forward(x, Mode::eval, nullptr), x);
}

TEST(Dropout, InvalidRate) {
  EXPECT_EQ(kind_of([] { Dropout<float>(1.0); }), ErrorKind::invalid_rate);
  EXPECT_EQ(kind_of([] { Dropout<float>(-0.1); }), ErrorKind::invalid_rate);
}

TEST(Dropout, TrainModeIsUnbiased) {
  Rng rng(7);
  Dropout<double> drop(0.4);
  const auto y = drop.forward(Tensor<double>({1000000}, 1.0), Mode::train, &rng);
  const double mean = std::accumulate(y.data().begin(), y.data().end(), 0.0) / 1e6;
  EXPECT_NEAR(mean, 1.0, 0.01);
  // Backward reuses the same mask and scale.
  const auto g = drop.backward(Tensor<double>({1000000}, 1.0));
  EXPECT_EQ(g, y);
}

TEST(SoftmaxCrossEntropy, SymmetricCase) {
  const std::vector<double> z{0.0, 0.0};
  const auto r = softmax_cross_entropy<double>(z, 0);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(r.grad[0], -0.5, 1e-15);
  EXPECT_NEAR(r.grad[1], 0.5, 1e-15);
}

TEST(SoftmaxCrossEntropy, SaturatedCorrect) {
  const std::vector<float> z{100.0f, 0.0f};
  const auto r = softmax_cross_entropy<float>(z, 0);
  EXPECT_NEAR(r.loss, 0.0, 1e-12);
  EXPECT_NEAR(r.grad[0], 0.0, 1e-12);
  EXPECT_NEAR(r.grad[1], 0.0, 1e-12);
}

TEST(SoftmaxCrossEntropy, LabelOutOfRange) {
  const std::vector<double> z{0.0, 1.0};
  EXPECT_EQ(kind_of([&] { softmax_cross_entropy<double>(z, 2); }), ErrorKind::label);
}

TEST(SoftmaxCrossEntropy, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> z(2 + rng.below(8));
    for (auto& v : z) v = rng.uniform(-5, 5);
    const int label = static_cast<int>(rng.below(z.size()));
    const auto r = softmax_cross_entropy<double>(z, label);
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double fd = central_difference(z[i], [&] { return softmax_cross_entropy<double>(z, label).loss; });
      EXPECT_NEAR(r.grad[i], fd, 1e-8);
    }
  }
}

TEST(SoftmaxProperty, Simplex) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> z(2 + rng.below(15));
    for (auto& v : z) v = static_cast<float>(rng.uniform(-50, 50));
    const auto p = softmax<float>(z);
    double s = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Tensor<double> p = Tensor<double>::from_values({3}, {1, -2, 3});
  const Tensor<double> before = p;
  AdamState<double> st(p.shape());
  adam_step(p, Tensor<double>({3}), st, AdamConfig{});
  EXPECT_EQ(p, before);
  EXPECT_EQ(st.t, 1u);
}

TEST(Adam, FirstStepMagnitude) {
  Tensor<double> p({1}, 0.0);
  AdamState<double> st(p.shape());
  adam_step(p, Tensor<double>({1}, 0.5), st, AdamConfig{});
  // m_hat = 0.5, v_hat = 0.25 after bias correction.
  EXPECT_NEAR(p[0], -0.001 * 0.5 / (0.5 + 1e-8), 1e-15);
}

TEST(Adam, NonFiniteGradientAborts) {
  Tensor<float> p({2});
  AdamState<float> st(p.shape());
  auto g = Tensor<float>::from_values({2}, {0.0f, NAN});
  EXPECT_EQ(kind_of([&] { adam_step(p, g, st, AdamConfig{}); }), ErrorKind::training);
}

TEST(Adam, Deterministic) {
  Rng rng_a(10), rng_b(10);
  Tensor<float> pa({64}), pb({64});
  AdamState<float> sa(pa.shape()), sb(pb.shape());
  for (int step = 0; step < 25; ++step) {
    adam_step(pa, random_tensor<float>({64}, rng_a), sa, AdamConfig{});
    adam_step(pb, random_tensor<float>({64}, rng_b), sb, AdamConfig{});
  }
  EXPECT_EQ(pa, pb);
}
