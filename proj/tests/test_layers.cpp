// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>

#include "concatenet/gradcheck.hpp"
#include "concatenet/layers.hpp"
#include "concatenet/ops.hpp"
#include "test_util.hpp"

using namespace concatenet;
using namespace concatenet::layers;
using concatenet::testing::bit_equal;
using concatenet::testing::conv_oracle;
using concatenet::testing::max_abs;
using concatenet::testing::max_abs_diff;
using concatenet::testing::random_tensor;

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Straightforward per-sequence GRU following the documented gate equations.
std::vector<double> gru_oracle(const Tensor& x, const GruParams& p, bool reverse) {
  const std::size_t n = x.size(0), len = x.size(1), d = x.size(2), h = p.hidden();
  auto wi = p.w_ih.data(), wh = p.w_hh.data(), bi = p.b_ih.data(), bh = p.b_hh.data();
  std::vector<double> out(n * len * h);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> state(h, 0.0), next(h);
    for (std::size_t step = 0; step < len; ++step) {
      const std::size_t l = reverse ? len - 1 - step : step;
      const double* xv = x.data().data() + (s * len + l) * d;
      for (std::size_t j = 0; j < h; ++j) {
        double gi[3], gh[3];
        for (std::size_t g = 0; g < 3; ++g) {
          const std::size_t row = g * h + j;
          gi[g] = bi[row];
          gh[g] = bh[row];
          for (std::size_t k = 0; k < d; ++k) gi[g] += wi[row * d + k] * xv[k];
          for (std::size_t k = 0; k < h; ++k) gh[g] += wh[row * h + k] * state[k];
        }
        const double r = sigmoid(gi[0] + gh[0]);
        const double z = sigmoid(gi[1] + gh[1]);
        const double cand = std::tanh(gi[2] + r * gh[2]);
        next[j] = (1.0 - z) * cand + z * state[j];
      }
      state = next;
      for (std::size_t j = 0; j < h; ++j) out[(s * len + l) * h + j] = state[j];
    }
  }
  return out;
}

GruParams random_gru(std::mt19937_64& rng, std::size_t d, std::size_t h, bool grad = false) {
  return {random_tensor({3 * h, d}, rng, -0.7, 0.7, grad), random_tensor({3 * h, h}, rng, -0.7, 0.7, grad),
          random_tensor({3 * h}, rng, -0.3, 0.3, grad), random_tensor({3 * h}, rng, -0.3, 0.3, grad)};
}

BatchNormParams make_bn(std::size_t c, double gamma = 1.0, double beta = 0.0) {
  return {Tensor::full({c}, gamma, true), Tensor::full({c}, beta, true), Tensor::zeros({c}),
          Tensor::full({c}, 1.0)};
}

}  // namespace

TEST_CASE("causal conv matches the direct-sum oracle") {
  std::mt19937_64 rng(10);
  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t bins : {7u, 8u}) {
      Tensor x = random_tensor({3, 6, bins}, rng);
      Tensor w = random_tensor({4, 3, 3, 3}, rng);
      Tensor b = random_tensor({4}, rng);
      Tensor y = conv2d_causal(x, w, b, stride);
      const auto ref = conv_oracle(x, w, {b.data().begin(), b.data().end()}, stride);
      REQUIRE(y.shape() == Shape{4, 6, (bins + stride - 1) / stride});
      CHECK(max_abs_diff(y.data(), ref) <= 1e-13);
    }
  }
}

TEST_CASE("conv output sizes follow ceil(F / stride)") {
  CHECK(conv_output_bins(256, 2) == 128);
  CHECK(conv_output_bins(33, 2) == 17);
  CHECK(conv_output_bins(33, 1) == 33);
  Tensor x({64, 45, 256});
  CHECK(depthwise_conv_causal(x, Tensor({64, 3, 3}), 2).shape() == Shape{64, 45, 128});
  CHECK_THROWS_AS(depthwise_conv_causal(x, Tensor({64, 3, 3}), 3), std::invalid_argument);
  CHECK_THROWS_AS(depthwise_conv_causal(x, Tensor({63, 3, 3}), 1), ShapeError);
  CHECK_THROWS_AS(conv2d_causal(x, Tensor({2, 3, 3, 3}), Tensor({2})), ShapeError);
}

TEST_CASE("zero input with zero bias gives zero output") {
  std::mt19937_64 rng(11);
  Tensor x = Tensor::zeros({2, 5, 6});
  CHECK(max_abs(conv2d_causal(x, random_tensor({3, 2, 3, 3}, rng), Tensor::zeros({3})).data()) == 0.0);
  CHECK(max_abs(depthwise_conv_causal(x, random_tensor({2, 3, 3}, rng)).data()) == 0.0);
  CHECK(max_abs(depthwise_conv_transposed_freq(x, random_tensor({2, 3, 3}, rng)).data()) == 0.0);
}

TEST_CASE("depthwise delta kernel with identity pointwise reproduces the input") {
  std::mt19937_64 rng(12);
  Tensor x = random_tensor({2, 5, 7}, rng);
  Tensor dw = Tensor::zeros({2, 3, 3});
  dw.data()[0 * 9 + 0 * 3 + 1] = 1.0;  // current frame, center bin
  dw.data()[1 * 9 + 0 * 3 + 1] = 1.0;
  Tensor pw({2, 2}, {1, 0, 0, 1});
  Tensor y = pointwise_conv(depthwise_conv_causal(x, dw), pw, Tensor::zeros({2}));
  CHECK(bit_equal(y.data(), x.data()));
}

TEST_CASE("depthwise conv equals a full conv with diagonal weights") {
  std::mt19937_64 rng(13);
  Tensor x = random_tensor({3, 5, 9}, rng);
  Tensor dw = random_tensor({3, 3, 3}, rng);
  Tensor full = Tensor::zeros({3, 3, 3, 3});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < 9; ++k) full.data()[(c * 3 + c) * 9 + k] = dw.data()[c * 9 + k];
  for (std::size_t stride : {1u, 2u}) {
    CHECK(max_abs_diff(depthwise_conv_causal(x, dw, stride).data(), conv_oracle(x, full, {}, stride)) <= 1e-14);
  }
}

TEST_CASE("pointwise conv mixes channels per element") {
  std::mt19937_64 rng(14);
  Tensor x = random_tensor({3, 4, 5}, rng);
  Tensor w = random_tensor({2, 3}, rng);
  Tensor b = random_tensor({2}, rng);
  Tensor y = pointwise_conv(x, w, b);
  for (std::size_t o = 0; o < 2; ++o)
    for (std::size_t i = 0; i < 20; ++i) {
      double acc = b.data()[o];
      for (std::size_t c = 0; c < 3; ++c) acc += w.data()[o * 3 + c] * x.data()[c * 20 + i];
      CHECK(y.data()[o * 20 + i] == doctest::Approx(acc).epsilon(1e-14));
    }
}

TEST_CASE("transposed conv doubles frequency and matches its scatter oracle") {
  std::mt19937_64 rng(15);
  Tensor x = random_tensor({2, 4, 5}, rng);
  Tensor w = random_tensor({2, 3, 3}, rng);
  Tensor y = depthwise_conv_transposed_freq(x, w);
  REQUIRE(y.shape() == Shape{2, 4, 10});
  std::vector<double> ref(2 * 4 * 10, 0.0);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t fi = 0; fi < 5; ++fi)
        for (std::size_t lag = 0; lag < 3; ++lag)
          for (std::size_t tap = 0; tap < 3; ++tap) {
            const long fo = 2 * static_cast<long>(fi) + static_cast<long>(tap) - 1;
            if (t + lag >= 4 || fo < 0 || fo >= 10) continue;
            ref[(c * 4 + t + lag) * 10 + fo] += w.data()[(c * 3 + lag) * 3 + tap] * x.data()[(c * 4 + t) * 5 + fi];
          }
  CHECK(max_abs_diff(y.data(), ref) <= 1e-14);
  CHECK(depthwise_conv_transposed_freq(Tensor({64, 45, 32}), Tensor({64, 3, 3})).shape() == Shape{64, 45, 64});
}

TEST_CASE("transposed conv impulse response stays within 3 taps and 3 frames") {
  Tensor x = Tensor::zeros({1, 8, 6});
  x.data()[3 * 6 + 2] = 1.0;  // frame 3, bin 2
  Tensor w = Tensor::full({1, 3, 3}, 1.0);
  Tensor y = depthwise_conv_transposed_freq(x, w);
  std::size_t nonzero = 0;
  for (std::size_t t = 0; t < 8; ++t)
    for (std::size_t f = 0; f < 12; ++f) {
      if (y.data()[t * 12 + f] == 0.0) continue;
      ++nonzero;
      CHECK(t >= 3);
      CHECK(t <= 5);
      CHECK(f >= 3);
      CHECK(f <= 5);
    }
  CHECK(nonzero == 9);
}

TEST_CASE("conv ops are linear") {
  std::mt19937_64 rng(16);
  Tensor x = random_tensor({2, 5, 8}, rng), y = random_tensor({2, 5, 8}, rng);
  Tensor w = random_tensor({3, 2, 3, 3}, rng), dw = random_tensor({2, 3, 3}, rng);
  const double a = 0.7, b = -1.3;
  Tensor combo = ops::add(ops::scale(x, a), ops::scale(y, b));
  auto check = [&](auto f) {
    Tensor lhs = f(combo);
    Tensor rhs = ops::add(ops::scale(f(x), a), ops::scale(f(y), b));
    CHECK(max_abs_diff(lhs.data(), rhs.data()) <= 1e-6 * std::max(1.0, max_abs(rhs.data())));
  };
  check([&](const Tensor& t) { return conv2d_causal(t, w, Tensor::zeros({3}), 2); });
  check([&](const Tensor& t) { return depthwise_conv_causal(t, dw); });
  check([&](const Tensor& t) { return depthwise_conv_transposed_freq(t, dw); });
}

TEST_CASE("conv ops are causal in time") {
  std::mt19937_64 rng(17);
  Tensor x = random_tensor({2, 10, 6}, rng);
  Tensor w = random_tensor({2, 2, 3, 3}, rng), dw = random_tensor({2, 3, 3}, rng);
  Tensor x2 = x.clone();
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t f = 0; f < 6; ++f) x2.data()[(c * 10 + 6) * 6 + f] += 1.0;  // frame 6
  auto prefix_equal = [](const Tensor& a, const Tensor& b, std::size_t frames) {
    const std::size_t c = a.size(0), t = a.size(1), f = a.size(2);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < frames * f; ++i)
        if (a.data()[ch * t * f + i] != b.data()[ch * t * f + i]) return false;
    return true;
  };
  CHECK(prefix_equal(conv2d_causal(x, w, Tensor::zeros({2})), conv2d_causal(x2, w, Tensor::zeros({2})), 6));
  CHECK(prefix_equal(depthwise_conv_causal(x, dw, 2), depthwise_conv_causal(x2, dw, 2), 6));
  CHECK(prefix_equal(depthwise_conv_transposed_freq(x, dw), depthwise_conv_transposed_freq(x2, dw), 6));
  CHECK_FALSE(prefix_equal(conv2d_causal(x, w, Tensor::zeros({2})), conv2d_causal(x2, w, Tensor::zeros({2})), 7));
}

TEST_CASE("conv primitives pass finite-difference checks") {
  std::mt19937_64 rng(18);
  Tensor x = random_tensor({2, 4, 7}, rng, -1, 1, true);
  Tensor w = random_tensor({3, 2, 3, 3}, rng, -1, 1, true);
  Tensor b = random_tensor({3}, rng, -1, 1, true);
  Tensor dw = random_tensor({2, 3, 3}, rng, -1, 1, true);
  Tensor pw = random_tensor({3, 2}, rng, -1, 1, true);
  CHECK(grad_check_detailed([&] { return conv2d_causal(x, w, b, 1); }, {x, w, b}).max_rel_error <= 1e-6);
  CHECK(grad_check_detailed([&] { return conv2d_causal(x, w, b, 2); }, {x, w, b}).max_rel_error <= 1e-6);
  CHECK(grad_check_detailed([&] { return depthwise_conv_causal(x, dw, 2); }, {x, dw}).max_rel_error <= 1e-6);
  CHECK(grad_check_detailed([&] { return depthwise_conv_transposed_freq(x, dw); }, {x, dw}).max_rel_error <= 1e-6);
  CHECK(grad_check_detailed([&] { return pointwise_conv(x, pw, b); }, {x, pw, b}).max_rel_error <= 1e-6);
}

TEST_CASE("batch norm of a constant input in training mode is zero") {
  Tensor x = Tensor::full({2, 4, 5}, 3.25);
  auto bn = make_bn(2);
  CHECK(max_abs(batch_norm(x, bn, true).data()) == 0.0);
  CHECK_THROWS(batch_norm(Tensor({2, 0, 5}), bn, true));
}

TEST_CASE("batch norm standardizes N(3, 4) data per channel") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> g(3.0, 2.0);
  Tensor x({2, 100, 100});
  for (double& v : x.data()) v = g(rng);
  auto bn = make_bn(2);
  Tensor y = batch_norm(x, bn, true);
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0.0, s = 0.0;
    for (std::size_t i = 0; i < 10000; ++i) m += y.data()[c * 10000 + i];
    m /= 10000.0;
    for (std::size_t i = 0; i < 10000; ++i) s += (y.data()[c * 10000 + i] - m) * (y.data()[c * 10000 + i] - m);
    s /= 10000.0;
    CHECK(std::abs(m) < 0.05);
    CHECK(std::abs(s - 1.0) < 0.1);
  }
  // Running statistics move by momentum towards the batch statistics.
  CHECK(bn.running_mean.data()[0] == doctest::Approx(0.3).epsilon(0.03));
  CHECK(bn.running_var.data()[0] == doctest::Approx(0.9 + 0.4).epsilon(0.03));
}

TEST_CASE("batch norm eval mode is repeatable and leaves state alone") {
  std::mt19937_64 rng(20);
  Tensor x = random_tensor({3, 4, 5}, rng);
  auto bn = make_bn(3, 1.5, -0.5);
  bn.running_mean.data()[1] = 0.2;
  bn.running_var.data()[1] = 2.0;
  const auto mean_before = bn.running_mean.clone();
  Tensor a = batch_norm(x, bn, false);
  Tensor b = batch_norm(x, bn, false);
  CHECK(bit_equal(a.data(), b.data()));
  CHECK(bit_equal(bn.running_mean.data(), mean_before.data()));
  const double expect = 1.5 * (x.data()[20] - 0.2) / std::sqrt(2.0 + 1e-5) - 0.5;
  CHECK(a.data()[20] == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("batch norm passes finite-difference checks in both modes") {
  std::mt19937_64 rng(21);
  Tensor x = random_tensor({2, 3, 4}, rng, -1, 1, true);
  auto bn = make_bn(2);
  bn.gamma = random_tensor({2}, rng, 0.5, 1.5, true);
  bn.beta = random_tensor({2}, rng, -0.5, 0.5, true);
  CHECK(grad_check_detailed([&] { return batch_norm(x, bn, true); }, {x, bn.gamma, bn.beta}).max_rel_error <= 1e-6);
  CHECK(grad_check_detailed([&] { return batch_norm(x, bn, false); }, {x, bn.gamma, bn.beta}).max_rel_error <= 1e-6);
}

TEST_CASE("GRU matches a two-step scalar hand calculation") {
  // D = H = 1 with hand-set gate weights.
  GruParams p{Tensor({3, 1}, {0.5, -0.4, 0.8}), Tensor({3, 1}, {0.3, 0.6, -0.7}),
              Tensor({3}, {0.1, 0.0, -0.2}), Tensor({3}, {0.0, 0.2, 0.05})};
  Tensor x({1, 2, 1}, {1.0, -2.0});
  Tensor y = gru(x, p);
  double h = 0.0;
  std::vector<double> expect;
  for (double xv : {1.0, -2.0}) {
    const double r = sigmoid(0.5 * xv + 0.1 + 0.3 * h + 0.0);
    const double z = sigmoid(-0.4 * xv + 0.0 + 0.6 * h + 0.2);
    const double n = std::tanh(0.8 * xv - 0.2 + r * (-0.7 * h + 0.05));
    h = (1.0 - z) * n + z * h;
    expect.push_back(h);
  }
  CHECK(y.data()[0] == doctest::Approx(expect[0]).epsilon(1e-15));
  CHECK(y.data()[1] == doctest::Approx(expect[1]).epsilon(1e-15));
}

TEST_CASE("GRU matches the loop oracle in both directions") {
  std::mt19937_64 rng(22);
  Tensor x = random_tensor({3, 6, 4}, rng);
  const auto p = random_gru(rng, 4, 5);
  CHECK(max_abs_diff(gru(x, p, false).data(), gru_oracle(x, p, false)) <= 1e-13);
  CHECK(max_abs_diff(gru(x, p, true).data(), gru_oracle(x, p, true)) <= 1e-13);
}

TEST_CASE("GRU with zero weights and input is zero") {
  GruParams p{Tensor::zeros({6, 2}), Tensor::zeros({6, 2}), Tensor::zeros({6}), Tensor::zeros({6})};
  CHECK(max_abs(gru(Tensor::zeros({2, 4, 2}), p).data()) == 0.0);
}

TEST_CASE("unidirectional GRU ignores future steps, bidirectional does not") {
  std::mt19937_64 rng(23);
  Tensor x = random_tensor({1, 8, 4}, rng);
  Tensor x2 = x.clone();
  for (std::size_t k = 0; k < 4; ++k) x2.data()[5 * 4 + k] += 0.5;  // step 5
  const auto p = random_gru(rng, 4, 4);
  Tensor a = gru(x, p), b = gru(x2, p);
  for (std::size_t i = 0; i < 5 * 4; ++i) CHECK(a.data()[i] == b.data()[i]);
  CHECK(a.data()[5 * 4] != b.data()[5 * 4]);

  const auto f = random_gru(rng, 4, 2), r = random_gru(rng, 4, 2);
  Tensor c = bidirectional_gru(x, f, r), d = bidirectional_gru(x2, f, r);
  REQUIRE(c.shape() == Shape{1, 8, 4});
  CHECK(c.data()[0 * 4 + 2] != d.data()[0 * 4 + 2]);  // backward half at step 0 sees step 5
  CHECK_THROWS_AS(bidirectional_gru(random_tensor({1, 3, 5}, rng), f, r), ShapeError);
}

TEST_CASE("GRU passes finite-difference checks") {
  std::mt19937_64 rng(24);
  Tensor x = random_tensor({2, 4, 3}, rng, -1, 1, true);
  const auto p = random_gru(rng, 3, 3, true);
  CHECK(grad_check_detailed([&] { return gru(x, p, false); }, {x, p.w_ih, p.w_hh, p.b_ih, p.b_hh}).max_rel_error <= 1e-6);
  CHECK(grad_check_detailed([&] { return gru(x, p, true); }, {x, p.w_ih, p.w_hh, p.b_ih, p.b_hh}).max_rel_error <= 1e-6);
  const auto f = random_gru(rng, 4, 2, true), r = random_gru(rng, 4, 2, true);
  Tensor x4 = random_tensor({2, 3, 4}, rng, -1, 1, true);
  CHECK(grad_check_detailed([&] { return bidirectional_gru(x4, f, r); }, {x4, f.w_ih, f.w_hh, r.w_ih, r.b_hh}).max_rel_error <= 1e-6);
}
