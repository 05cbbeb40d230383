// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Each check is timed against its budget.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "concatenet/checkpoint.hpp"
#include "concatenet/cli.hpp"
#include "concatenet/data.hpp"
#include "concatenet/filterbank.hpp"
#include "concatenet/gradcheck.hpp"
#include "concatenet/layers.hpp"
#include "concatenet/masking.hpp"
#include "concatenet/metrics.hpp"
#include "concatenet/model.hpp"
#include "concatenet/ops.hpp"
#include "concatenet/stft.hpp"
#include "concatenet/trainer.hpp"

#ifndef CONCATENET_SOURCE_DIR
#define CONCATENET_SOURCE_DIR "."
#endif

using namespace concatenet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::vector<double> gaussian(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool grad = true) {
  Tensor t(std::move(shape), grad);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : t.data()) v = u(rng);
  return t;
}

std::span<const double> slice(std::span<const double> x, StftConfig::Range r) {
  return x.subspan(r.begin, r.end - r.begin);
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("concatenet_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// 1. STFT round trip on one second of noise.
Outcome stft_round_trip() {
  std::mt19937_64 rng(1);
  const Waveform x{gaussian(48000, rng), 48000.0};
  const StftConfig cfg;
  const Waveform y = istft(stft(x, cfg));
  const auto r = cfg.interior(cfg.frames_for(x.size()));
  double num = 0.0, den = 0.0;
  for (std::size_t i = r.begin; i < r.end; ++i) {
    num += (x.samples[i] - y.samples[i]) * (x.samples[i] - y.samples[i]);
    den += x.samples[i] * x.samples[i];
  }
  const double err = std::sqrt(num / den);
  return {err <= 1e-6, fmt("interior relative L2 error %.3g (limit 1e-6)", err)};
}

// 2. Oracle complex mask S / Y reconstructs the speech to the metric cap.
Outcome oracle_mask() {
  std::mt19937_64 rng(2);
  const Waveform s{gaussian(48000, rng), 48000.0};
  Waveform v{gaussian(48000, rng), 48000.0};
  Waveform y = s;
  for (std::size_t i = 0; i < y.size(); ++i) y.samples[i] += v.samples[i];
  const auto S = stft(s), Y = stft(y);
  ComplexMask m{Y.frames, Y.bins, std::vector<double>(Y.re.size()), std::vector<double>(Y.re.size())};
  double min_mag = 1e300;
  for (std::size_t i = 0; i < Y.re.size(); ++i) {
    const std::complex<double> yy(Y.re[i], Y.im[i]), ss(S.re[i], S.im[i]);
    min_mag = std::min(min_mag, std::abs(yy));
    const auto q = ss / yy;
    m.re[i] = q.real();
    m.im[i] = q.imag();
  }
  if (!(min_mag > 1e-8)) return {false, fmt("mixture bin magnitude %.3g not above 1e-8", min_mag)};
  const Waveform est = istft(apply_complex_mask(Y, m));
  const StftConfig cfg;
  const auto r = cfg.interior(Y.frames);
  const double sdr = metrics::si_sdr(slice(est.samples, r), slice(s.samples, r));
  return {sdr == metrics::kCapDb, fmt("SI-SDR %.6g dB (expected cap %.0f dB)", sdr, metrics::kCapDb)};
}

// 3. Finite-difference checks on every primitive and on the full tiny model.
Outcome gradients() {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  std::string worst_name;
  auto record = [&](const std::string& name, double err) {
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  };
  auto check = [&](const std::string& name, const std::function<Tensor()>& f, std::vector<Tensor> in) {
    const auto r = grad_check_detailed(f, std::move(in));
    char where[160];
    std::snprintf(where, sizeof where, " (input %zu element %zu: analytic %.6g, numeric %.6g)", r.worst_input,
                  r.worst_index, r.worst_analytic, r.worst_numeric);
    record(name + where, r.max_rel_error);
  };

  Tensor x = random_tensor({2, 4, 7}, rng), x2 = random_tensor({2, 4, 7}, rng);
  Tensor w = random_tensor({3, 2, 3, 3}, rng), b = random_tensor({3}, rng);
  Tensor dw = random_tensor({2, 3, 3}, rng), pw = random_tensor({3, 2}, rng);
  check("add", [&] { return ops::add(x, x2); }, {x, x2});
  check("sub", [&] { return ops::sub(x, x2); }, {x, x2});
  check("mul", [&] { return ops::mul(x, x2); }, {x, x2});
  check("scale", [&] { return ops::scale(x, -1.7); }, {x});
  check("square", [&] { return ops::square(x); }, {x});
  check("relu", [&] { return ops::relu(x); }, {x});
  check("tanh", [&] { return ops::tanh(x); }, {x});
  check("sigmoid", [&] { return ops::sigmoid(x); }, {x});
  check("sum", [&] { return ops::sum(x); }, {x});
  check("mean", [&] { return ops::mean(x); }, {x});
  Tensor mm = random_tensor({5, 7}, rng);
  check("matmul_last", [&] { return ops::matmul_last(x, mm); }, {x, mm});
  check("complex_multiply", [&] { return ops::complex_multiply(x, x2); }, {x, x2});
  check("conv2d", [&] { return layers::conv2d_causal(x, w, b, 1); }, {x, w, b});
  check("conv2d stride 2", [&] { return layers::conv2d_causal(x, w, b, 2); }, {x, w, b});
  check("depthwise", [&] { return layers::depthwise_conv_causal(x, dw, 2); }, {x, dw});
  check("transposed", [&] { return layers::depthwise_conv_transposed_freq(x, dw); }, {x, dw});
  check("pointwise", [&] { return layers::pointwise_conv(x, pw, b); }, {x, pw, b});
  layers::BatchNormParams bn{random_tensor({2}, rng), random_tensor({2}, rng), Tensor::zeros({2}),
                             Tensor::full({2}, 1.0)};
  check("batch norm train", [&] { return layers::batch_norm(x, bn, true); }, {x, bn.gamma, bn.beta});
  check("batch norm eval", [&] { return layers::batch_norm(x, bn, false); }, {x, bn.gamma, bn.beta});
  Tensor seq = random_tensor({2, 4, 3}, rng);
  layers::GruParams g{random_tensor({9, 3}, rng), random_tensor({9, 3}, rng), random_tensor({9}, rng),
                      random_tensor({9}, rng)};
  Tensor seq4 = random_tensor({2, 4, 4}, rng);
  auto half_gru = [&] {
    return layers::GruParams{random_tensor({6, 4}, rng), random_tensor({6, 2}, rng), random_tensor({6}, rng),
                             random_tensor({6}, rng)};
  };
  const layers::GruParams fw = half_gru(), bw = half_gru();
  check("gru", [&] { return layers::gru(seq, g); }, {seq, g.w_ih, g.w_hh, g.b_ih, g.b_hh});
  check("gru reverse", [&] { return layers::gru(seq, g, true); }, {seq, g.w_ih, g.w_hh});
  check("bidirectional gru", [&] { return layers::bidirectional_gru(seq4, fw, bw); },
        {seq4, fw.w_ih, fw.w_hh, fw.b_ih, bw.w_ih, bw.w_hh, bw.b_hh});
  const auto fb = build_filterbank({33, 16, 48000.0, 50.0, 23000.0});
  Tensor spec = random_tensor({2, 3, 33}, rng), bands = random_tensor({2, 3, 16}, rng);
  check("filterbank analysis", [&] { return analyze(spec, fb); }, {spec});
  check("filterbank synthesis", [&] { return synthesize(bands, fb); }, {bands});
  const StftConfig small{16, 8};
  Tensor packed = random_tensor({2, 6, 9}, rng);
  check("istft", [&] { return istft_tensor(packed, small); }, {packed});
  const auto ref = gaussian(small.samples_for(6), rng);
  check("si-sdr loss", [&] { return si_sdr_loss(packed, ref, small); }, {packed});

  // Full model at C=8, B=16, depth 2, T=5, K=33, every parameter and the input.
  ConcateNet model(ModelConfig::tiny());
  Tensor out_w = model.nlr.out.weight;
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (double& v : out_w.data()) v = u(rng);
  Tensor y = random_tensor({2, 5, 33}, rng);
  std::vector<Tensor> inputs{y};
  for (const auto& [name, p] : model.params().parameters()) inputs.push_back(p);
  // Calibrate the running statistics on the input, as a trained model would have them. Fresh
  // statistics (mean 0, var 1) shrink the early-layer gradients to the rounding floor.
  model.set_training(true);
  {
    NoGradGuard no_grad;
    for (int i = 0; i < 60; ++i) model.forward(y);
  }
  model.set_training(false);
  check("model (eval)", [&] { return model.forward(y).estimate; }, inputs);
  // In training mode a bias feeding straight into batch norm is cancelled by the mean
  // subtraction, so its exact gradient is zero and finite differences only see rounding.
  // Those are checked for a vanishing analytic gradient instead.
  model.set_training(true);
  std::vector<Tensor> smooth{y}, cancelled;
  for (const auto& [name, p] : model.params().parameters()) {
    const auto cut = name.rfind(".conv.");
    const bool before_bn = cut != std::string::npos && name.ends_with("bias") &&
                           model.params().parameters().count(name.substr(0, cut) + ".bn.weight") == 1;
    (before_bn ? cancelled : smooth).push_back(p);
  }
  check("model (train)", [&] { return model.forward(y).estimate; }, smooth);
  model.params().zero_grad();
  ops::sum(ops::square(model.forward(y).estimate)).backward();
  double largest = 0.0, leak = 0.0;
  for (const auto& [name, p] : model.params().parameters())
    if (p.has_grad())
      for (double g : p.grad()) largest = std::max(largest, std::abs(g));
  for (const Tensor& p : cancelled)
    for (double g : p.grad()) leak = std::max(leak, std::abs(g));
  leak /= largest;
  model.params().zero_grad();
  return {worst <= 1e-4 && leak <= 1e-12,
          fmt("max relative error %.3g (limit 1e-4), worst: ", worst) + worst_name + ", " +
              std::to_string(model.parameter_count()) + " model parameters covered, " +
              std::to_string(cancelled.size()) +
              fmt(" pre-norm biases with gradient %.2g of the largest (limit 1e-12)", leak)};
}

// 4. Perturbing frame 20 leaves earlier output frames untouched.
Outcome causality() {
  ConcateNet model{ModelConfig{}};
  std::mt19937_64 rng(4);
  // Nonzero refinement output layer so every stage is on the signal path.
  Tensor out_w = model.nlr.out.weight;
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (double& v : out_w.data()) v = u(rng);
  const Waveform x{gaussian(48000, rng), 48000.0};
  Tensor y = pack_complex(stft(x));
  Tensor y2 = y.clone();
  const std::size_t frames = y.size(1), bins = y.size(2);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t k = 0; k < bins; ++k) y2.data()[(c * frames + 20) * bins + k] += 0.5;
  NoGradGuard no_grad;
  model.set_training(false);
  const auto a = model.forward(y).estimate, b = model.forward(y2).estimate;
  double before = 0.0, at = 0.0;
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t k = 0; k < bins; ++k) {
        const std::size_t i = (c * frames + t) * bins + k;
        const double d = std::abs(a.data()[i] - b.data()[i]);
        if (t < 20) before = std::max(before, d);
        if (t == 20) at = std::max(at, d);
      }
  return {before <= 1e-6 && at > 0.0,
          fmt("max change in frames 0-19: %.3g (limit 1e-6); at frame 20: %.3g", before, at)};
}

// 5. Deep filter with P = Q = 0 against element-wise masking and a nested-loop sum.
Outcome deep_filter_equivalence() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto y = Spectrogram::zeros(4, 3, 4, 2);
    y.re = gaussian(12, rng);
    y.im = gaussian(12, rng);
    Tensor coeffs = random_tensor({1, 1, 2, 4, 3}, rng, false);
    const auto df = deep_filter(y, coeffs, {});
    const auto masked = apply_complex_mask(y, ComplexMask::from_packed(coeffs.reshape({2, 4, 3})));
    for (std::size_t m = 0; m < 4; ++m)
      for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t i = m * 3 + k;
        std::complex<double> acc = 0.0;
        for (int p = 0; p <= 0; ++p)
          for (int q = 0; q <= 0; ++q) {
            const std::complex<double> c(coeffs.data()[i], coeffs.data()[12 + i]);
            acc += c * std::complex<double>(y.re[i], y.im[i]);
          }
        worst = std::max({worst, std::abs(acc - std::complex<double>(df.re[i], df.im[i])),
                          std::abs(std::complex<double>(masked.re[i] - df.re[i], masked.im[i] - df.im[i]))});
      }
  }
  return {worst <= 1e-10, fmt("max deviation %.3g over 100 random 4x3 spectrograms (limit 1e-10)", worst)};
}

// 6. Tiny model overfits one synthetic pair.
Outcome overfit() {
  const ModelConfig mc = ModelConfig::tiny();
  ConcateNet model(mc);
  const auto item = data::synth_item(7, 0, 0.5, mc.sample_rate);
  TrainConfig tc;
  tc.lr = 1e-3;
  tc.batch_size = 1;
  tc.segment_s = 0.5;  // the whole item: every step sees the same pair
  tc.steps = 500;
  tc.snr_low_db = 0.0;
  tc.snr_high_db = 0.0;
  Trainer trainer(model, {item}, tc);
  const auto ex = trainer.example(0, 0);
  for (std::uint64_t i = 0; i < tc.steps; ++i) trainer.step();

  model.set_training(false);
  NoGradGuard no_grad;
  const auto cfg = mc.stft();
  const Tensor est = istft_tensor(model.forward(pack_complex(stft(ex.mixture, cfg))).estimate, cfg);
  const auto r = cfg.interior(cfg.frames_for(ex.mixture.size()));
  const double model_sdr = metrics::si_sdr(slice(est.data(), r), slice(ex.speech.samples, r));
  const double mix_sdr = metrics::si_sdr(slice(ex.mixture.samples, r), slice(ex.speech.samples, r));
  const double gain = model_sdr - mix_sdr;
  return {gain >= 5.0, fmt("SI-SDR %.2f dB vs mixture %.2f dB: gain %.2f dB (need >= 5)", model_sdr, mix_sdr, gain)};
}

// 7. Refinement ablation.
Outcome ablation() {
  ConcateNet model{ModelConfig{}};
  std::mt19937_64 rng(8);
  const Waveform x{gaussian(24000, rng), 48000.0};
  const Tensor y = pack_complex(stft(x));
  NoGradGuard no_grad;
  ForwardOptions off;
  off.nlr_enabled = false;
  const auto without = model.forward(y, off);
  const Tensor mask_only = ops::complex_multiply(without.mask, y);
  bool bit_equal = true;
  for (std::size_t i = 0; i < mask_only.numel(); ++i) bit_equal = bit_equal && mask_only.data()[i] == without.estimate.data()[i];
  // The refinement output layer starts at zero; make sure it is.
  Tensor out_w = model.nlr.out.weight, out_b = model.nlr.out.bias;
  std::fill(out_w.data().begin(), out_w.data().end(), 0.0);
  std::fill(out_b.data().begin(), out_b.data().end(), 0.0);
  const auto with = model.forward(y);
  double diff = 0.0;
  for (std::size_t i = 0; i < with.estimate.numel(); ++i)
    diff = std::max(diff, std::abs(with.estimate.data()[i] - without.estimate.data()[i]));
  return {bit_equal && diff <= 1e-6,
          std::string("disabled path ") + (bit_equal ? "bit-equals" : "DIFFERS from") +
              " the mask-only product; " + fmt("enabled vs disabled with zero final layer: %.3g (limit 1e-6)", diff)};
}

// 8. Mixer accuracy, including the white-noise test recipe.
Outcome mixer() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> snr(-5.0, 15.0), scale(0.01, 10.0);
  std::uniform_int_distribution<std::size_t> len(1000, 20000);
  double worst = 0.0, worst_noise = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = len(rng);
    Waveform s{gaussian(n, rng), 48000.0}, v{gaussian(n + 100, rng), 48000.0};
    const double a = scale(rng);
    for (double& e : v.samples) e *= a;
    const double target = snr(rng);
    const bool recipe = i % 2 == 1;
    const auto mixed = recipe ? data::mix_at_snr(data::test_mixture_recipe(s, v, target, i))
                              : data::mix_at_snr({s, v, target});
    worst = std::max(worst, std::abs(metrics::snr_db(mixed.speech.samples, mixed.background.samples) - target));
    if (recipe) {
      std::vector<double> clean(n);
      for (std::size_t k = 0; k < n; ++k) clean[k] = mixed.speech.samples[k] + mixed.background.samples[k];
      worst_noise = std::max(worst_noise, std::abs(metrics::snr_db(clean, mixed.noise.samples) - 20.0));
      for (std::size_t k = 0; k < n; k += 101) {
        const double sum = clean[k] + mixed.noise.samples[k];
        worst_noise = std::max(worst_noise, std::abs(sum - mixed.mixture.samples[k]));
      }
    }
  }
  return {worst <= 0.01 && worst_noise <= 0.01,
          fmt("max SNR error %.3g dB, max white-noise level error %.3g dB (limit 0.01)", worst, worst_noise)};
}

// 9. SI-SDR analytics.
Outcome metric_analytics() {
  std::mt19937_64 rng(10);
  auto s = gaussian(10000, rng);
  auto n = gaussian(10000, rng);
  double sn = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sn += s[i] * n[i];
    ss += s[i] * s[i];
  }
  for (std::size_t i = 0; i < s.size(); ++i) n[i] -= sn / ss * s[i];
  double nn = 0.0;
  for (double v : n) nn += v * v;
  const double g = std::sqrt(ss / nn / 100.0);  // 20 dB
  std::vector<double> est(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) est[i] = s[i] + g * n[i];
  const double base = metrics::si_sdr(est, s);
  double drift = 0.0;
  for (double a : {1e-3, 0.5, -1.0, 7.0, 1e4}) {
    std::vector<double> scaled(est);
    for (double& v : scaled) v *= a;
    drift = std::max(drift, std::abs(metrics::si_sdr(scaled, s) - base));
  }
  return {drift <= 1e-9 && std::abs(base - 20.0) <= 1e-6,
          fmt("orthogonal-noise case %.9f dB (expect 20 +- 1e-6); scale drift %.3g dB (limit 1e-9)", base, drift)};
}

// 10. Stage shapes at the default configuration for one second of audio.
Outcome shapes() {
  ConcateNet model{ModelConfig{}};
  std::mt19937_64 rng(11);
  const Waveform x{gaussian(48000, rng), 48000.0};
  std::vector<std::pair<std::string, Shape>> trace;
  ForwardOptions opt;
  opt.trace = &trace;
  NoGradGuard no_grad;
  model.forward(pack_complex(stft(x)), opt);
  const std::vector<std::pair<std::string, Shape>> expect = {
      {"input", {64, 45, 1025}},    {"filterbank", {64, 45, 256}}, {"encoder.0", {64, 45, 128}},
      {"encoder.1", {64, 45, 64}},  {"encoder.2", {64, 45, 32}},   {"bottleneck", {64, 45, 32}},
      {"decoder.0", {64, 45, 64}},  {"decoder.1", {64, 45, 128}},  {"decoder.2", {64, 45, 256}},
      {"mask", {2, 45, 1025}},      {"estimate", {2, 45, 1025}}};
  std::string ladder;
  for (const auto& [name, shape] : trace) {
    if (name.rfind("encoder", 0) == 0 || name.rfind("decoder", 0) == 0 || name == "filterbank") {
      ladder += (ladder.empty() ? "" : "->") + std::to_string(shape[2]);
    }
  }
  std::string mask;
  for (const auto& [name, shape] : trace)
    if (name == "mask") mask = shape_str(shape);
  return {trace == expect, "band ladder " + ladder + ", mask " + mask};
}

// 11. Parameter accounting through `info`.
Outcome parameters() {
  const auto dir = scratch("info");
  ConcateNet model{ModelConfig{}};
  save_checkpoint((dir / "m.ckpt").string(), model, {});
  std::ostringstream o1, o2, err;
  const int c1 = run_cli({"info", "--model", (dir / "m.ckpt").string()}, o1, err);
  ConcateNet again{ModelConfig{}};
  save_checkpoint((dir / "m2.ckpt").string(), again, {});
  const int c2 = run_cli({"info", "--model", (dir / "m2.ckpt").string()}, o2, err);
  // Everything after the checkpoint path line must match.
  const auto body = [](const std::string& s) { return s.substr(s.find('\n') + 1); };
  const bool deterministic = body(o1.str()) == body(o2.str());
  // Sum the per-submodule lines and compare with the printed and recounted totals.
  std::istringstream is(o1.str());
  std::size_t sum = 0, total = 0;
  bool in_params = false;
  for (std::string line; std::getline(is, line);) {
    if (line == "parameters:") {
      in_params = true;
      continue;
    }
    if (line.rfind("total ", 0) == 0) {
      total = std::stoul(line.substr(6));
      in_params = false;
    } else if (in_params) {
      std::istringstream ls(line);
      std::string group;
      std::size_t n = 0;
      ls >> group >> n;
      sum += n;
    }
  }
  std::size_t recount = 0;
  for (const auto& [name, t] : model.params().parameters()) recount += t.numel();
  std::ifstream readme(fs::path(CONCATENET_SOURCE_DIR) / "README.md");
  const std::string doc((std::istreambuf_iterator<char>(readme)), std::istreambuf_iterator<char>());
  const bool documented = doc.find(std::to_string(total)) != std::string::npos;
  const bool ok = c1 == 0 && c2 == 0 && deterministic && sum == total && total == recount && documented;
  return {ok, "total " + std::to_string(total) + ", submodule sum " + std::to_string(sum) + ", recount " +
                  std::to_string(recount) + (deterministic ? ", deterministic" : ", NOT deterministic") +
                  (documented ? ", documented in README" : ", missing from README")};
}

// 12. Checkpoint round trip and resume.
Outcome checkpoint_resume() {
  const auto dir = scratch("resume");
  const auto corpus = data::synth_corpus(12, 2, 0.25);
  TrainConfig tc;
  tc.batch_size = 2;
  tc.segment_s = 0.1;
  tc.seed = 5;
  tc.steps = 3;

  ConcateNet straight(ModelConfig::tiny());
  Trainer ts(straight, corpus, tc);
  for (int i = 0; i < 2; ++i) ts.step();
  ts.save((dir / "two.ckpt").string(), 0.0);
  const double uninterrupted = ts.step().loss;

  const auto data = read_checkpoint((dir / "two.ckpt").string());
  auto loaded = std::make_unique<ConcateNet>(data.config);
  load_state(*loaded, data);
  // Bit-exact state after the round trip.
  TrainingMeta meta;
  auto reloaded = load_model((dir / "two.ckpt").string(), &meta);
  save_checkpoint((dir / "again.ckpt").string(), *reloaded, meta, &*data.optimizer);
  std::ifstream f1(dir / "two.ckpt", std::ios::binary), f2(dir / "again.ckpt", std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  const bool bit_exact = b1 == b2;

  Trainer tr(*loaded, corpus, tc);
  tr.restore(data);
  const double resumed = tr.step().loss;
  const double diff = std::abs(resumed - uninterrupted);
  return {bit_exact && diff <= 1e-7, std::string(bit_exact ? "save->load->save bit-exact" : "round trip NOT bit-exact") +
                                         fmt("; step-3 loss %.12g vs %.12g, diff %.3g (limit 1e-7)", uninterrupted,
                                             resumed, diff)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  Outcome (*run)();
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "STFT round trip", 1.0, stft_round_trip},
      {2, "oracle-mask reconstruction", 1.0, oracle_mask},
      {3, "gradient correctness", 120.0, gradients},
      {4, "end-to-end causality", 60.0, causality},
      {5, "deep-filter equivalence", 60.0, deep_filter_equivalence},
      {6, "overfit smoke test", 600.0, overfit},
      {7, "ablation consistency", 60.0, ablation},
      {8, "mixer accuracy", 60.0, mixer},
      {9, "metric analytics", 60.0, metric_analytics},
      {10, "shape contract", 60.0, shapes},
      {11, "parameter accounting", 60.0, parameters},
      {12, "checkpoint round trip", 60.0, checkpoint_resume},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s [%2d] %s: %s; %.2f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", EXCEEDED");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
  return failures == 0 ? 0 : 1;
}
