// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/model.hpp"

#include <cmath>
#include <stdexcept>

#include "concatenet/ops.hpp"

namespace concatenet {

void ModelConfig::validate() const {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (channels < 4 || channels % 4 != 0) {
    // C/2 features feed a bidirectional GRU with C/4 hidden units per direction.
    throw std::invalid_argument("channels must be a positive multiple of 4, got " +
                                std::to_string(channels));
  }
  if (depth >= 8 * sizeof(std::size_t) || bands % (std::size_t{1} << depth) != 0 ||
      bottleneck_bands() == 0) {
    throw std::invalid_argument("bands (" + std::to_string(bands) +
                                ") must be divisible by 2^depth (depth " +
                                std::to_string(depth) + ")");
  }
  if (nlr_channels == 0) throw std::invalid_argument("nlr_channels must be >= 1");
  stft().validate();
  if (!(sample_rate > 0.0)) throw std::invalid_argument("sample_rate must be positive");
  if (!(f_min > 0.0) || !(f_min < f_max) || f_max > sample_rate / 2.0) {
    throw std::invalid_argument("invalid filterbank range [" + std::to_string(f_min) + ", " +
                                std::to_string(f_max) + "] Hz");
  }
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.channels = 8;
  c.bands = 16;
  c.depth = 2;
  c.window_len = 64;
  c.hop = 32;
  return c;
}

void ParameterSet::check_unique(const std::string& name) const {
  if (params_.count(name) || buffers_.count(name)) {
    throw std::logic_error("duplicate parameter name: " + name);
  }
}

void ParameterSet::add_parameter(const std::string& name, const Tensor& t) {
  check_unique(name);
  params_.emplace(name, t);
}

void ParameterSet::add_buffer(const std::string& name, const Tensor& t) {
  check_unique(name);
  buffers_.emplace(name, t);
}

std::map<std::string, Tensor> ParameterSet::state() const {
  std::map<std::string, Tensor> all = params_;
  all.insert(buffers_.begin(), buffers_.end());
  return all;
}

std::size_t ParameterSet::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, t] : params_) total += t.numel();
  return total;
}

void ParameterSet::zero_grad() {
  for (auto& [name, t] : params_) {
    Tensor handle = t;
    handle.zero_grad();
  }
}

std::string ParamBuilder::full(const std::string& name) const {
  return prefix_.empty() ? name : prefix_ + "." + name;
}

ParamBuilder ParamBuilder::child(const std::string& name) const {
  return ParamBuilder(set_, rng_, full(name));
}

Tensor ParamBuilder::uniform(const std::string& name, Shape shape, std::size_t fan_in) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = dist(rng_);
  Tensor t(std::move(shape), std::move(data), true);
  set_.add_parameter(full(name), t);
  return t;
}

Tensor ParamBuilder::constant(const std::string& name, Shape shape, double value) {
  Tensor t = Tensor::full(std::move(shape), value, true);
  set_.add_parameter(full(name), t);
  return t;
}

Tensor ParamBuilder::buffer(const std::string& name, Shape shape, double value) {
  Tensor t = Tensor::full(std::move(shape), value, false);
  set_.add_buffer(full(name), t);
  return t;
}

namespace modules {

using layers::kKernel;

Conv2d Conv2d::create(ParamBuilder b, std::size_t c_in, std::size_t c_out, std::size_t stride) {
  const std::size_t fan_in = c_in * kKernel * kKernel;
  Conv2d c;
  c.weight = b.uniform("weight", {c_out, c_in, kKernel, kKernel}, fan_in);
  c.bias = b.uniform("bias", {c_out}, fan_in);
  c.stride = stride;
  return c;
}

Tensor Conv2d::forward(const Tensor& x) const {
  return layers::conv2d_causal(x, weight, bias, stride);
}

SeparableConv SeparableConv::create(ParamBuilder b, std::size_t c_in, std::size_t c_out,
                                    std::size_t stride, bool transposed) {
  SeparableConv c;
  c.depthwise = b.child("depthwise").uniform("weight", {c_in, kKernel, kKernel}, kKernel * kKernel);
  auto pw = b.child("pointwise");
  c.pointwise = pw.uniform("weight", {c_out, c_in}, c_in);
  c.bias = pw.uniform("bias", {c_out}, c_in);
  c.stride = stride;
  c.transposed = transposed;
  return c;
}

Tensor SeparableConv::forward(const Tensor& x) const {
  Tensor h = transposed ? layers::depthwise_conv_transposed_freq(x, depthwise)
                        : layers::depthwise_conv_causal(x, depthwise, stride);
  return layers::pointwise_conv(h, pointwise, bias);
}

layers::BatchNormParams create_batch_norm(ParamBuilder b, std::size_t channels) {
  layers::BatchNormParams bn;
  bn.gamma = b.constant("weight", {channels}, 1.0);
  bn.beta = b.constant("bias", {channels}, 0.0);
  bn.running_mean = b.buffer("running_mean", {channels}, 0.0);
  bn.running_var = b.buffer("running_var", {channels}, 1.0);
  return bn;
}

CnnBlock CnnBlock::create(ParamBuilder b, std::size_t c_in, std::size_t c_out) {
  return {SeparableConv::create(b.child("conv"), c_in, c_out),
          create_batch_norm(b.child("bn"), c_out)};
}

Tensor CnnBlock::forward(const Tensor& x, bool training) {
  return ops::relu(layers::batch_norm(conv.forward(x), bn, training));
}

layers::GruParams create_gru(ParamBuilder b, std::size_t features, std::size_t hidden) {
  layers::GruParams g;
  g.w_ih = b.uniform("w_ih", {3 * hidden, features}, features);
  g.w_hh = b.uniform("w_hh", {3 * hidden, hidden}, hidden);
  g.b_ih = b.constant("b_ih", {3 * hidden}, 0.0);
  g.b_hh = b.constant("b_hh", {3 * hidden}, 0.0);
  return g;
}

FParallel FParallel::create(ParamBuilder b, std::size_t channels) {
  const std::size_t half = channels / 2;
  auto g = b.child("fgru");
  return {CnnBlock::create(b.child("local"), channels, half),
          CnnBlock::create(b.child("global"), channels, half),
          create_gru(g.child("forward"), half, half / 2),
          create_gru(g.child("backward"), half, half / 2)};
}

Tensor FParallel::forward(const Tensor& x, bool training) {
  if (x.dim() != 3 || x.size(0) % 2 != 0) {
    throw ShapeError("F-parallel module needs an even channel count, got " + shape_str(x.shape()));
  }
  Tensor l = local.forward(x, training);
  Tensor g = global.forward(x, training);
  // [C/2, T, F] -> [T, F, C/2]: one frequency sequence per frame.
  Tensor seq = ops::permute3(g, {1, 2, 0});
  Tensor rnn = layers::bidirectional_gru(seq, fgru_forward, fgru_backward);
  return ops::concat0(l, ops::permute3(rnn, {2, 0, 1}));
}

TParallel TParallel::create(ParamBuilder b, std::size_t channels, std::size_t bands) {
  const std::size_t half = channels / 2;
  return {CnnBlock::create(b.child("local"), channels, half),
          CnnBlock::create(b.child("global"), channels, half),
          create_gru(b.child("tgru"), bands, bands)};
}

Tensor TParallel::forward(const Tensor& x, bool training) {
  if (x.dim() != 3 || x.size(2) != tgru.w_ih.size(1)) {
    throw ShapeError("T-parallel module expects " + std::to_string(tgru.w_ih.size(1)) +
                     " bands, got " + shape_str(x.shape()));
  }
  Tensor l = local.forward(x, training);
  // [C/2, T, F_b] is already [sequences, steps, features].
  Tensor g = layers::gru(global.forward(x, training), tgru, false);
  return ops::concat0(l, g);
}

EncoderModule EncoderModule::create(ParamBuilder b, std::size_t channels) {
  return {SeparableConv::create(b.child("down"), channels, channels, 2),
          FParallel::create(b.child("fparallel"), channels),
          CnnBlock::create(b.child("conv.0"), channels, channels),
          CnnBlock::create(b.child("conv.1"), channels, channels)};
}

Tensor EncoderModule::forward(const Tensor& x, bool training) {
  if (x.dim() != 3 || x.size(2) % 2 != 0) {
    throw ShapeError("encoder module needs an even band count, got " + shape_str(x.shape()));
  }
  Tensor h = down.forward(x);
  h = fparallel.forward(h, training);
  h = conv0.forward(h, training);
  return conv1.forward(h, training);
}

DecoderModule DecoderModule::create(ParamBuilder b, std::size_t channels) {
  return {SeparableConv::create(b.child("up"), channels, channels, 2, true),
          FParallel::create(b.child("fparallel"), channels),
          CnnBlock::create(b.child("conv.0"), channels, channels),
          CnnBlock::create(b.child("conv.1"), channels, channels)};
}

Tensor DecoderModule::forward(const Tensor& x, bool training) {
  Tensor h = up.forward(x);
  h = fparallel.forward(h, training);
  h = conv0.forward(h, training);
  return conv1.forward(h, training);
}

InputModule InputModule::create(ParamBuilder b, std::size_t channels) {
  return {Conv2d::create(b.child("conv"), 2, channels), create_batch_norm(b.child("bn"), channels)};
}

Tensor InputModule::forward(const Tensor& x, bool training) {
  if (x.dim() != 3 || x.size(0) != 2) {
    throw ShapeError("input module expects a packed [2, T, K] mixture, got " +
                     shape_str(x.shape()));
  }
  return ops::relu(layers::batch_norm(conv.forward(x), bn, training));
}

Refinement Refinement::create(ParamBuilder b, std::size_t channels) {
  Refinement r;
  for (std::size_t i = 0; i < 5; ++i) {
    auto layer = b.child(std::to_string(i));
    r.convs.push_back(Conv2d::create(layer.child("conv"), i == 0 ? 2 : channels, channels));
    r.bns.push_back(create_batch_norm(layer.child("bn"), channels));
  }
  auto out = b.child("out").child("conv");
  r.out.weight = out.constant("weight", {2, channels, kKernel, kKernel}, 0.0);
  r.out.bias = out.constant("bias", {2}, 0.0);
  return r;
}

Tensor Refinement::forward(const Tensor& s1, bool training) {
  if (s1.dim() != 3 || s1.size(0) != 2) {
    throw ShapeError("refinement expects a packed [2, T, K] estimate, got " +
                     shape_str(s1.shape()));
  }
  Tensor h = s1;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    h = ops::relu(layers::batch_norm(convs[i].forward(h), bns[i], training));
  }
  return out.forward(h);
}

}  // namespace modules

ConcateNet::ConcateNet(const ModelConfig& config) : config_(config) {
  config_.validate();
  filterbank_ = build_filterbank(config_.filterbank());

  std::mt19937_64 rng(config_.init_seed);
  ParamBuilder root(params_, rng);
  const std::size_t c = config_.channels;
  input = modules::InputModule::create(root.child("input"), c);
  for (std::size_t i = 0; i < config_.depth; ++i) {
    encoder.push_back(modules::EncoderModule::create(root.child("encoder." + std::to_string(i)), c));
  }
  bottleneck = modules::TParallel::create(root.child("bottleneck.tparallel"), c,
                                          config_.bottleneck_bands());
  for (std::size_t i = 0; i < config_.depth; ++i) {
    decoder.push_back(modules::DecoderModule::create(root.child("decoder." + std::to_string(i)), c));
  }
  output_conv = modules::Conv2d::create(root.child("output.conv"), c, 2);
  nlr = modules::Refinement::create(root.child("nlr"), config_.nlr_channels);
}

Tensor ConcateNet::output_module_forward(const Tensor& x) {
  return ops::tanh(output_conv.forward(synthesize(x, filterbank_)));
}

ModelOutput ConcateNet::forward(const Tensor& mixture, const ForwardOptions& options) {
  if (mixture.dim() != 3 || mixture.size(0) != 2 || mixture.size(2) != config_.bins()) {
    throw ShapeError("model expects a packed [2, T, " + std::to_string(config_.bins()) +
                     "] mixture, got " + shape_str(mixture.shape()));
  }
  auto note = [&](const std::string& stage, const Tensor& t) {
    if (options.trace) options.trace->emplace_back(stage, t.shape());
  };

  ModelOutput out;
  if (options.identity_mask) {
    const std::size_t plane = mixture.size(1) * mixture.size(2);
    std::vector<double> ones(2 * plane, 0.0);
    std::fill(ones.begin(), ones.begin() + static_cast<std::ptrdiff_t>(plane), 1.0);
    out.mask = Tensor(mixture.shape(), std::move(ones));
  } else {
    Tensor h = input.forward(mixture, training_);
    note("input", h);
    h = analyze(h, filterbank_);
    note("filterbank", h);
    for (std::size_t i = 0; i < encoder.size(); ++i) {
      h = encoder[i].forward(h, training_);
      note("encoder." + std::to_string(i), h);
    }
    h = bottleneck.forward(h, training_);
    note("bottleneck", h);
    for (std::size_t i = 0; i < decoder.size(); ++i) {
      h = decoder[i].forward(h, training_);
      note("decoder." + std::to_string(i), h);
    }
    out.mask = output_module_forward(h);
    note("mask", out.mask);
  }
  out.initial = ops::complex_multiply(out.mask, mixture);
  out.estimate = options.nlr_enabled ? ops::add(out.initial, nlr.forward(out.initial, training_))
                                     : out.initial;
  note("estimate", out.estimate);
  return out;
}

std::pair<Spectrogram, ComplexMask> ConcateNet::separate(const Spectrogram& mixture,
                                                         const ForwardOptions& options) {
  NoGradGuard no_grad;
  ModelOutput out = forward(pack_complex(mixture), options);
  return {unpack_complex(out.estimate, {mixture.window_len, mixture.hop}, mixture.sample_rate),
          ComplexMask::from_packed(out.mask)};
}

std::string parameter_group(const std::string& name) {
  const auto dot = name.find('.');
  const std::string head = name.substr(0, dot);
  if ((head == "encoder" || head == "decoder") && dot != std::string::npos) {
    const auto next = name.find('.', dot + 1);
    return name.substr(0, next);
  }
  return head;
}

std::map<std::string, std::size_t> ConcateNet::parameter_breakdown() const {
  std::map<std::string, std::size_t> groups;
  for (const auto& [name, t] : params_.parameters()) groups[parameter_group(name)] += t.numel();
  return groups;
}

}  // namespace concatenet
