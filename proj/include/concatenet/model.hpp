// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_MODEL_HPP_
#define CONCATENET_MODEL_HPP_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "concatenet/filterbank.hpp"
#include "concatenet/layers.hpp"
#include "concatenet/masking.hpp"
#include "concatenet/stft.hpp"
#include "concatenet/tensor.hpp"

namespace concatenet {

struct ModelConfig {
  std::size_t channels = 64;  // C
  std::size_t bands = 256;    // B
  std::size_t depth = 3;      // encoder / decoder modules
  std::size_t nlr_channels = 8;
  std::size_t window_len = 2048;
  std::size_t hop = 1024;
  double sample_rate = 48000.0;
  double f_min = 50.0;
  double f_max = 23000.0;
  std::uint64_t init_seed = 0;

  std::size_t bins() const { return window_len / 2 + 1; }  // K
  std::size_t bottleneck_bands() const { return bands >> depth; }
  StftConfig stft() const { return {window_len, hop}; }
  FilterbankSpec filterbank() const { return {bins(), bands, sample_rate, f_min, f_max}; }
  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;

  /// C = 8, B = 16, depth 2, 64-sample window at 48 kHz (K = 33).
  static ModelConfig tiny();
};

/// Named trainable parameters and non-trainable buffers. Iteration is
/// lexicographic by name.
class ParameterSet {
 public:
  void add_parameter(const std::string& name, const Tensor& t);
  void add_buffer(const std::string& name, const Tensor& t);

  const std::map<std::string, Tensor>& parameters() const { return params_; }
  const std::map<std::string, Tensor>& buffers() const { return buffers_; }
  /// Parameters and buffers together (the checkpointed state).
  std::map<std::string, Tensor> state() const;

  std::size_t parameter_count() const;
  void zero_grad();

 private:
  void check_unique(const std::string& name) const;
  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> buffers_;
};

/// Creates and registers tensors under a dotted name prefix.
class ParamBuilder {
 public:
  ParamBuilder(ParameterSet& set, std::mt19937_64& rng, std::string prefix = {})
      : set_(set), rng_(rng), prefix_(std::move(prefix)) {}

  ParamBuilder child(const std::string& name) const;
  /// Uniform in [-sqrt(1/fan_in), sqrt(1/fan_in)].
  Tensor uniform(const std::string& name, Shape shape, std::size_t fan_in);
  Tensor constant(const std::string& name, Shape shape, double value);
  Tensor buffer(const std::string& name, Shape shape, double value);

 private:
  std::string full(const std::string& name) const;
  ParameterSet& set_;
  std::mt19937_64& rng_;
  std::string prefix_;
};

namespace modules {

/// Full 3x3 causal convolution.
struct Conv2d {
  Tensor weight;
  Tensor bias;
  std::size_t stride = 1;

  static Conv2d create(ParamBuilder b, std::size_t c_in, std::size_t c_out,
                       std::size_t stride = 1);
  Tensor forward(const Tensor& x) const;
};

/// Depthwise 3x3 causal conv followed by a pointwise 1x1 conv. With
/// transposed=true the depthwise stage is the stride-2 frequency upsampler.
struct SeparableConv {
  Tensor depthwise;
  Tensor pointwise;
  Tensor bias;
  std::size_t stride = 1;
  bool transposed = false;

  static SeparableConv create(ParamBuilder b, std::size_t c_in, std::size_t c_out,
                              std::size_t stride = 1, bool transposed = false);
  Tensor forward(const Tensor& x) const;
};

layers::BatchNormParams create_batch_norm(ParamBuilder b, std::size_t channels);

/// conv -> batch norm -> ReLU with a separable conv.
struct CnnBlock {
  SeparableConv conv;
  layers::BatchNormParams bn;

  static CnnBlock create(ParamBuilder b, std::size_t c_in, std::size_t c_out);
  Tensor forward(const Tensor& x, bool training);
};

layers::GruParams create_gru(ParamBuilder b, std::size_t features, std::size_t hidden);

/// Local CNN branch plus a CNN + bidirectional frequency-axis GRU branch,
/// concatenated on channels. Time-causal: the GRU runs within each frame.
struct FParallel {
  CnnBlock local;
  CnnBlock global;
  layers::GruParams fgru_forward;
  layers::GruParams fgru_backward;

  static FParallel create(ParamBuilder b, std::size_t channels);
  Tensor forward(const Tensor& x, bool training);
};

/// Local CNN branch plus a CNN + unidirectional time-axis GRU branch. The GRU
/// uses the band axis as features and shares weights across channels.
struct TParallel {
  CnnBlock local;
  CnnBlock global;
  layers::GruParams tgru;

  static TParallel create(ParamBuilder b, std::size_t channels, std::size_t bands);
  Tensor forward(const Tensor& x, bool training);
};

struct EncoderModule {
  SeparableConv down;
  FParallel fparallel;
  CnnBlock conv0;
  CnnBlock conv1;

  static EncoderModule create(ParamBuilder b, std::size_t channels);
  Tensor forward(const Tensor& x, bool training);
};

struct DecoderModule {
  SeparableConv up;
  FParallel fparallel;
  CnnBlock conv0;
  CnnBlock conv1;

  static DecoderModule create(ParamBuilder b, std::size_t channels);
  Tensor forward(const Tensor& x, bool training);
};

struct InputModule {
  Conv2d conv;
  layers::BatchNormParams bn;

  static InputModule create(ParamBuilder b, std::size_t channels);
  Tensor forward(const Tensor& x, bool training);
};

/// Five conv/BN/ReLU layers (2 -> n, then n -> n) and a final n -> 2 conv.
/// The final conv starts at zero so the refinement begins as the identity.
struct Refinement {
  std::vector<Conv2d> convs;
  std::vector<layers::BatchNormParams> bns;
  Conv2d out;

  static Refinement create(ParamBuilder b, std::size_t channels);
  Tensor forward(const Tensor& s1, bool training);
};

}  // namespace modules

struct ModelOutput {
  Tensor estimate;  // [2, T, K] final estimate
  Tensor mask;      // [2, T, K] complex mask, components in (-1, 1)
  Tensor initial;   // [2, T, K] masked mixture before refinement
};

struct ForwardOptions {
  bool nlr_enabled = true;
  /// Replaces the estimated mask by 1 + 0i (debugging the signal chain).
  bool identity_mask = false;
  /// When set, receives (stage name, output shape) for every stage.
  std::vector<std::pair<std::string, Shape>>* trace = nullptr;
};

/// Dialogue separation network: input module, gammatone analysis, encoder,
/// time-parallel bottleneck, decoder, synthesis + mask, refinement.
class ConcateNet {
 public:
  explicit ConcateNet(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const FilterbankMatrices& filterbank() const { return filterbank_; }

  void set_training(bool training) { training_ = training; }
  bool training() const { return training_; }

  /// mixture is the packed [2, T, K] mixture spectrogram.
  ModelOutput forward(const Tensor& mixture, const ForwardOptions& options = {});

  /// Spectrogram-level inference; runs without recording a graph.
  std::pair<Spectrogram, ComplexMask> separate(const Spectrogram& mixture,
                                                const ForwardOptions& options = {});

  std::size_t parameter_count() const { return params_.parameter_count(); }
  /// Parameter totals keyed by submodule ("input", "encoder.0", ..., "nlr").
  std::map<std::string, std::size_t> parameter_breakdown() const;

  // Stages, exposed for testing.
  modules::InputModule input;
  std::vector<modules::EncoderModule> encoder;
  modules::TParallel bottleneck;
  std::vector<modules::DecoderModule> decoder;
  modules::Conv2d output_conv;
  modules::Refinement nlr;

  Tensor output_module_forward(const Tensor& x);

 private:
  ModelConfig config_;
  ParameterSet params_;
  FilterbankMatrices filterbank_;
  bool training_ = false;
};

/// Submodule group of a parameter name: the first path segment, plus the
/// index for encoder/decoder entries.
std::string parameter_group(const std::string& name);

}  // namespace concatenet

#endif  // CONCATENET_MODEL_HPP_
