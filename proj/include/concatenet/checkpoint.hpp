// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_CHECKPOINT_HPP_
#define CONCATENET_CHECKPOINT_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "concatenet/model.hpp"
#include "concatenet/optim.hpp"

namespace concatenet {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout (all integers little-endian):
//   "CNETCKPT" | u32 version | u64 header_len | header JSON
//   u64 record_count | records...
// Record: u32 name_len | name | u8 dtype (1 = f32, 2 = f64) | u32 ndim |
//         u64 dims[ndim] | scalars (little-endian IEEE 754)
// Optimizer moments are stored as records named "optim.m/<param>" and
// "optim.v/<param>".
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class ScalarType : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

struct TrainingMeta {
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  bool nlr_enabled = true;
  double last_loss = 0.0;
};

struct CheckpointData {
  ModelConfig config;
  TrainingMeta meta;
  std::map<std::string, Tensor> state;
  std::optional<AdamState> optimizer;
};

/// Writes model state (and optionally optimizer state) atomically. kFloat64
/// preserves training state bit-exactly; kFloat32 halves the size for
/// inference exports.
void save_checkpoint(const std::string& path, const ConcateNet& model, const TrainingMeta& meta,
                     const AdamState* optimizer = nullptr,
                     ScalarType scalar_type = ScalarType::kFloat64);

/// Parses and validates a checkpoint file without touching any model.
CheckpointData read_checkpoint(const std::string& path);

/// Copies state into a model built from the same config. Every expected name
/// must be present with the expected shape; extra names are rejected. The
/// model is only modified once validation has passed.
void load_state(ConcateNet& model, const CheckpointData& data);

/// Builds a model from the checkpoint's config and loads its state.
std::unique_ptr<ConcateNet> load_model(const std::string& path, TrainingMeta* meta = nullptr);

}  // namespace concatenet

#endif  // CONCATENET_CHECKPOINT_HPP_
