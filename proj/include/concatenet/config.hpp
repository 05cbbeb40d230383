// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_CONFIG_HPP_
#define CONCATENET_CONFIG_HPP_

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "concatenet/model.hpp"
#include "concatenet/trainer.hpp"

namespace concatenet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything `train` needs: model shape, optimizer and data settings, and
/// where the corpus and outputs live.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;

  // Corpus: a manifest of WAV pairs, or a synthetic corpus when empty.
  std::string manifest;
  std::size_t corpus_items = 16;
  double corpus_duration_s = 6.0;
  std::uint64_t corpus_seed = 1;

  std::string output = "model.ckpt";
  std::string log;  // empty: no log file
};

/// Parses `key = value` lines. Blank lines and text after '#' are ignored.
/// Unknown keys, duplicate keys and malformed values throw ConfigError with
/// the line number. Relative paths are resolved against base_dir.
RunConfig parse_config(std::istream& in, const std::string& source, const std::string& base_dir,
                       RunConfig defaults = {});
RunConfig load_config(const std::string& path);

/// Applies one setting; throws ConfigError for unknown keys or bad values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Every recognized key, in documentation order.
const std::vector<std::string>& config_keys();

/// Writes the config back in the same `key = value` format.
void write_config(std::ostream& os, const RunConfig& config);

}  // namespace concatenet

#endif  // CONCATENET_CONFIG_HPP_
