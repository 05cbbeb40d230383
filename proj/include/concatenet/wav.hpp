// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_WAV_HPP_
#define CONCATENET_WAV_HPP_

#include <stdexcept>
#include <string>

#include "concatenet/stft.hpp"

namespace concatenet {

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SampleFormat { kPcm16, kFloat32 };

/// Reads a RIFF/WAVE file with 16-bit PCM or 32-bit float samples
/// (WAVE_FORMAT_EXTENSIBLE accepted). Multi-channel files yield their first
/// channel. PCM16 is scaled by 1/32768.
Waveform read_wav(const std::string& path);

/// Writes mono audio. The file is written under a temporary name and renamed
/// into place, so a failed write leaves no partial output.
void write_wav(const std::string& path, const Waveform& wav,
               SampleFormat format = SampleFormat::kFloat32);

}  // namespace concatenet

#endif  // CONCATENET_WAV_HPP_
