#pragma once

#include "gagnet/tensor.hpp"

#include <string>
#include <vector>

namespace gagnet {

/// Mono sampled signal. Amplitudes are nominally in [-1, 1]; values are clamped
/// only when quantizing to 16-bit PCM on write.
struct WaveBuffer {
  std::vector<Real> samples;
  int sample_rate = 16000;

  Index size() const { return static_cast<Index>(samples.size()); }
};

/// Reads a RIFF WAVE file. Only uncompressed 16-bit little-endian mono PCM is
/// accepted; anything else raises DataError with the offending field.
WaveBuffer read_wav(const std::string& path);

/// Writes 16-bit mono PCM. Samples are clamped to [-1, 1] before quantization.
void write_wav(const std::string& path, const WaveBuffer& wave);

}  // namespace gagnet
