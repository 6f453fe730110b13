#pragma once

#include "gagnet/tensor.hpp"
#include "gagnet/wav.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gagnet {

/// One noisy/clean pair, fully determined: which files, where the noise cut
/// starts, the target SNR, and the joint rescale applied against clipping.
struct MixSpec {
  std::string clean_path;
  std::string noise_path;
  Real snr_db = 0.0;
  Index offset = 0;
  Real rescale = 1.0;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::string split;  // train | val | test
  Index chunk_samples = 16000;
  int sample_rate = 16000;
  std::vector<MixSpec> items;
};

/// Gain g applied to the noise so that 10 log10(E_clean / E_scaled_noise) equals snr_db.
Real mix_gain(const WaveBuffer& clean, const WaveBuffer& noise, Real snr_db);

/// clean + g * noise at the requested component SNR. Lengths must match and
/// both signals need nonzero energy; non-finite SNR is rejected.
WaveBuffer mix_at_snr(const WaveBuffer& clean, const WaveBuffer& noise, Real snr_db);

/// Realizes a MixSpec: loads both files, cuts, mixes, applies the recorded
/// rescale. Returns (noisy, clean), both chunk_samples long.
std::pair<WaveBuffer, WaveBuffer> synth_pair(const MixSpec& spec, Index chunk_samples);

struct ManifestRequest {
  std::vector<std::string> clean_pool;
  std::vector<std::string> noise_pool;
  Index pairs = 0;
  Index chunk_samples = 16000;
  int sample_rate = 16000;
  std::string split;       // "train" draws SNR uniformly from [snr_low, snr_high]
  Real snr_low = -5.0;     // train range
  Real snr_high = 0.0;
  std::vector<Real> snr_grid = {-3.0, 0.0, 3.0, 6.0};  // non-train splits cycle this grid
};

/// Deterministic manifest from (request, seed). Computes each pair once to
/// record the anti-clipping rescale.
Manifest build_manifest(const ManifestRequest& req, std::uint64_t seed);

std::string serialize_manifest(const Manifest& m);
Manifest parse_manifest(const std::string& text);
Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& m);

/// Procedural desk-scale corpus: tone/chirp utterances and white/babble-like
/// noise tracks, so no external data is needed.
WaveBuffer toy_clean_utterance(std::uint64_t seed, Index len, int sample_rate);
WaveBuffer toy_noise_track(std::uint64_t seed, Index len, int sample_rate, bool babble);

}  // namespace gagnet
