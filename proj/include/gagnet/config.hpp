#pragma once

#include "gagnet/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gagnet {

enum class ReconMode { kCrm, kMag, kCom, kPhasen };
enum class NormKind { kCumulative, kInstance };

/// Every architectural and training hyperparameter. Parsed from a flat
/// key = value text file; unknown keys are rejected.
struct ModelConfig {
  // dsp front-end
  int sample_rate = 16000;
  Index n_fft = 320;
  Index frame_len = 320;
  Index hop = 160;
  Real beta = 0.5;

  // architecture
  Index channels = 64;    // C, 2-d feature channels
  Index feat_dim = 256;   // D, width after the 1-d GLU
  Index squeeze_dim = 64; // d, S-TCM bottleneck
  Index p = 2;            // S-TCM groups per temporal path
  Index q = 3;            // stacked glance-gaze stages
  std::vector<Index> unet_depths = {4, 3, 2, 1};  // one entry per REL
  Index kernel_t = 2;
  Index kernel_f = 3;
  Index stride_f = 2;
  Index unet_kernel_f = 3;
  std::vector<Index> dilations = {1, 2, 5, 9};
  Index stcm_per_group = 4;
  ReconMode recon = ReconMode::kCrm;
  NormKind norm = NormKind::kCumulative;
  Real lambda_mid = 0.1;
  Real lambda_last = 1.0;

  // training
  Real lr = 5e-4;
  Index batch = 2;
  Index epochs = 2;
  Index max_steps = 0;  // 0 = bounded by epochs only
  std::uint64_t seed = 17;
  Real chunk_seconds = 1.0;
  std::string train_manifest;
  std::string val_manifest;
  std::string ckpt_dir = "runs";

  // procedural mixing
  Index mix_clean_count = 24;
  Index mix_noise_count = 8;
  Index mix_train_pairs = 120;
  Index mix_val_pairs = 16;
  Index mix_eval_pairs = 12;
  Real snr_train_low = -5.0;
  Real snr_train_high = 0.0;
  std::vector<Real> snr_eval_grid = {-3.0, 0.0, 3.0, 6.0};

  Index f_bins() const { return n_fft / 2 + 1; }
  Index chunk_samples() const { return static_cast<Index>(chunk_seconds * sample_rate + 0.5); }
  std::vector<Real> lambdas() const;

  /// Field-level sanity checks (positivity, ranges). Shape feasibility of the
  /// frequency chain is checked when the model plan is built.
  void validate() const;
};

ModelConfig parse_config_text(const std::string& text);
ModelConfig load_config(const std::string& path);
std::string serialize_config(const ModelConfig& cfg);

std::string recon_name(ReconMode m);
std::string norm_name(NormKind n);

}  // namespace gagnet
