#pragma once

#include "gagnet/config.hpp"
#include "gagnet/mix.hpp"
#include "gagnet/model.hpp"
#include "gagnet/params.hpp"

#include <string>
#include <vector>

namespace gagnet {

struct StepLog {
  Index step = 0;
  Real total = 0.0;
  std::vector<Real> per_stage;
};

struct TrainResult {
  std::vector<StepLog> log;
  std::string final_checkpoint;
  ParamStore store;
};

/// Deterministic multi-stage training: synthesizes pairs from the manifest,
/// runs weighted-MSE Adam steps, checkpoints at epoch boundaries and writes a
/// per-step loss curve next to the checkpoints. A non-finite loss raises
/// NumericError.
TrainResult train_model(const ModelConfig& cfg, const Manifest& manifest, const std::string& ckpt_dir,
                        const std::string& resume_ckpt = "");

struct EvalRow {
  std::string id;
  Real snr_db = 0.0;
  Real si_sdr_enh = 0.0;
  Real sdr_enh = 0.0;
  Real si_sdr_noisy = 0.0;
  Real sdr_noisy = 0.0;
};

std::vector<EvalRow> evaluate(const ModelConfig& cfg, ParamStore& store, const Manifest& manifest);

/// Tab-separated rows: id, snr_db, si_sdr, sdr, si_sdr_noisy, sdr_noisy.
std::string report_text(const std::vector<EvalRow>& rows);

}  // namespace gagnet
