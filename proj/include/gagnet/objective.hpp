#pragma once

#include "gagnet/model.hpp"
#include "gagnet/wav.hpp"

#include <vector>

namespace gagnet {

/// Mean-normalized stage loss: (|dR|^2 + |dI|^2 + (|est|-|target|)^2) / (2N),
/// summed over the grid. Targets are plain tensors shaped like the estimates;
/// `frame_mask`, when given, is a same-shape 0/1 tensor and N counts its ones.
Var stage_loss(Var est_r, Var est_i, const Tensor& target_r, const Tensor& target_i,
               const Tensor* frame_mask = nullptr);

/// Weighted multi-stage sum; lambda count must equal the stage count.
Var total_loss(const std::vector<StageVars>& stages, const Tensor& target_r,
               const Tensor& target_i, const std::vector<Real>& lambdas,
               const Tensor* frame_mask = nullptr);

/// Scale-invariant SDR in dB, clamped to [-60, 60]. Both signals are
/// mean-removed; the reference must be nonzero.
Real si_sdr(const WaveBuffer& est, const WaveBuffer& ref);

/// Plain energy-ratio SDR: 10 log10(|ref|^2 / |ref - est|^2), clamped likewise.
Real sdr_energy(const WaveBuffer& est, const WaveBuffer& ref);

}  // namespace gagnet
