#pragma once

#include "gagnet/config.hpp"
#include "gagnet/tensor.hpp"

#include <utility>

namespace gagnet {

/// One stage's complex spectrum estimate; stage 0 is the network input.
struct StageEstimate {
  Tensor real;
  Tensor imag;
  int stage = 0;
};

/// Eq-style decoupling: magnitude and four-quadrant phase of (real, imag).
/// The zero cell maps to (0, 0) by convention.
std::pair<Tensor, Tensor> decouple(const Tensor& real, const Tensor& imag);

/// Collaborative update: scale the previous magnitude by the glance gain,
/// recouple with the previous phase, add the gaze residual. Written on the
/// decoupled (magnitude, cos, sin) route so it doubles as an independent
/// check of the algebraic graph-side formulation.
StageEstimate crm_reconstruct(const StageEstimate& prev, const Tensor& gain, const Tensor& fr,
                              const Tensor& fi);

/// The switchable reconstruction heads. Branch tensors are mode-specific:
///   mag    : gain only (previous phase kept)
///   com    : fr/fi only (output is the gaze pair verbatim)
///   phasen : gain plus raw (cos, sin) estimates in fr/fi, unit-normalized here
///   crm    : gain plus complex residual fr/fi
/// Missing required branches are rejected.
StageEstimate reconstruct_variant(ReconMode mode, const StageEstimate& prev, const Tensor* gain,
                                  const Tensor* fr, const Tensor* fi);

}  // namespace gagnet
