#pragma once

#include "gagnet/config.hpp"
#include "gagnet/dsp.hpp"
#include "gagnet/model.hpp"
#include "gagnet/params.hpp"

#include <memory>
#include <vector>

namespace gagnet {

/// Frame-by-frame causal inference. Feed exactly `hop` new samples per push;
/// the enhanced signal comes back chunk by chunk, delayed by one analysis
/// window, and finish() flushes the overlap-add tail. The concatenation of all
/// returned chunks equals offline enhance() on the same samples.
///
/// One StreamEnhancer per audio stream; instances are independent and never
/// share state. Requires the cumulative norm (full instance norm needs the
/// whole utterance and cannot stream).
class StreamEnhancer {
 public:
  StreamEnhancer(const ModelConfig& cfg, const ParamStore& store);
  ~StreamEnhancer();
  StreamEnhancer(StreamEnhancer&&) noexcept;
  StreamEnhancer& operator=(StreamEnhancer&&) noexcept;

  /// Exactly cfg.hop new samples; anything else is rejected.
  std::vector<Real> push(const std::vector<Real>& samples);

  /// Emits the remaining tail; the stream is closed afterwards.
  std::vector<Real> finish();

  /// Total buffered scalars across all ring buffers and running statistics;
  /// a closed-form function of the config.
  Index state_scalars() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gagnet
