#pragma once

#include "gagnet/tensor.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace gagnet {

struct ParamEntry {
  std::string name;
  Tensor value;
  Tensor grad;  // empty until populated
  Tensor m, v;  // Adam moments
  bool has_grad() const { return grad.numel() == value.numel() && value.numel() > 0; }
};

/// Named parameter tensors plus their Adam state. Entry order is creation
/// order and defines the checkpoint layout.
class ParamStore {
 public:
  Index add(const std::string& name, Tensor value);
  Index index_of(const std::string& name) const;  // -1 when absent
  ParamEntry& entry(Index i) { return entries_[static_cast<size_t>(i)]; }
  const ParamEntry& entry(Index i) const { return entries_[static_cast<size_t>(i)]; }
  ParamEntry& named(const std::string& name);
  const ParamEntry& named(const std::string& name) const;

  Index size() const { return static_cast<Index>(entries_.size()); }
  Index total_elements() const;

  void zero_grads();
  void clear_grads();
  void accumulate_grad(Index i, const Tensor& delta);

  std::vector<ParamEntry>& entries() { return entries_; }
  const std::vector<ParamEntry>& entries() const { return entries_; }

  std::uint64_t step = 0;

 private:
  std::vector<ParamEntry> entries_;
  std::unordered_map<std::string, Index> by_name_;
};

/// Bias-corrected Adam on every entry; requires populated gradients.
void adam_step(ParamStore& store, Real lr, Real beta1 = 0.9, Real beta2 = 0.999, Real eps = 1e-8);

// Checkpoint container: magic, version, record count, then one record per
// entry (name, dtype, dims, raw little-endian payload), then a flag byte; when
// bit 0 is set the Adam step counter and per-parameter moments follow. The
// model config rides along as a leading byte-typed record named "__config__".
enum class CkptDtype : std::uint8_t { kF32 = 0, kF64 = 1, kBytes = 2 };

void save_checkpoint(const std::string& path, const ParamStore& store, const std::string& config_text,
                     bool with_moments, CkptDtype dtype = CkptDtype::kF64);

struct Checkpoint {
  ParamStore store;
  std::string config_text;
  bool has_moments = false;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace gagnet
