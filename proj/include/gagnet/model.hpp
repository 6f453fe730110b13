#pragma once

#include "gagnet/config.hpp"
#include "gagnet/dsp.hpp"
#include "gagnet/ops.hpp"
#include "gagnet/params.hpp"
#include "gagnet/tape.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gagnet {

struct UnetLevel {
  Index width_in = 0;
  Index width_out = 0;
};

/// One FEM downsampling layer: a 2-d GLU (+ norm + PReLU) and, for proper
/// RELs, a frequency-axis UNet block with a residual connection.
struct FemLayerPlan {
  std::string prefix;
  Index c_in = 0;
  Index f_in = 0;
  Index f_out = 0;
  std::vector<UnetLevel> levels;  // empty for the trailing plain GLU layer
  bool has_unet() const { return !levels.empty(); }
};

struct ModelPlan {
  std::vector<FemLayerPlan> fem;
  std::vector<Index> f_chain;  // bin count entering each layer, then the final width
  Index f_final = 0;           // F'
  Index c_prime = 0;           // C * F'
  Index ggm_in = 0;            // C' + 2F
};

/// Derives all layer shapes from the config; rejects configs whose frequency
/// axis cannot survive the requested downsampling.
ModelPlan build_plan(const ModelConfig& cfg);

enum class InitKind { kWeight, kBias, kPrelu, kGamma, kBeta };

using ParamVisitor =
    std::function<void(const std::string& name, const std::vector<Index>& dims, InitKind kind,
                       Index fan_in, Index fan_out)>;

/// Enumerates every parameter with its shape in canonical (checkpoint) order.
void walk_params(const ModelConfig& cfg, const ModelPlan& plan, const ParamVisitor& visit);

/// Deterministic initialization from the seed: conv/linear weights uniform in
/// +-sqrt(6/(fan_in+fan_out)), biases zero, PReLU slopes 0.25, norm gamma 1,
/// norm beta 0.
ParamStore model_init(const ModelConfig& cfg, std::uint64_t seed);

Index count_params(const ModelConfig& cfg);

/// Multiplies in convolutions and linear maps for `seconds` of audio; both GLU
/// branches counted, normalization and activations ignored.
Index count_macs(const ModelConfig& cfg, Real seconds);

struct StageVars {
  Var sr, si;    // (F, T) complex planes of this stage's estimate
  Var gain;      // glance output, invalid in com mode
  Var fr, fi;    // gaze outputs, invalid in mag mode
};

struct ForwardVars {
  Var h0;
  std::vector<StageVars> stages;
};

// Graph builders. Parameter names must exist in the store (see walk_params).
Var stcm_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg, const std::string& prefix,
                 Var x, Index dilation);
Var stcm_stack(Tape& tape, ParamStore& store, const ModelConfig& cfg, const std::string& prefix, Var x);
Var unet_block(Tape& tape, ParamStore& store, const ModelConfig& cfg, const std::string& prefix,
               Var x, const std::vector<UnetLevel>& levels);
Var fem_layer_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg, const FemLayerPlan& layer,
                      Var x);
Var fem_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg, const ModelPlan& plan, Var x);
Var glance_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg, const std::string& stage_prefix,
                   Var u);
std::pair<Var, Var> gaze_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg,
                                 const std::string& stage_prefix, Var u);
StageVars stage_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg,
                        const std::string& stage_prefix, Var h0, Var prev_r, Var prev_i);

/// Full pipeline on a compressed spectrogram: FEM, Q stacked glance-gaze
/// stages, collaborative reconstruction. xr/xi are (T, F) planes.
ForwardVars model_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg, const ModelPlan& plan,
                          const Tensor& xr_tf, const Tensor& xi_tf);

/// Offline enhancement: stft -> compress -> forward -> final stage ->
/// decompress -> istft. Input must match the config sample rate.
WaveBuffer enhance(const ModelConfig& cfg, ParamStore& store, const WaveBuffer& noisy);

// Layout helpers between dsp (T, F) planes and network (rows, T) tensors.
Tensor transpose2d(const Tensor& x);
Tensor planes_to_ctf(const Tensor& re_tf, const Tensor& im_tf);  // -> (2, T, F)

std::string describe_shapes(const ModelConfig& cfg);

}  // namespace gagnet
