#include "gagnet/model.hpp"

#include "gagnet/errors.hpp"
#include "gagnet/rng.hpp"

#include <cmath>
#include <sstream>

namespace gagnet {

ModelPlan build_plan(const ModelConfig& cfg) {
  cfg.validate();
  ModelPlan plan;
  Index f = cfg.f_bins();
  plan.f_chain.push_back(f);
  const Index n_layers = static_cast<Index>(cfg.unet_depths.size()) + 1;  // RELs + final GLU
  for (Index l = 0; l < n_layers; ++l) {
    FemLayerPlan layer;
    const bool is_rel = l < static_cast<Index>(cfg.unet_depths.size());
    layer.prefix = is_rel ? "fem.rel" + std::to_string(l + 1) : "fem.down";
    layer.c_in = l == 0 ? 2 : cfg.channels;
    layer.f_in = f;
    if (f < cfg.kernel_f)
      throw UsageError("config: frequency width " + std::to_string(f) + " too small for layer " +
                       layer.prefix);
    f = conv_out_size(f, cfg.kernel_f, cfg.stride_f);
    layer.f_out = f;
    if (is_rel) {
      Index w = f;
      for (Index m = 0; m < cfg.unet_depths[static_cast<size_t>(l)]; ++m) {
        if (w < cfg.unet_kernel_f)
          throw UsageError("config: " + layer.prefix + " cannot downsample " + std::to_string(m + 1) +
                           " times (width " + std::to_string(w) + " < kernel)");
        UnetLevel level;
        level.width_in = w;
        w = conv_out_size(w, cfg.unet_kernel_f, cfg.stride_f);
        level.width_out = w;
        layer.levels.push_back(level);
      }
    }
    plan.fem.push_back(std::move(layer));
    plan.f_chain.push_back(f);
  }
  plan.f_final = f;
  plan.c_prime = cfg.channels * f;
  plan.ggm_in = plan.c_prime + 2 * cfg.f_bins();
  return plan;
}

namespace {

void visit_conv2d(const ParamVisitor& v, const std::string& prefix, Index c_out, Index c_in, Index kt,
                  Index kf) {
  const Index fan_in = c_in * kt * kf, fan_out = c_out * kt * kf;
  v(prefix + ".w", {c_out, c_in, kt, kf}, InitKind::kWeight, fan_in, fan_out);
  v(prefix + ".b", {c_out}, InitKind::kBias, fan_in, fan_out);
}

void visit_deconv(const ParamVisitor& v, const std::string& prefix, Index c_in, Index c_out, Index kf) {
  const Index fan_in = c_in * kf, fan_out = c_out * kf;
  v(prefix + ".w", {c_in, c_out, kf}, InitKind::kWeight, fan_in, fan_out);
  v(prefix + ".b", {c_out}, InitKind::kBias, fan_in, fan_out);
}

void visit_linear(const ParamVisitor& v, const std::string& prefix, Index d_out, Index d_in) {
  v(prefix + ".w", {d_out, d_in}, InitKind::kWeight, d_in, d_out);
  v(prefix + ".b", {d_out}, InitKind::kBias, d_in, d_out);
}

void visit_conv1d(const ParamVisitor& v, const std::string& prefix, Index c_out, Index c_in, Index k) {
  const Index fan_in = c_in * k, fan_out = c_out * k;
  v(prefix + ".w", {c_out, c_in, k}, InitKind::kWeight, fan_in, fan_out);
  v(prefix + ".b", {c_out}, InitKind::kBias, fan_in, fan_out);
}

void visit_norm(const ParamVisitor& v, const std::string& prefix, Index c) {
  v(prefix + ".gamma", {c}, InitKind::kGamma, c, c);
  v(prefix + ".beta", {c}, InitKind::kBeta, c, c);
}

void visit_prelu(const ParamVisitor& v, const std::string& prefix, Index c) {
  v(prefix + ".alpha", {c}, InitKind::kPrelu, c, c);
}

void visit_stcm(const ParamVisitor& v, const ModelConfig& cfg, const std::string& prefix) {
  visit_linear(v, prefix + ".in", cfg.squeeze_dim, cfg.feat_dim);
  visit_prelu(v, prefix + ".prelu1", cfg.squeeze_dim);
  visit_norm(v, prefix + ".norm1", cfg.squeeze_dim);
  visit_conv1d(v, prefix + ".dconv", cfg.squeeze_dim, cfg.squeeze_dim, 3);
  visit_prelu(v, prefix + ".prelu2", cfg.squeeze_dim);
  visit_norm(v, prefix + ".norm2", cfg.squeeze_dim);
  visit_linear(v, prefix + ".out", cfg.feat_dim, cfg.squeeze_dim);
}

void visit_tcm_path(const ParamVisitor& v, const ModelConfig& cfg, const std::string& prefix) {
  for (Index g = 0; g < cfg.p; ++g)
    for (Index j = 0; j < cfg.stcm_per_group; ++j)
      visit_stcm(v, cfg, prefix + ".g" + std::to_string(g + 1) + ".t" + std::to_string(j + 1));
}

void visit_glu1d(const ParamVisitor& v, const std::string& prefix, Index d_out, Index d_in) {
  visit_linear(v, prefix + ".main", d_out, d_in);
  visit_linear(v, prefix + ".gate", d_out, d_in);
}

}  // namespace

void walk_params(const ModelConfig& cfg, const ModelPlan& plan, const ParamVisitor& v) {
  for (const FemLayerPlan& layer : plan.fem) {
    visit_conv2d(v, layer.prefix + ".glu.main", cfg.channels, layer.c_in, cfg.kernel_t, cfg.kernel_f);
    visit_conv2d(v, layer.prefix + ".glu.gate", cfg.channels, layer.c_in, cfg.kernel_t, cfg.kernel_f);
    visit_norm(v, layer.prefix + ".norm", cfg.channels);
    visit_prelu(v, layer.prefix + ".prelu", cfg.channels);
    for (size_t j = 0; j < layer.levels.size(); ++j) {
      const std::string enc = layer.prefix + ".enc" + std::to_string(j + 1);
      visit_conv2d(v, enc + ".conv", cfg.channels, cfg.channels, 1, cfg.unet_kernel_f);
      visit_norm(v, enc + ".norm", cfg.channels);
      visit_prelu(v, enc + ".prelu", cfg.channels);
    }
    for (size_t j = 0; j < layer.levels.size(); ++j) {
      const std::string dec = layer.prefix + ".dec" + std::to_string(j + 1);
      visit_deconv(v, dec + ".deconv", cfg.channels, cfg.channels, cfg.unet_kernel_f);
      visit_norm(v, dec + ".norm", cfg.channels);
      visit_prelu(v, dec + ".prelu", cfg.channels);
    }
  }
  const Index f = cfg.f_bins();
  for (Index s = 1; s <= cfg.q; ++s) {
    const std::string pfx = "ggm" + std::to_string(s);
    if (cfg.recon != ReconMode::kCom) {
      visit_glu1d(v, pfx + ".glance.glu", cfg.feat_dim, plan.ggm_in);
      visit_tcm_path(v, cfg, pfx + ".glance");
      visit_linear(v, pfx + ".glance.head", f, cfg.feat_dim);
    }
    if (cfg.recon != ReconMode::kMag) {
      visit_glu1d(v, pfx + ".gaze.glu", cfg.feat_dim, plan.ggm_in);
      visit_tcm_path(v, cfg, pfx + ".gaze.re");
      visit_linear(v, pfx + ".gaze.re.head", f, cfg.feat_dim);
      visit_tcm_path(v, cfg, pfx + ".gaze.im");
      visit_linear(v, pfx + ".gaze.im.head", f, cfg.feat_dim);
    }
  }
}

ParamStore model_init(const ModelConfig& cfg, std::uint64_t seed) {
  const ModelPlan plan = build_plan(cfg);
  ParamStore store;
  std::mt19937_64 rng(seed);
  walk_params(cfg, plan, [&](const std::string& name, const std::vector<Index>& dims, InitKind kind,
                             Index fan_in, Index fan_out) {
    Tensor t(dims);
    switch (kind) {
      case InitKind::kWeight: {
        const Real bound = std::sqrt(6.0 / static_cast<Real>(fan_in + fan_out));
        for (Index i = 0; i < t.numel(); ++i) t[i] = uniform(rng, -bound, bound);
        break;
      }
      case InitKind::kBias:
      case InitKind::kBeta:
        break;  // zeros
      case InitKind::kPrelu:
        t.flat().setConstant(0.25);
        break;
      case InitKind::kGamma:
        t.flat().setConstant(1.0);
        break;
    }
    store.add(name, std::move(t));
  });
  return store;
}

Index count_params(const ModelConfig& cfg) {
  const ModelPlan plan = build_plan(cfg);
  Index total = 0;
  walk_params(cfg, plan,
              [&](const std::string&, const std::vector<Index>& dims, InitKind, Index, Index) {
                total += Tensor::count(dims);
              });
  return total;
}

Index count_macs(const ModelConfig& cfg, Real seconds) {
  const ModelPlan plan = build_plan(cfg);
  const Index samples = static_cast<Index>(seconds * cfg.sample_rate + 0.5);
  const Index t_len = stft_frames(samples, cfg.frame_len, cfg.hop);
  Index total = 0;
  for (const FemLayerPlan& layer : plan.fem) {
    // both GLU branches
    total += 2 * t_len * layer.f_out * cfg.channels * layer.c_in * cfg.kernel_t * cfg.kernel_f;
    for (const UnetLevel& level : layer.levels) {
      total += t_len * level.width_out * cfg.channels * cfg.channels * cfg.unet_kernel_f;  // encoder
      total += t_len * level.width_out * cfg.channels * cfg.channels * cfg.unet_kernel_f;  // decoder
    }
  }
  const Index f = cfg.f_bins();
  const Index stcm = cfg.squeeze_dim * cfg.feat_dim        // squeeze
                     + cfg.squeeze_dim * cfg.squeeze_dim * 3  // dilated conv
                     + cfg.feat_dim * cfg.squeeze_dim;     // expand
  const Index per_path = cfg.p * cfg.stcm_per_group * stcm;
  for (Index s = 0; s < cfg.q; ++s) {
    if (cfg.recon != ReconMode::kCom)
      total += t_len * (2 * cfg.feat_dim * plan.ggm_in + per_path + f * cfg.feat_dim);
    if (cfg.recon != ReconMode::kMag)
      total += t_len * (2 * cfg.feat_dim * plan.ggm_in + 2 * per_path + 2 * f * cfg.feat_dim);
  }
  return total;
}

namespace {

Var P(Tape& tape, ParamStore& store, const std::string& name) { return tape.param(store, name); }

Var norm_op(const ModelConfig& cfg, Var x, Var gamma, Var beta) {
  return cfg.norm == NormKind::kCumulative ? cumulative_norm(x, gamma, beta)
                                           : instance_norm(x, gamma, beta);
}

Var glu2d_named(Tape& tape, ParamStore& store, const ModelConfig& cfg, const std::string& prefix, Var x) {
  return glu2d(x, P(tape, store, prefix + ".main.w"), P(tape, store, prefix + ".main.b"),
               P(tape, store, prefix + ".gate.w"), P(tape, store, prefix + ".gate.b"), cfg.stride_f);
}

Var glu1d_named(Tape& tape, ParamStore& store, const std::string& prefix, Var x) {
  return glu1d(x, P(tape, store, prefix + ".main.w"), P(tape, store, prefix + ".main.b"),
               P(tape, store, prefix + ".gate.w"), P(tape, store, prefix + ".gate.b"));
}

}  // namespace

Var stcm_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg, const std::string& prefix,
                 Var x, Index dilation) {
  Var br = linear(x, P(tape, store, prefix + ".in.w"), P(tape, store, prefix + ".in.b"));
  br = prelu(br, P(tape, store, prefix + ".prelu1.alpha"));
  br = norm_op(cfg, br, P(tape, store, prefix + ".norm1.gamma"), P(tape, store, prefix + ".norm1.beta"));
  br = conv1d(br, P(tape, store, prefix + ".dconv.w"), P(tape, store, prefix + ".dconv.b"), dilation);
  br = prelu(br, P(tape, store, prefix + ".prelu2.alpha"));
  br = norm_op(cfg, br, P(tape, store, prefix + ".norm2.gamma"), P(tape, store, prefix + ".norm2.beta"));
  br = linear(br, P(tape, store, prefix + ".out.w"), P(tape, store, prefix + ".out.b"));
  return add(x, br);
}

Var stcm_stack(Tape& tape, ParamStore& store, const ModelConfig& cfg, const std::string& prefix, Var x) {
  for (Index g = 0; g < cfg.p; ++g)
    for (Index j = 0; j < cfg.stcm_per_group; ++j)
      x = stcm_forward(tape, store, cfg,
                       prefix + ".g" + std::to_string(g + 1) + ".t" + std::to_string(j + 1), x,
                       cfg.dilations[static_cast<size_t>(j)]);
  return x;
}

Var unet_block(Tape& tape, ParamStore& store, const ModelConfig& cfg, const std::string& prefix,
               Var x, const std::vector<UnetLevel>& levels) {
  const size_t m = levels.size();
  std::vector<Var> encoded;
  Var cur = x;
  for (size_t j = 0; j < m; ++j) {
    const std::string enc = prefix + ".enc" + std::to_string(j + 1);
    cur = conv2d(cur, P(tape, store, enc + ".conv.w"), P(tape, store, enc + ".conv.b"), cfg.stride_f);
    cur = norm_op(cfg, cur, P(tape, store, enc + ".norm.gamma"), P(tape, store, enc + ".norm.beta"));
    cur = prelu(cur, P(tape, store, enc + ".prelu.alpha"));
    encoded.push_back(cur);
  }
  for (size_t i = 0; i < m; ++i) {
    if (i > 0) cur = add(cur, encoded[m - 1 - i]);  // additive skip at matching scale
    const std::string dec = prefix + ".dec" + std::to_string(i + 1);
    const Index target = levels[m - 1 - i].width_in;
    cur = conv_transpose2d(cur, P(tape, store, dec + ".deconv.w"), P(tape, store, dec + ".deconv.b"),
                           cfg.stride_f, target);
    cur = norm_op(cfg, cur, P(tape, store, dec + ".norm.gamma"), P(tape, store, dec + ".norm.beta"));
    cur = prelu(cur, P(tape, store, dec + ".prelu.alpha"));
  }
  return cur;
}

Var fem_layer_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg, const FemLayerPlan& layer,
                      Var x) {
  Var k = glu2d_named(tape, store, cfg, layer.prefix + ".glu", x);
  k = norm_op(cfg, k, P(tape, store, layer.prefix + ".norm.gamma"),
              P(tape, store, layer.prefix + ".norm.beta"));
  k = prelu(k, P(tape, store, layer.prefix + ".prelu.alpha"));
  if (!layer.has_unet()) return k;
  Var u = unet_block(tape, store, cfg, layer.prefix, k, layer.levels);
  return add(u, k);
}

Var fem_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg, const ModelPlan& plan, Var x) {
  if (tape.val(x).rank() != 3 || tape.val(x).dim(0) != 2)
    throw UsageError("fem: input must be a (2, T, F) real/imaginary stack, got " +
                     tape.val(x).shape_str());
  if (tape.val(x).dim(2) != cfg.f_bins())
    throw UsageError("fem: input has " + std::to_string(tape.val(x).dim(2)) + " bins, config expects " +
                     std::to_string(cfg.f_bins()));
  Var cur = x;
  for (const FemLayerPlan& layer : plan.fem) cur = fem_layer_forward(tape, store, cfg, layer, cur);
  return feature_rows(cur);
}

Var glance_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg, const std::string& stage_prefix,
                   Var u) {
  Var a = glu1d_named(tape, store, stage_prefix + ".glance.glu", u);
  a = stcm_stack(tape, store, cfg, stage_prefix + ".glance", a);
  a = linear(a, P(tape, store, stage_prefix + ".glance.head.w"),
             P(tape, store, stage_prefix + ".glance.head.b"));
  return sigmoid(a);
}

std::pair<Var, Var> gaze_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg,
                                 const std::string& stage_prefix, Var u) {
  Var z = glu1d_named(tape, store, stage_prefix + ".gaze.glu", u);
  Var zr = stcm_stack(tape, store, cfg, stage_prefix + ".gaze.re", z);
  zr = linear(zr, P(tape, store, stage_prefix + ".gaze.re.head.w"),
              P(tape, store, stage_prefix + ".gaze.re.head.b"));
  Var zi = stcm_stack(tape, store, cfg, stage_prefix + ".gaze.im", z);
  zi = linear(zi, P(tape, store, stage_prefix + ".gaze.im.head.w"),
              P(tape, store, stage_prefix + ".gaze.im.head.b"));
  return {zr, zi};
}

StageVars stage_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg,
                        const std::string& stage_prefix, Var h0, Var prev_r, Var prev_i) {
  Var u = concat_rows({h0, prev_r, prev_i});
  StageVars sv;
  if (cfg.recon != ReconMode::kCom) sv.gain = glance_forward(tape, store, cfg, stage_prefix, u);
  if (cfg.recon != ReconMode::kMag) {
    auto [fr, fi] = gaze_forward(tape, store, cfg, stage_prefix, u);
    sv.fr = fr;
    sv.fi = fi;
  }
  switch (cfg.recon) {
    case ReconMode::kCrm:
      // |S| G recoupled with the previous phase collapses to G (x) S.
      sv.sr = add(mul(sv.gain, prev_r), sv.fr);
      sv.si = add(mul(sv.gain, prev_i), sv.fi);
      break;
    case ReconMode::kMag:
      sv.sr = mul(sv.gain, prev_r);
      sv.si = mul(sv.gain, prev_i);
      break;
    case ReconMode::kCom:
      sv.sr = sv.fr;
      sv.si = sv.fi;
      break;
    case ReconMode::kPhasen: {
      Var filtered = mul(magnitude(prev_r, prev_i), sv.gain);
      Var norm = clamp_min(magnitude(sv.fr, sv.fi), 1e-12);
      sv.sr = mul(filtered, vdiv(sv.fr, norm));
      sv.si = mul(filtered, vdiv(sv.fi, norm));
      break;
    }
  }
  return sv;
}

ForwardVars model_forward(Tape& tape, ParamStore& store, const ModelConfig& cfg, const ModelPlan& plan,
                          const Tensor& xr_tf, const Tensor& xi_tf) {
  if (!xr_tf.same_shape(xi_tf) || xr_tf.rank() != 2)
    throw UsageError("forward: real/imag planes must be matching (T, F) grids");
  Var x = tape.leaf(planes_to_ctf(xr_tf, xi_tf));
  Var prev_r = tape.leaf(transpose2d(xr_tf));
  Var prev_i = tape.leaf(transpose2d(xi_tf));

  ForwardVars out;
  out.h0 = fem_forward(tape, store, cfg, plan, x);
  for (Index s = 1; s <= cfg.q; ++s) {
    StageVars sv = stage_forward(tape, store, cfg, "ggm" + std::to_string(s), out.h0, prev_r, prev_i);
    prev_r = sv.sr;
    prev_i = sv.si;
    out.stages.push_back(sv);
  }
  return out;
}

Tensor transpose2d(const Tensor& x) {
  if (x.rank() != 2) throw std::invalid_argument("transpose2d: rank must be 2");
  const Index r = x.dim(0), c = x.dim(1);
  Tensor out({c, r});
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  return out;
}

Tensor planes_to_ctf(const Tensor& re_tf, const Tensor& im_tf) {
  const Index t_len = re_tf.dim(0), f_len = re_tf.dim(1);
  Tensor out({2, t_len, f_len});
  std::copy(re_tf.data(), re_tf.data() + re_tf.numel(), out.data());
  std::copy(im_tf.data(), im_tf.data() + im_tf.numel(), out.data() + re_tf.numel());
  return out;
}

WaveBuffer enhance(const ModelConfig& cfg, ParamStore& store, const WaveBuffer& noisy) {
  if (noisy.sample_rate != cfg.sample_rate)
    throw DataError("enhance: input sampled at " + std::to_string(noisy.sample_rate) + " Hz, config expects " +
                    std::to_string(cfg.sample_rate));
  const ModelPlan plan = build_plan(cfg);
  ComplexSpectrogram spec = stft(noisy, cfg.frame_len, cfg.hop, cfg.n_fft);
  ComplexSpectrogram comp = compress(spec, cfg.beta);

  Tape tape;
  ForwardVars fw = model_forward(tape, store, cfg, plan, comp.real, comp.imag);
  const StageVars& last = fw.stages.back();

  ComplexSpectrogram est = comp;
  est.real = transpose2d(tape.val(last.sr));
  est.imag = transpose2d(tape.val(last.si));
  est.beta = cfg.beta;
  const ComplexSpectrogram full = cfg.beta < 1.0 ? decompress(est) : est;
  return istft(full, cfg.sample_rate);
}

std::string describe_shapes(const ModelConfig& cfg) {
  const ModelPlan plan = build_plan(cfg);
  std::ostringstream os;
  os << "frequency chain:";
  for (size_t i = 0; i < plan.f_chain.size(); ++i) os << (i ? " -> " : " ") << plan.f_chain[i];
  os << "\nfeature rows C' = " << cfg.channels << " x " << plan.f_final << " = " << plan.c_prime;
  os << "\nstage input C' + 2F = " << plan.ggm_in << "\n";
  return os.str();
}

}  // namespace gagnet
