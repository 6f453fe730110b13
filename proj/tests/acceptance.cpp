// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Slow pieces are the toy training run (criterion 7, ~10 min) and the
// streaming grid (criterion 5, ~2 min).

#include "gagnet/crm.hpp"
#include "gagnet/dsp.hpp"
#include "gagnet/mix.hpp"
#include "gagnet/model.hpp"
#include "gagnet/objective.hpp"
#include "gagnet/params.hpp"
#include "gagnet/rng.hpp"
#include "gagnet/stream.hpp"
#include "gagnet/train.hpp"
#include "gagnet/wav.hpp"

#include "test_util.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace gagnet;
using namespace gagnet::testutil;

namespace {

namespace fs = std::filesystem;

int failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------- criterion 1
void criterion_parameter_counts() {
  struct Target {
    Index p, q;
    Real millions;
  };
  const Target targets[] = {{1, 3, 4.31}, {2, 3, 5.94}, {3, 3, 7.58},
                            {2, 1, 2.33}, {2, 2, 4.14}, {2, 4, 7.76}};
  bool pass = true;
  std::ostringstream detail;
  std::vector<Real> counts;
  for (const Target& t : targets) {
    ModelConfig cfg;
    cfg.p = t.p;
    cfg.q = t.q;
    const Real n = static_cast<Real>(count_params(cfg));
    counts.push_back(n);
    const Real rel = std::abs(n - t.millions * 1e6) / (t.millions * 1e6);
    detail << "(" << t.p << "," << t.q << ") " << fmt("%+.1f%% ", 100.0 * (n / 1e6 - t.millions) / t.millions);
    if (rel >= 0.05) pass = false;
  }
  // published size ordering: (2,1) < (2,2) < (1,3) < (2,3) < (3,3) < (2,4)
  const bool ordered = counts[3] < counts[4] && counts[4] < counts[0] && counts[0] < counts[1] &&
                       counts[1] < counts[2] && counts[2] < counts[5];
  if (!ordered) pass = false;
  detail << (ordered ? "; ordering exact" : "; ORDERING BROKEN");
  report(1, pass, "parameter counts within 5% of the published table", detail.str());
}

// ---------------------------------------------------------------- criterion 2
void criterion_gradient_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  Real worst = 0.0;
  std::string worst_name = "none";
  auto track = [&](const char* name, Real err) {
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  };

  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(9000 + static_cast<std::uint64_t>(seed));
    const Tensor a = random_tensor(rng, {3, 4});
    const Tensor b = random_tensor(rng, {3, 4}, 0.5, 2.0);
    track("add", max_rel_grad_error({a, b}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, add(v[0], v[1]));
          }));
    track("sub", max_rel_grad_error({a, b}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, sub(v[0], v[1]));
          }));
    track("mul", max_rel_grad_error({a, b}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, mul(v[0], v[1]));
          }));
    track("div", max_rel_grad_error({a, b}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, vdiv(v[0], v[1]));
          }));
    track("scale", max_rel_grad_error({a}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, scale(v[0], -0.7));
          }));
    track("sigmoid", max_rel_grad_error({a}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, sigmoid(v[0]));
          }));
    track("clamp_min", max_rel_grad_error({a}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, clamp_min(v[0], 0.1));
          }));
    track("magnitude", max_rel_grad_error({b, b}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, magnitude(v[0], v[1]));
          }));
    track("sum_all", max_rel_grad_error({a}, [](Tape& t, std::vector<Var>& v) {
            return sum_all(mul(v[0], v[0]));
          }));
    track("concat", max_rel_grad_error({a, b}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, concat_rows({v[0], v[1]}));
          }));
    track("feature_rows", max_rel_grad_error({random_tensor(rng, {2, 3, 4})},
                                             [](Tape& t, std::vector<Var>& v) {
                                               return weighted_sum(t, feature_rows(v[0]));
                                             }));

    const Tensor xa = random_tensor(rng, {3, 5});
    const Tensor al = random_tensor(rng, {3}, 0.1, 0.6);
    track("prelu", max_rel_grad_error({xa, al}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, prelu(v[0], v[1]));
          }));

    const Tensor lx = random_tensor(rng, {4, 5});
    const Tensor lw = random_tensor(rng, {3, 4});
    const Tensor lb = random_tensor(rng, {3});
    track("linear", max_rel_grad_error({lx, lw, lb}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, linear(v[0], v[1], v[2]));
          }));

    const Index dil = std::vector<Index>{1, 2, 5, 9}[static_cast<size_t>(seed % 4)];
    const Tensor cx = random_tensor(rng, {2, 2 * dil + 3});
    const Tensor cw = random_tensor(rng, {3, 2, 3});
    const Tensor cb = random_tensor(rng, {3});
    track("conv1d", max_rel_grad_error({cx, cw, cb}, [dil](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, conv1d(v[0], v[1], v[2], dil));
          }));

    const Tensor c2x = random_tensor(rng, {2, 3, 7});
    const Tensor c2w = random_tensor(rng, {2, 2, 2, 3});
    const Tensor c2b = random_tensor(rng, {2});
    track("conv2d", max_rel_grad_error({c2x, c2w, c2b}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, conv2d(v[0], v[1], v[2], 2));
          }));

    const Tensor dx = random_tensor(rng, {2, 2, 4});
    const Tensor dw = random_tensor(rng, {2, 2, 3});
    const Tensor db = random_tensor(rng, {2});
    const Index out_f = 9 + (seed % 2);
    track("conv_transpose2d", max_rel_grad_error({dx, dw, db}, [out_f](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, conv_transpose2d(v[0], v[1], v[2], 2, out_f));
          }));

    const Tensor nx = random_tensor(rng, {2, 3, 4});
    const Tensor ng = random_tensor(rng, {2}, 0.5, 1.5);
    const Tensor nb = random_tensor(rng, {2});
    track("instance_norm", max_rel_grad_error({nx, ng, nb}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, instance_norm(v[0], v[1], v[2]));
          }));
    track("cumulative_norm", max_rel_grad_error({nx, ng, nb}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, cumulative_norm(v[0], v[1], v[2]));
          }));

    const Tensor gx = random_tensor(rng, {3, 4});
    const Tensor gm = random_tensor(rng, {2, 3});
    const Tensor gmb = random_tensor(rng, {2});
    const Tensor gg = random_tensor(rng, {2, 3});
    const Tensor ggb = random_tensor(rng, {2});
    track("glu", max_rel_grad_error({gx, gm, gmb, gg, ggb}, [](Tape& t, std::vector<Var>& v) {
            return weighted_sum(t, glu1d(v[0], v[1], v[2], v[3], v[4]));
          }));
  }

  // composed stage graph, all four reconstruction heads, five seeds each
  for (int seed = 0; seed < 5; ++seed) {
    for (ReconMode mode : {ReconMode::kCrm, ReconMode::kMag, ReconMode::kCom, ReconMode::kPhasen}) {
      ModelConfig cfg = mini_config();
      cfg.recon = mode;
      const ModelPlan plan = build_plan(cfg);
      ParamStore store = model_init(cfg, 600 + static_cast<std::uint64_t>(seed));
      randomize_store(store, 601 + static_cast<std::uint64_t>(seed));
      std::mt19937_64 rng(700 + static_cast<std::uint64_t>(seed));
      const Tensor h0 = random_tensor(rng, {plan.c_prime, 6});
      const Tensor pr = random_tensor(rng, {cfg.f_bins(), 6}, 0.3, 1.0);
      const Tensor pi = random_tensor(rng, {cfg.f_bins(), 6}, 0.3, 1.0);
      std::vector<std::string> names;
      for (const ParamEntry& e : store.entries())
        if (e.name.rfind("ggm1.", 0) == 0) names.push_back(e.name);
      // loss weights skip the first two frames: the causal norm's one- and
      // two-sample prefixes are near-singular and poison central differences
      track("stage graph",
            max_rel_grad_error_params(store, names, [&](Tape& t, ParamStore& s) {
              StageVars sv = stage_forward(t, s, cfg, "ggm1", t.leaf(h0), t.leaf(pr), t.leaf(pi));
              return add(weighted_sum_tail(t, sv.sr, 8801, 2), weighted_sum_tail(t, sv.si, 8802, 2));
            }));
    }
  }

  const auto secs =
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - t0).count();
  report(2, worst < 1e-4, "finite-difference gradient oracles, primitives and composed stage",
         fmt("worst %.3g (%s), 20 seeds per primitive, %llds", worst, worst_name.c_str(),
             static_cast<long long>(secs)));
}

// ---------------------------------------------------------------- criterion 3
void criterion_stft_roundtrip() {
  Real worst_rt = 0.0, worst_cd = 0.0;
  for (int seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(100 + static_cast<std::uint64_t>(seed));
    WaveBuffer w;
    const Index len = 4000 + 160 * static_cast<Index>(uniform_int(rng, 0, 20));
    w.samples.resize(static_cast<size_t>(len));
    for (auto& s : w.samples) s = uniform(rng, -0.9, 0.9);
    Real peak = 0.0;
    for (Real s : w.samples) peak = std::max(peak, std::abs(s));

    const ComplexSpectrogram spec = stft(w);
    const WaveBuffer back = istft(spec);
    for (Index i = 320; i < back.size() - 320; ++i)
      worst_rt = std::max(worst_rt, std::abs(back.samples[static_cast<size_t>(i)] -
                                             w.samples[static_cast<size_t>(i)]) /
                                        peak);

    const ComplexSpectrogram rt = decompress(compress(spec, 0.5));
    for (Index i = 0; i < spec.real.numel(); ++i) {
      const Real scale = std::max(std::hypot(spec.real[i], spec.imag[i]), 1e-9);
      worst_cd = std::max(worst_cd, std::abs(rt.real[i] - spec.real[i]) / scale);
      worst_cd = std::max(worst_cd, std::abs(rt.imag[i] - spec.imag[i]) / scale);
    }
  }
  report(3, worst_rt <= 1e-6 && worst_cd <= 1e-6, "stft interior roundtrip and compression inverse",
         fmt("roundtrip %.3g, compress/decompress %.3g over 50 signals", worst_rt, worst_cd));
}

// ---------------------------------------------------------------- criterion 4
void criterion_crm_identities() {
  bool pass = true;
  std::ostringstream detail;
  std::mt19937_64 rng(42);

  StageEstimate prev;
  prev.real = Tensor({6, 7});
  prev.imag = Tensor({6, 7});
  for (Index i = 0; i < prev.real.numel(); ++i) {
    prev.real[i] = uniform(rng, 0.2, 1.5) * (uniform01(rng) < 0.5 ? -1 : 1);
    prev.imag[i] = uniform(rng, 0.2, 1.5) * (uniform01(rng) < 0.5 ? -1 : 1);
  }
  const Tensor ones = Tensor::full(prev.real.dims(), 1.0);
  const Tensor zeros = Tensor(prev.real.dims());

  const StageEstimate ident = crm_reconstruct(prev, ones, zeros, zeros);
  Real worst = 0.0;
  for (Index i = 0; i < prev.real.numel(); ++i) {
    const Real scale = std::hypot(prev.real[i], prev.imag[i]);
    worst = std::max(worst, std::abs(ident.real[i] - prev.real[i]) / scale);
    worst = std::max(worst, std::abs(ident.imag[i] - prev.imag[i]) / scale);
  }
  detail << fmt("identity %.3g; ", worst);
  if (worst > 1e-6) pass = false;

  Tensor fr(prev.real.dims()), fi(prev.real.dims());
  for (Index i = 0; i < fr.numel(); ++i) {
    fr[i] = uniform(rng, -1, 1);
    fi[i] = uniform(rng, -1, 1);
  }
  const StageEstimate res = crm_reconstruct(prev, zeros, fr, fi);
  bool exact = true;
  for (Index i = 0; i < fr.numel(); ++i)
    if (res.real[i] != fr[i] || res.imag[i] != fi[i]) exact = false;
  detail << (exact ? "zero-gain exact; " : "zero-gain NOT exact; ");
  if (!exact) pass = false;

  StageEstimate cell;
  cell.real = Tensor::of({1, 1}, {3.0});
  cell.imag = Tensor::of({1, 1}, {4.0});
  const StageEstimate hand =
      crm_reconstruct(cell, Tensor::full({1, 1}, 0.5), Tensor({1, 1}), Tensor({1, 1}));
  const Real hand_err = std::max(std::abs(hand.real[0] - 1.5), std::abs(hand.imag[0] - 2.0));
  detail << fmt("hand case err %.3g; ", hand_err);
  if (hand_err > 1e-9) pass = false;

  // variant degenerate contracts
  const Tensor one_cell = Tensor::full({1, 1}, 1.0);
  const StageEstimate m1 = reconstruct_variant(ReconMode::kMag, cell, &one_cell, nullptr, nullptr);
  const bool mag_ok = std::abs(m1.real[0] - 3.0) < 1e-9 && std::abs(m1.imag[0] - 4.0) < 1e-9;

  const Tensor cfr = Tensor::of({1, 1}, {0.25});
  const Tensor cfi = Tensor::of({1, 1}, {-0.5});
  const StageEstimate com = reconstruct_variant(ReconMode::kCom, cell, nullptr, &cfr, &cfi);
  const bool com_ok = com.real[0] == cfr[0] && com.imag[0] == cfi[0];

  const Tensor pc = Tensor::of({1, 1}, {0.3});
  const Tensor ps = Tensor::of({1, 1}, {0.4});
  const StageEstimate ph = reconstruct_variant(ReconMode::kPhasen, cell, &one_cell, &pc, &ps);
  const bool ph_ok = std::abs(ph.real[0] - 3.0) < 1e-9 && std::abs(ph.imag[0] - 4.0) < 1e-9;

  std::mt19937_64 rng2(43);
  Tensor gain(prev.real.dims());
  for (Index i = 0; i < gain.numel(); ++i) gain[i] = uniform01(rng2);
  const StageEstimate a = reconstruct_variant(ReconMode::kCrm, prev, &gain, &fr, &fi);
  const StageEstimate b = crm_reconstruct(prev, gain, fr, fi);
  bool crm_ok = true;
  for (Index i = 0; i < gain.numel(); ++i)
    if (a.real[i] != b.real[i] || a.imag[i] != b.imag[i]) crm_ok = false;

  detail << "variants " << (mag_ok && com_ok && ph_ok && crm_ok ? "ok" : "BROKEN");
  if (!(mag_ok && com_ok && ph_ok && crm_ok)) pass = false;

  report(4, pass, "collaborative reconstruction identities and variant contracts", detail.str());
}

// ---------------------------------------------------------------- criterion 5
void criterion_streaming() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::ostringstream detail;

  std::mt19937_64 rng(77);
  WaveBuffer audio;
  audio.sample_rate = 16000;
  audio.samples.resize(48000);  // 3 s
  for (auto& s : audio.samples) s = uniform(rng, -0.6, 0.6);

  for (auto [p, q] : {std::pair<Index, Index>{1, 1}, {1, 2}, {2, 1}, {2, 2}, {2, 3}}) {
    ModelConfig cfg;
    cfg.p = p;
    cfg.q = q;
    ParamStore store = model_init(cfg, 1000 + static_cast<std::uint64_t>(10 * p + q));
    const WaveBuffer offline = enhance(cfg, store, audio);
    StreamEnhancer stream(cfg, store);
    std::vector<Real> streamed;
    for (size_t base = 0; base + 160 <= audio.samples.size(); base += 160) {
      std::vector<Real> chunk(audio.samples.begin() + base, audio.samples.begin() + base + 160);
      std::vector<Real> got = stream.push(chunk);
      streamed.insert(streamed.end(), got.begin(), got.end());
    }
    std::vector<Real> tail = stream.finish();
    streamed.insert(streamed.end(), tail.begin(), tail.end());

    Real worst = 0.0;
    const bool len_ok = static_cast<Index>(streamed.size()) == offline.size();
    if (len_ok)
      for (size_t i = 0; i < streamed.size(); ++i)
        worst = std::max(worst, std::abs(streamed[i] - offline.samples[i]));
    detail << "(" << p << "," << q << ") " << fmt("%.2g; ", worst);
    if (!len_ok || worst >= 1e-5) pass = false;
  }

  // future perturbation leaves past spectrogram-domain outputs bit-identical
  {
    ModelConfig cfg;  // default (2, 3)
    const ModelPlan plan = build_plan(cfg);
    ParamStore store = model_init(cfg, 5);
    std::mt19937_64 r2(78);
    Tensor re({6, cfg.f_bins()}), im({6, cfg.f_bins()});
    for (Index i = 0; i < re.numel(); ++i) {
      re[i] = uniform(r2, -1, 1);
      im[i] = uniform(r2, -1, 1);
    }
    auto run = [&](const Tensor& a, const Tensor& b) {
      Tape tape;
      ForwardVars fw = model_forward(tape, store, cfg, plan, a, b);
      std::vector<Tensor> outs;
      for (auto& sv : fw.stages) {
        outs.push_back(tape.val(sv.sr));
        outs.push_back(tape.val(sv.si));
      }
      return outs;
    };
    const auto base = run(re, im);
    Tensor re2 = re, im2 = im;
    for (Index f = 0; f < cfg.f_bins(); ++f) {
      re2.at({5, f}) += 0.37;
      im2.at({5, f}) -= 0.11;
    }
    const auto pert = run(re2, im2);
    bool bit_ok = true;
    for (size_t k = 0; k < base.size(); ++k)
      for (Index f = 0; f < cfg.f_bins(); ++f)
        for (Index t = 0; t < 5; ++t)
          if (base[k].at({f, t}) != pert[k].at({f, t})) bit_ok = false;
    detail << "past bits " << (bit_ok ? "identical" : "CHANGED");
    if (!bit_ok) pass = false;
  }

  const auto secs =
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - t0).count();
  detail << fmt("; %llds", static_cast<long long>(secs));
  report(5, pass, "streaming equals offline on 3 s audio across the config grid", detail.str());
}

// ---------------------------------------------------------------- criterion 6
void criterion_loss_contract() {
  bool pass = true;
  std::ostringstream detail;

  std::mt19937_64 rng(11);
  const Tensor tr = random_tensor(rng, {4, 5});
  const Tensor ti = random_tensor(rng, {4, 5});
  Tape tape;
  std::vector<StageVars> stages;
  std::vector<Real> per_stage;
  for (int qi = 0; qi < 3; ++qi) {
    Tensor er = tr, ei = ti;
    er[qi] += 0.2 + 0.1 * qi;
    StageVars sv;
    sv.sr = tape.leaf(er);
    sv.si = tape.leaf(ei);
    stages.push_back(sv);
    per_stage.push_back(tape.val(stage_loss(sv.sr, sv.si, tr, ti))[0]);
  }
  const Real total = tape.val(total_loss(stages, tr, ti, {0.1, 0.1, 1.0}))[0];
  const Real expect = 0.1 * per_stage[0] + 0.1 * per_stage[1] + 1.0 * per_stage[2];
  const Real werr = std::abs(total - expect);
  detail << fmt("weighted-sum err %.3g; ", werr);
  if (werr > 1e-12) pass = false;

  // one-cell hand case
  const Real a = 0.6, b = -0.8, delta = 0.35;
  Tape t2;
  StageVars sv;
  sv.sr = t2.leaf(Tensor::of({1, 1}, {a + delta}));
  sv.si = t2.leaf(Tensor::of({1, 1}, {b}));
  const Real got = t2.val(stage_loss(sv.sr, sv.si, Tensor::of({1, 1}, {a}), Tensor::of({1, 1}, {b})))[0];
  const Real dmag = std::hypot(a + delta, b) - std::hypot(a, b);
  const Real hand = (delta * delta + dmag * dmag) / 2.0;
  const Real herr = std::abs(got - hand);
  detail << fmt("hand case err %.3g", herr);
  if (herr > 1e-12) pass = false;

  report(6, pass, "weighted multi-stage loss and hand-evaluated cases", detail.str());
}

// ---------------------------------------------------------------- criterion 8
void criterion_metric_properties() {
  bool pass = true;
  std::ostringstream detail;

  std::mt19937_64 rng(21);
  WaveBuffer ref, est;
  ref.samples.resize(4096);
  est.samples.resize(4096);
  for (size_t i = 0; i < ref.samples.size(); ++i) {
    ref.samples[i] = normal(rng) * 0.2;
    est.samples[i] = ref.samples[i] + normal(rng) * 0.1;
  }
  const Real base = si_sdr(est, ref);
  Real worst = 0.0;
  for (Real c : {0.001, 0.37, 1.0, 42.0, 3000.0}) {
    WaveBuffer scaled = est;
    for (auto& s : scaled.samples) s *= c;
    worst = std::max(worst, std::abs(si_sdr(scaled, ref) - base));
  }
  detail << fmt("scale invariance %.3g dB; ", worst);
  if (worst > 1e-9) pass = false;

  WaveBuffer noise;
  noise.samples.resize(4096);
  for (auto& s : noise.samples) s = normal(rng) * 0.2;
  Real worst_k = 0.0;
  for (Real k : {-5.0, -3.0, 0.0, 3.0, 6.0, 12.0}) {
    const WaveBuffer noisy = mix_at_snr(ref, noise, k);
    worst_k = std::max(worst_k, std::abs(sdr_energy(noisy, ref) - k));
  }
  detail << fmt("k-dB mixture err %.3g dB", worst_k);
  if (worst_k > 1e-6) pass = false;

  report(8, pass, "si-sdr scale invariance and energy-ratio sdr exactness", detail.str());
}

// ------------------------------------------------------- toy corpus plumbing
struct ToyData {
  std::string dir;
  Manifest train, test;
};

ToyData build_toy_corpus(const ModelConfig& cfg) {
  ToyData toy;
  toy.dir = (fs::temp_directory_path() / "gagnet_acceptance_toy").string();
  fs::remove_all(toy.dir);
  fs::create_directories(toy.dir + "/clean");
  fs::create_directories(toy.dir + "/noise");
  const Index chunk = cfg.chunk_samples();
  std::vector<std::string> clean_pool, noise_pool;
  for (Index i = 0; i < cfg.mix_clean_count; ++i) {
    const std::string p = toy.dir + "/clean/c" + std::to_string(i) + ".wav";
    write_wav(p, toy_clean_utterance(cfg.seed * 1000003ull + static_cast<std::uint64_t>(i), chunk,
                                     cfg.sample_rate));
    clean_pool.push_back(p);
  }
  for (Index i = 0; i < cfg.mix_noise_count; ++i) {
    const std::string p = toy.dir + "/noise/n" + std::to_string(i) + ".wav";
    write_wav(p, toy_noise_track(cfg.seed * 7368787ull + static_cast<std::uint64_t>(i),
                                 2 * chunk + 1600, cfg.sample_rate, (i % 2) == 1));
    noise_pool.push_back(p);
  }
  ManifestRequest req;
  req.clean_pool = clean_pool;
  req.noise_pool = noise_pool;
  req.chunk_samples = chunk;
  req.sample_rate = cfg.sample_rate;
  req.snr_low = cfg.snr_train_low;
  req.snr_high = cfg.snr_train_high;
  req.snr_grid = cfg.snr_eval_grid;
  req.split = "train";
  req.pairs = cfg.mix_train_pairs;
  toy.train = build_manifest(req, cfg.seed);
  req.split = "test";
  req.pairs = cfg.mix_eval_pairs;
  toy.test = build_manifest(req, cfg.seed + 2);
  return toy;
}

ModelConfig toy_run_config() {
  ModelConfig cfg;
  cfg.p = 1;
  cfg.q = 1;  // single refinement stage fits the 200-step budget
  cfg.batch = 6;
  cfg.epochs = 10;
  cfg.max_steps = 200;
  cfg.lr = 5e-4;
  cfg.seed = 17;
  cfg.chunk_seconds = 1.0;
  cfg.mix_train_pairs = 120;  // 2 minutes of audio
  cfg.mix_eval_pairs = 12;
  cfg.snr_train_low = 0.0;  // the toy protocol mixes at 0 dB
  cfg.snr_train_high = 0.0;
  cfg.snr_eval_grid = {0.0};
  return cfg;
}

// ---------------------------------------------------------------- criterion 7
void criterion_toy_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelConfig cfg = toy_run_config();
  const ToyData toy = build_toy_corpus(cfg);
  const std::string ckpt_dir = toy.dir + "/ckpt";

  TrainResult result = train_model(cfg, toy.train, ckpt_dir);
  const Real first = result.log.front().total;
  const Real last = result.log.back().total;

  Real mean_enh = 0.0, mean_noisy = 0.0;
  for (const MixSpec& item : toy.test.items) {
    auto [noisy, clean] = synth_pair(item, cfg.chunk_samples());
    WaveBuffer enhanced = enhance(cfg, result.store, noisy);
    WaveBuffer clean_cut = clean, noisy_cut = noisy;
    clean_cut.samples.resize(enhanced.samples.size());
    noisy_cut.samples.resize(enhanced.samples.size());
    mean_enh += si_sdr(enhanced, clean_cut);
    mean_noisy += si_sdr(noisy_cut, clean_cut);
  }
  mean_enh /= static_cast<Real>(toy.test.items.size());
  mean_noisy /= static_cast<Real>(toy.test.items.size());

  const Real drop = 100.0 * (first - last) / first;
  const Real gain = mean_enh - mean_noisy;
  const auto secs =
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = drop >= 50.0 && gain >= 3.0;
  report(7, pass, "toy convergence: 200 Adam steps at lr 5e-4",
         fmt("loss %.3f -> %.3f (-%.0f%%, need >= 50%%); si-sdr %+.2f dB vs noisy %+.2f dB "
             "(gain %.2f, need >= 3); %llds",
             first, last, drop, mean_enh, mean_noisy, gain, static_cast<long long>(secs)));
}

// ---------------------------------------------------------------- criterion 9
void criterion_determinism() {
  ModelConfig cfg = mini_config();
  cfg.batch = 2;
  cfg.epochs = 1;
  cfg.max_steps = 4;
  cfg.chunk_seconds = 0.05;

  const std::string dir = (fs::temp_directory_path() / "gagnet_acceptance_det").string();
  fs::remove_all(dir);
  fs::create_directories(dir + "/src");
  const Index chunk = cfg.chunk_samples();
  std::vector<std::string> clean_pool, noise_pool;
  for (Index i = 0; i < 2; ++i) {
    const std::string cp = dir + "/src/c" + std::to_string(i) + ".wav";
    write_wav(cp, toy_clean_utterance(static_cast<std::uint64_t>(i) + 9, chunk, cfg.sample_rate));
    clean_pool.push_back(cp);
    const std::string np = dir + "/src/n" + std::to_string(i) + ".wav";
    write_wav(np, toy_noise_track(static_cast<std::uint64_t>(i) + 21, 2 * chunk, cfg.sample_rate, i == 1));
    noise_pool.push_back(np);
  }
  ManifestRequest req;
  req.clean_pool = clean_pool;
  req.noise_pool = noise_pool;
  req.chunk_samples = chunk;
  req.split = "train";
  req.pairs = 8;
  const Manifest manifest = build_manifest(req, 3);

  auto run = [&](const std::string& tag) {
    TrainResult r = train_model(cfg, manifest, dir + "/" + tag);
    std::ifstream f(r.final_checkpoint, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  };
  const std::string a = run("a");
  const std::string b = run("b");
  const bool pass = !a.empty() && a == b;
  report(9, pass, "identical (config, seed, manifest) give byte-identical checkpoints",
         fmt("%zu bytes %s", a.size(), pass ? "equal" : "DIFFER"));
}

}  // namespace

int main() {
  std::printf("gagnet acceptance suite\n");
  criterion_parameter_counts();
  criterion_gradient_oracles();
  criterion_stft_roundtrip();
  criterion_crm_identities();
  criterion_streaming();
  criterion_loss_contract();
  criterion_toy_convergence();
  criterion_metric_properties();
  criterion_determinism();

  // informational: MAC estimate next to the published figure (not asserted;
  // counting conventions differ)
  {
    ModelConfig cfg;
    const Real g = static_cast<Real>(count_macs(cfg, 1.0)) / 1e9;
    std::printf("[info] MACs (2,3) for 1 s: %.2f G (published figure 1.63 G/s, ratio %.2f)\n", g,
                g / 1.63);
  }

  std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
