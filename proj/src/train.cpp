#include "gagnet/train.hpp"

#include "gagnet/errors.hpp"
#include "gagnet/objective.hpp"
#include "gagnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gagnet {

namespace {

struct SpectralPair {
  Tensor noisy_r, noisy_i;   // compressed (T, F)
  Tensor target_r, target_i; // compressed (T, F)
};

SpectralPair prepare_pair(const ModelConfig& cfg, const MixSpec& spec, Index chunk_samples) {
  auto [noisy, clean] = synth_pair(spec, chunk_samples);
  const ComplexSpectrogram xn = compress(stft(noisy, cfg.frame_len, cfg.hop, cfg.n_fft), cfg.beta);
  const ComplexSpectrogram xc = compress(stft(clean, cfg.frame_len, cfg.hop, cfg.n_fft), cfg.beta);
  SpectralPair out;
  out.noisy_r = xn.real;  // (T, F) planes feed the forward pass
  out.noisy_i = xn.imag;
  out.target_r = transpose2d(xc.real);  // stage estimates are (F, T)
  out.target_i = transpose2d(xc.imag);
  return out;
}

}  // namespace

TrainResult train_model(const ModelConfig& cfg, const Manifest& manifest, const std::string& ckpt_dir,
                        const std::string& resume_ckpt) {
  if (manifest.items.empty()) throw DataError("train: manifest is empty");
  const ModelPlan plan = build_plan(cfg);
  const std::vector<Real> lambdas = cfg.lambdas();

  TrainResult result;
  if (!resume_ckpt.empty()) {
    Checkpoint ck = load_checkpoint(resume_ckpt);
    result.store = std::move(ck.store);
    // sanity: resumed parameters must cover the planned layout
    walk_params(cfg, plan, [&](const std::string& name, const std::vector<Index>& dims, InitKind, Index, Index) {
      const Index i = result.store.index_of(name);
      if (i < 0 || result.store.entry(i).value.dims() != dims)
        throw DataError("train: checkpoint '" + resume_ckpt + "' does not match the config (param '" +
                        name + "')");
    });
  } else {
    result.store = model_init(cfg, cfg.seed);
  }

  std::filesystem::create_directories(ckpt_dir);
  std::ofstream curve(ckpt_dir + "/loss_curve.tsv");
  curve << "step\ttotal";
  for (Index s = 1; s <= cfg.q; ++s) curve << "\tstage" << s;
  curve << "\n";
  curve.precision(12);

  const Index chunk = cfg.chunk_samples();
  std::vector<size_t> order(manifest.items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  Index step = 0;
  bool done = false;
  for (Index epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    std::mt19937_64 shuffle_rng(cfg.seed * 0x100000001b3ull + static_cast<std::uint64_t>(epoch));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<size_t>(uniform_int(shuffle_rng, 0, static_cast<Index>(i) - 1))]);

    for (size_t base = 0; base < order.size() && !done; base += static_cast<size_t>(cfg.batch)) {
      const size_t count = std::min(static_cast<size_t>(cfg.batch), order.size() - base);
      Tape tape;
      Var batch_loss;
      std::vector<Real> stage_acc(static_cast<size_t>(cfg.q), 0.0);
      for (size_t b = 0; b < count; ++b) {
        const SpectralPair pair = prepare_pair(cfg, manifest.items[order[base + b]], chunk);
        ForwardVars fw = model_forward(tape, result.store, cfg, plan, pair.noisy_r, pair.noisy_i);
        Var item_loss;
        for (size_t qi = 0; qi < fw.stages.size(); ++qi) {
          Var lq = stage_loss(fw.stages[qi].sr, fw.stages[qi].si, pair.target_r, pair.target_i);
          stage_acc[qi] += tape.val(lq)[0];
          Var wq = scale(lq, lambdas[qi]);
          item_loss = qi == 0 ? wq : add(item_loss, wq);
        }
        batch_loss = b == 0 ? item_loss : add(batch_loss, item_loss);
      }
      batch_loss = scale(batch_loss, 1.0 / static_cast<Real>(count));
      const Real loss_value = tape.val(batch_loss)[0];
      if (!std::isfinite(loss_value)) throw NumericError("train: non-finite loss at step " + std::to_string(step + 1));

      result.store.zero_grads();
      tape.backward(batch_loss);
      adam_step(result.store, cfg.lr);

      ++step;
      StepLog entry;
      entry.step = step;
      entry.total = loss_value;
      for (Real v : stage_acc) entry.per_stage.push_back(v / static_cast<Real>(count));
      curve << step << '\t' << entry.total;
      for (Real v : entry.per_stage) curve << '\t' << v;
      curve << '\n';
      result.log.push_back(std::move(entry));
      if (cfg.max_steps > 0 && step >= cfg.max_steps) done = true;
    }

    std::ostringstream name;
    name << ckpt_dir << "/epoch_" << epoch + 1 << ".ckpt";
    save_checkpoint(name.str(), result.store, serialize_config(cfg), /*with_moments=*/true);
  }

  result.final_checkpoint = ckpt_dir + "/final.ckpt";
  save_checkpoint(result.final_checkpoint, result.store, serialize_config(cfg), /*with_moments=*/true);
  return result;
}

std::vector<EvalRow> evaluate(const ModelConfig& cfg, ParamStore& store, const Manifest& manifest) {
  std::vector<EvalRow> rows;
  const Index chunk = cfg.chunk_samples();
  for (size_t i = 0; i < manifest.items.size(); ++i) {
    auto [noisy, clean] = synth_pair(manifest.items[i], chunk);
    WaveBuffer enhanced = enhance(cfg, store, noisy);
    WaveBuffer clean_cut = clean, noisy_cut = noisy;
    clean_cut.samples.resize(enhanced.samples.size());
    noisy_cut.samples.resize(enhanced.samples.size());

    EvalRow row;
    row.id = "pair" + std::to_string(i);
    row.snr_db = manifest.items[i].snr_db;
    row.si_sdr_enh = si_sdr(enhanced, clean_cut);
    row.sdr_enh = sdr_energy(enhanced, clean_cut);
    row.si_sdr_noisy = si_sdr(noisy_cut, clean_cut);
    row.sdr_noisy = sdr_energy(noisy_cut, clean_cut);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string report_text(const std::vector<EvalRow>& rows) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "id\tsnr_db\tsi_sdr\tsdr\tsi_sdr_noisy\tsdr_noisy\n";
  for (const EvalRow& r : rows)
    os << r.id << '\t' << r.snr_db << '\t' << r.si_sdr_enh << '\t' << r.sdr_enh << '\t' << r.si_sdr_noisy
       << '\t' << r.sdr_noisy << '\n';
  return os.str();
}

}  // namespace gagnet
