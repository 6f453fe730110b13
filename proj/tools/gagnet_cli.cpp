#include "gagnet/config.hpp"
#include "gagnet/rng.hpp"
#include "gagnet/errors.hpp"
#include "gagnet/mix.hpp"
#include "gagnet/model.hpp"
#include "gagnet/objective.hpp"
#include "gagnet/stream.hpp"
#include "gagnet/train.hpp"
#include "gagnet/wav.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace gagnet;

void run_mix(const std::string& config_path, std::uint64_t seed, bool seed_given,
             const std::string& out_dir) {
  ModelConfig cfg = load_config(config_path);
  if (seed_given) cfg.seed = seed;

  namespace fs = std::filesystem;
  fs::create_directories(out_dir + "/clean");
  fs::create_directories(out_dir + "/noise");

  const Index chunk = cfg.chunk_samples();
  std::vector<std::string> clean_pool, noise_pool;
  for (Index i = 0; i < cfg.mix_clean_count; ++i) {
    const std::string path = out_dir + "/clean/c" + std::to_string(i) + ".wav";
    write_wav(path, toy_clean_utterance(cfg.seed * 1000003ull + static_cast<std::uint64_t>(i), chunk,
                                        cfg.sample_rate));
    clean_pool.push_back(path);
  }
  for (Index i = 0; i < cfg.mix_noise_count; ++i) {
    const std::string path = out_dir + "/noise/n" + std::to_string(i) + ".wav";
    const bool babble = (i % 2) == 1;
    write_wav(path, toy_noise_track(cfg.seed * 7368787ull + static_cast<std::uint64_t>(i), 2 * chunk + 1600,
                                    cfg.sample_rate, babble));
    noise_pool.push_back(path);
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
  save_manifest(out_dir + "/train.tsv", build_manifest(req, cfg.seed));
  req.split = "val";
  req.pairs = cfg.mix_val_pairs;
  save_manifest(out_dir + "/val.tsv", build_manifest(req, cfg.seed + 1));
  req.split = "test";
  req.pairs = cfg.mix_eval_pairs;
  save_manifest(out_dir + "/test.tsv", build_manifest(req, cfg.seed + 2));

  std::cout << "wrote " << clean_pool.size() << " clean + " << noise_pool.size() << " noise tracks and "
            << cfg.mix_train_pairs << "/" << cfg.mix_val_pairs << "/" << cfg.mix_eval_pairs
            << " train/val/test pairs under " << out_dir << "\n";
}

void run_train(const std::string& config_path, const std::string& resume) {
  ModelConfig cfg = load_config(config_path);
  if (cfg.train_manifest.empty()) throw UsageError("config: train_manifest is required for training");
  const Manifest manifest = load_manifest(cfg.train_manifest);
  TrainResult result = train_model(cfg, manifest, cfg.ckpt_dir, resume);
  std::cout << "trained " << result.log.size() << " steps; first loss "
            << (result.log.empty() ? 0.0 : result.log.front().total) << ", last loss "
            << (result.log.empty() ? 0.0 : result.log.back().total) << "\ncheckpoint: "
            << result.final_checkpoint << "\n";
}

void run_enhance(const std::string& ckpt, const std::string& in_path, const std::string& out_path,
                 bool streaming) {
  Checkpoint ck = load_checkpoint(ckpt);
  const ModelConfig cfg = parse_config_text(ck.config_text);
  WaveBuffer noisy = read_wav(in_path);
  if (noisy.sample_rate != cfg.sample_rate)
    throw DataError("enhance: '" + in_path + "' sampled at " + std::to_string(noisy.sample_rate) +
                    " Hz, model expects " + std::to_string(cfg.sample_rate));
  WaveBuffer out;
  out.sample_rate = cfg.sample_rate;
  if (streaming) {
    StreamEnhancer stream(cfg, ck.store);
    const size_t hop = static_cast<size_t>(cfg.hop);
    for (size_t base = 0; base + hop <= noisy.samples.size(); base += hop) {
      std::vector<Real> chunk(noisy.samples.begin() + base, noisy.samples.begin() + base + hop);
      std::vector<Real> enhanced = stream.push(chunk);
      out.samples.insert(out.samples.end(), enhanced.begin(), enhanced.end());
    }
    std::vector<Real> tail = stream.finish();
    out.samples.insert(out.samples.end(), tail.begin(), tail.end());
  } else {
    out = enhance(cfg, ck.store, noisy);
  }
  write_wav(out_path, out);
  std::cout << "enhanced " << noisy.samples.size() << " samples -> " << out.samples.size() << " ("
            << (streaming ? "streaming" : "offline") << ")\n";
}

void run_eval(const std::string& ckpt, const std::string& manifest_path, const std::string& report_path) {
  Checkpoint ck = load_checkpoint(ckpt);
  const ModelConfig cfg = parse_config_text(ck.config_text);
  const Manifest manifest = load_manifest(manifest_path);
  const std::vector<EvalRow> rows = evaluate(cfg, ck.store, manifest);
  std::ofstream f(report_path);
  if (!f) throw DataError("eval: cannot write report '" + report_path + "'");
  f << report_text(rows);
  Real mean_si = 0.0, mean_si_noisy = 0.0;
  for (const EvalRow& r : rows) {
    mean_si += r.si_sdr_enh;
    mean_si_noisy += r.si_sdr_noisy;
  }
  if (!rows.empty()) {
    mean_si /= static_cast<Real>(rows.size());
    mean_si_noisy /= static_cast<Real>(rows.size());
  }
  std::cout << rows.size() << " pairs; mean SI-SDR " << mean_si << " dB (noisy " << mean_si_noisy
            << " dB); report: " << report_path << "\n";
}

void run_inspect(const std::string& config_path) {
  const ModelConfig cfg = load_config(config_path);
  const Index params = count_params(cfg);
  ParamStore store = model_init(cfg, cfg.seed);
  const Index macs = count_macs(cfg, 1.0);
  std::cout << "config (P, Q) = (" << cfg.p << ", " << cfg.q << "), recon = " << recon_name(cfg.recon)
            << ", norm = " << norm_name(cfg.norm) << "\n";
  std::cout << "parameters: " << params << " (" << static_cast<double>(params) / 1e6
            << " M); store total " << store.total_elements() << "\n";
  std::cout << "MACs for 1 s of audio: " << macs << " (" << static_cast<double>(macs) / 1e9
            << " G; convolution/linear multiplies only)\n";
  std::cout << describe_shapes(cfg);

  // local wall-clock for 1 s of audio; machine-dependent, printed for context
  WaveBuffer second;
  second.sample_rate = cfg.sample_rate;
  second.samples.resize(static_cast<size_t>(cfg.sample_rate));
  std::mt19937_64 rng(1);
  for (auto& s : second.samples) s = uniform(rng, -0.5, 0.5);
  {
    const auto t0 = std::chrono::steady_clock::now();
    enhance(cfg, store, second);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    std::cout << "offline enhance of 1 s audio: " << ms.count() << " ms on this machine\n";
  }
  if (cfg.norm == NormKind::kCumulative) {
    StreamEnhancer stream(cfg, store);
    std::cout << "streaming state: " << stream.state_scalars() << " scalars\n";
    const auto t0 = std::chrono::steady_clock::now();
    const size_t hop = static_cast<size_t>(cfg.hop);
    for (size_t base = 0; base + hop <= second.samples.size(); base += hop) {
      std::vector<Real> chunk(second.samples.begin() + base, second.samples.begin() + base + hop);
      stream.push(chunk);
    }
    stream.finish();
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    std::cout << "streaming enhance of 1 s audio: " << ms.count() << " ms ("
              << static_cast<double>(ms.count()) / (second.samples.size() / static_cast<double>(hop))
              << " ms per 10 ms hop)\n";
  } else {
    std::cout << "streaming: unavailable (norm = in depends on whole-utterance statistics)\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GaGNet-style monaural speech enhancement"};
  app.require_subcommand(1);

  std::string config_path, out_dir, ckpt, in_path, out_path, manifest_path, report_path, resume;
  std::uint64_t seed = 0;
  bool streaming = false;

  CLI::App* mix = app.add_subcommand("mix", "generate the procedural corpus and mixing manifests");
  mix->add_option("--config", config_path)->required();
  CLI::Option* seed_opt = mix->add_option("--seed", seed, "override the config seed");
  mix->add_option("--out", out_dir)->required();

  CLI::App* train = app.add_subcommand("train", "train from a manifest");
  train->add_option("--config", config_path)->required();
  train->add_option("--resume", resume, "checkpoint to resume from");

  CLI::App* enh = app.add_subcommand("enhance", "enhance one wav file");
  enh->add_option("--ckpt", ckpt)->required();
  enh->add_option("--in", in_path)->required();
  enh->add_option("--out", out_path)->required();
  enh->add_flag("--stream", streaming, "frame-by-frame causal inference");

  CLI::App* ev = app.add_subcommand("eval", "metric report over a manifest");
  ev->add_option("--ckpt", ckpt)->required();
  ev->add_option("--manifest", manifest_path)->required();
  ev->add_option("--report", report_path)->required();

  CLI::App* ins = app.add_subcommand("inspect", "parameter/MAC accounting and shape chain");
  ins->add_option("--config", config_path)->required();

  try {
    app.parse(argc, argv);
    if (mix->parsed()) run_mix(config_path, seed, seed_opt->count() > 0, out_dir);
    if (train->parsed()) run_train(config_path, resume);
    if (enh->parsed()) run_enhance(ckpt, in_path, out_path, streaming);
    if (ev->parsed()) run_eval(ckpt, manifest_path, report_path);
    if (ins->parsed()) run_inspect(config_path);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const gagnet::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const gagnet::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const gagnet::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
