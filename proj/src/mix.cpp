#include "gagnet/mix.hpp"

#include "gagnet/errors.hpp"
#include "gagnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gagnet {

namespace {

Real energy(const WaveBuffer& w) {
  Real e = 0.0;
  for (Real x : w.samples) e += x * x;
  return e;
}

std::string fmt_real(Real v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Real mix_gain(const WaveBuffer& clean, const WaveBuffer& noise, Real snr_db) {
  if (clean.size() != noise.size()) throw DataError("mix: clean and noise lengths differ");
  if (!std::isfinite(snr_db)) throw DataError("mix: SNR must be finite");
  const Real ec = energy(clean);
  const Real en = energy(noise);
  if (ec <= 0.0) throw DataError("mix: clean signal has zero energy");
  if (en <= 0.0) throw DataError("mix: noise signal has zero energy");
  return std::sqrt(ec / (en * std::pow(10.0, snr_db / 10.0)));
}

WaveBuffer mix_at_snr(const WaveBuffer& clean, const WaveBuffer& noise, Real snr_db) {
  const Real g = mix_gain(clean, noise, snr_db);
  WaveBuffer out = clean;
  for (size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += g * noise.samples[i];
  return out;
}

std::pair<WaveBuffer, WaveBuffer> synth_pair(const MixSpec& spec, Index chunk_samples) {
  WaveBuffer clean_full = read_wav(spec.clean_path);
  WaveBuffer noise_full = read_wav(spec.noise_path);
  if (clean_full.size() < chunk_samples)
    throw DataError("mix: clean file '" + spec.clean_path + "' shorter than the chunk");
  if (spec.offset < 0 || spec.offset + chunk_samples > noise_full.size())
    throw DataError("mix: noise file '" + spec.noise_path + "' too short for offset " +
                    std::to_string(spec.offset));

  WaveBuffer clean;
  clean.sample_rate = clean_full.sample_rate;
  clean.samples.assign(clean_full.samples.begin(), clean_full.samples.begin() + chunk_samples);
  WaveBuffer cut;
  cut.sample_rate = noise_full.sample_rate;
  cut.samples.assign(noise_full.samples.begin() + spec.offset,
                     noise_full.samples.begin() + spec.offset + chunk_samples);

  const Real g = mix_gain(clean, cut, spec.snr_db);
  WaveBuffer noisy = clean;
  for (size_t i = 0; i < noisy.samples.size(); ++i) noisy.samples[i] += g * cut.samples[i];
  if (spec.rescale != 1.0) {
    for (size_t i = 0; i < noisy.samples.size(); ++i) {
      noisy.samples[i] *= spec.rescale;
      clean.samples[i] *= spec.rescale;
    }
  }
  return {std::move(noisy), std::move(clean)};
}

Manifest build_manifest(const ManifestRequest& req, std::uint64_t seed) {
  if (req.clean_pool.empty()) throw DataError("manifest: clean pool is empty");
  if (req.noise_pool.empty()) throw DataError("manifest: noise pool is empty");
  if (req.pairs <= 0) throw UsageError("manifest: pair count must be positive");

  Manifest m;
  m.seed = seed;
  m.split = req.split;
  m.chunk_samples = req.chunk_samples;
  m.sample_rate = req.sample_rate;
  std::mt19937_64 rng(seed);

  for (Index i = 0; i < req.pairs; ++i) {
    MixSpec spec;
    spec.clean_path = req.clean_pool[static_cast<size_t>(
        uniform_int(rng, 0, static_cast<Index>(req.clean_pool.size()) - 1))];
    spec.noise_path = req.noise_pool[static_cast<size_t>(
        uniform_int(rng, 0, static_cast<Index>(req.noise_pool.size()) - 1))];
    if (req.split == "train")
      spec.snr_db = uniform(rng, req.snr_low, req.snr_high);
    else
      spec.snr_db = req.snr_grid[static_cast<size_t>(i) % req.snr_grid.size()];

    const WaveBuffer noise = read_wav(spec.noise_path);
    if (noise.size() < req.chunk_samples)
      throw DataError("manifest: noise file '" + spec.noise_path + "' shorter than the chunk");
    spec.offset = uniform_int(rng, 0, noise.size() - req.chunk_samples);

    spec.rescale = 1.0;
    auto [noisy, clean] = synth_pair(spec, req.chunk_samples);
    Real peak = 0.0;
    for (Real x : noisy.samples) peak = std::max(peak, std::abs(x));
    if (peak > 1.0) spec.rescale = 0.99 / peak;
    m.items.push_back(std::move(spec));
  }
  return m;
}

std::string serialize_manifest(const Manifest& m) {
  std::ostringstream os;
  os << "# gagnet-manifest v1\n";
  os << "# seed=" << m.seed << " split=" << m.split << " chunk_samples=" << m.chunk_samples
     << " sample_rate=" << m.sample_rate << "\n";
  for (const MixSpec& s : m.items) {
    os << s.clean_path << '\t' << s.noise_path << '\t' << fmt_real(s.snr_db) << '\t' << s.offset
       << '\t' << fmt_real(s.rescale) << '\n';
  }
  return os.str();
}

Manifest parse_manifest(const std::string& text) {
  Manifest m;
  std::istringstream is(text);
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "seed") m.seed = std::stoull(val);
        else if (key == "split") m.split = val;
        else if (key == "chunk_samples") m.chunk_samples = std::stoll(val);
        else if (key == "sample_rate") m.sample_rate = std::stoi(val);
      }
      have_header = true;
      continue;
    }
    std::istringstream ls(line);
    MixSpec s;
    if (!(ls >> s.clean_path >> s.noise_path >> s.snr_db >> s.offset >> s.rescale))
      throw DataError("manifest: malformed record '" + line + "'");
    m.items.push_back(std::move(s));
  }
  if (!have_header) throw DataError("manifest: missing header line");
  return m;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("manifest: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_manifest(ss.str());
}

void save_manifest(const std::string& path, const Manifest& m) {
  std::ofstream f(path);
  if (!f) throw DataError("manifest: cannot write '" + path + "'");
  f << serialize_manifest(m);
}

WaveBuffer toy_clean_utterance(std::uint64_t seed, Index len, int sample_rate) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  WaveBuffer w;
  w.sample_rate = sample_rate;
  w.samples.assign(static_cast<size_t>(len), 0.0);
  const Real sr = static_cast<Real>(sample_rate);

  const int tones = 2 + static_cast<int>(uniform_int(rng, 0, 2));
  const Real f0 = uniform(rng, 150.0, 400.0);
  for (int k = 0; k < tones; ++k) {
    const Real freq = f0 * static_cast<Real>(k + 1) * uniform(rng, 0.98, 1.02);
    const Real amp = 0.6 / static_cast<Real>(k + 1);
    const Real phase = uniform(rng, 0.0, 2.0 * M_PI);
    const Real trem_rate = uniform(rng, 1.0, 4.0);
    const Real trem_depth = uniform(rng, 0.05, 0.2);
    for (Index n = 0; n < len; ++n) {
      const Real t = static_cast<Real>(n) / sr;
      const Real env = 1.0 - trem_depth * 0.5 * (1.0 + std::cos(2.0 * M_PI * trem_rate * t));
      w.samples[static_cast<size_t>(n)] += amp * env * std::sin(2.0 * M_PI * freq * t + phase);
    }
  }
  if (uniform01(rng) < 0.35) {  // occasional light chirp sweep on top
    const Real fa = uniform(rng, 300.0, 800.0);
    const Real fb = uniform(rng, 900.0, 1800.0);
    const Real dur = static_cast<Real>(len) / sr;
    for (Index n = 0; n < len; ++n) {
      const Real t = static_cast<Real>(n) / sr;
      const Real f_inst = fa + (fb - fa) * t / (2.0 * dur);
      w.samples[static_cast<size_t>(n)] += 0.12 * std::sin(2.0 * M_PI * f_inst * t);
    }
  }
  // Attack/release so chunks do not click.
  const Index ramp = std::min<Index>(len / 16, 800);
  for (Index n = 0; n < ramp; ++n) {
    const Real r = static_cast<Real>(n) / static_cast<Real>(ramp);
    w.samples[static_cast<size_t>(n)] *= r;
    w.samples[static_cast<size_t>(len - 1 - n)] *= r;
  }
  Real peak = 1e-12;
  for (Real x : w.samples) peak = std::max(peak, std::abs(x));
  for (Real& x : w.samples) x *= 0.5 / peak;
  return w;
}

WaveBuffer toy_noise_track(std::uint64_t seed, Index len, int sample_rate, bool babble) {
  std::mt19937_64 rng(seed ^ 0xc2b2ae3d27d4eb4full);
  WaveBuffer w;
  w.sample_rate = sample_rate;
  w.samples.assign(static_cast<size_t>(len), 0.0);
  const Real sr = static_cast<Real>(sample_rate);
  for (Index n = 0; n < len; ++n) w.samples[static_cast<size_t>(n)] = normal(rng);
  if (babble) {
    // Pile of wandering tones over the noise floor, a crude crowd murmur.
    for (int k = 0; k < 10; ++k) {
      const Real freq = uniform(rng, 120.0, 1200.0);
      const Real rate = uniform(rng, 0.5, 3.0);
      const Real phase = uniform(rng, 0.0, 2.0 * M_PI);
      for (Index n = 0; n < len; ++n) {
        const Real t = static_cast<Real>(n) / sr;
        const Real env = 0.5 * (1.0 + std::sin(2.0 * M_PI * rate * t + phase));
        w.samples[static_cast<size_t>(n)] += 2.0 * env * std::sin(2.0 * M_PI * freq * t + 3.0 * phase);
      }
    }
  }
  Real peak = 1e-12;
  for (Real x : w.samples) peak = std::max(peak, std::abs(x));
  for (Real& x : w.samples) x *= 0.5 / peak;
  return w;
}

}  // namespace gagnet
