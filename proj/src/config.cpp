#include "gagnet/config.hpp"

#include "gagnet/errors.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace gagnet {

std::vector<Real> ModelConfig::lambdas() const {
  std::vector<Real> out(static_cast<size_t>(q), lambda_mid);
  out.back() = lambda_last;
  return out;
}

void ModelConfig::validate() const {
  auto req = [](bool ok, const std::string& msg) {
    if (!ok) throw UsageError("config: " + msg);
  };
  req(sample_rate > 0, "sample_rate must be positive");
  req(n_fft > 0 && frame_len > 0 && hop > 0, "n_fft, frame_len and hop must be positive");
  req(frame_len <= n_fft, "frame_len must not exceed n_fft");
  req(hop <= frame_len, "hop must not exceed frame_len");
  req(beta > 0.0 && beta <= 1.0, "beta must lie in (0, 1], got " + std::to_string(beta));
  req(channels > 0, "channels must be positive");
  req(feat_dim > 0, "feat_dim must be positive");
  req(squeeze_dim > 0, "squeeze_dim must be positive");
  req(p >= 1, "p must be >= 1, got " + std::to_string(p));
  req(q >= 1, "q must be >= 1, got " + std::to_string(q));
  req(!unet_depths.empty(), "unet_depths must name at least one REL");
  for (Index m : unet_depths) req(m >= 1, "unet_depths entries must be >= 1");
  req(kernel_t >= 1 && kernel_f >= 1 && unet_kernel_f >= 1, "kernel sizes must be >= 1");
  req(stride_f >= 1, "stride_f must be >= 1");
  req(!dilations.empty(), "dilations must be non-empty");
  for (Index d : dilations) req(d >= 1, "dilations must be positive");
  req(stcm_per_group == static_cast<Index>(dilations.size()),
      "stcm_per_group must match the dilation list length");
  req(lambda_mid >= 0.0 && lambda_last >= 0.0, "loss weights must be non-negative");
  req(lambda_last == 1.0, "lambda_last must be 1.0 (final stage anchors the loss)");
  req(lr > 0.0, "lr must be positive");
  req(batch >= 1, "batch must be >= 1");
  req(epochs >= 1, "epochs must be >= 1");
  req(max_steps >= 0, "max_steps must be >= 0");
  req(chunk_seconds > 0.0, "chunk_seconds must be positive");
  req(chunk_samples() >= frame_len, "chunk shorter than one analysis frame");
  req(snr_train_low <= snr_train_high, "snr_train_low must not exceed snr_train_high");
  req(!snr_eval_grid.empty(), "snr_eval_grid must be non-empty");
  req(mix_clean_count > 0 && mix_noise_count > 0, "mix pools must be positive");
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Index to_index(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long long r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return static_cast<Index>(r);
  } catch (const std::exception&) {
    throw UsageError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

Real to_real(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw UsageError("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

std::string recon_name(ReconMode m) {
  switch (m) {
    case ReconMode::kCrm: return "crm";
    case ReconMode::kMag: return "mag";
    case ReconMode::kCom: return "com";
    case ReconMode::kPhasen: return "phasen";
  }
  return "crm";
}

std::string norm_name(NormKind n) { return n == NormKind::kCumulative ? "cin" : "in"; }

ModelConfig parse_config_text(const std::string& text) {
  ModelConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"sample_rate", [&](const std::string& k, const std::string& v) { cfg.sample_rate = static_cast<int>(to_index(k, v)); }},
      {"n_fft", [&](const std::string& k, const std::string& v) { cfg.n_fft = to_index(k, v); }},
      {"frame_len", [&](const std::string& k, const std::string& v) { cfg.frame_len = to_index(k, v); }},
      {"hop", [&](const std::string& k, const std::string& v) { cfg.hop = to_index(k, v); }},
      {"beta", [&](const std::string& k, const std::string& v) { cfg.beta = to_real(k, v); }},
      {"channels", [&](const std::string& k, const std::string& v) { cfg.channels = to_index(k, v); }},
      {"feat_dim", [&](const std::string& k, const std::string& v) { cfg.feat_dim = to_index(k, v); }},
      {"squeeze_dim", [&](const std::string& k, const std::string& v) { cfg.squeeze_dim = to_index(k, v); }},
      {"p", [&](const std::string& k, const std::string& v) { cfg.p = to_index(k, v); }},
      {"q", [&](const std::string& k, const std::string& v) { cfg.q = to_index(k, v); }},
      {"unet_depths", [&](const std::string& k, const std::string& v) {
         cfg.unet_depths.clear();
         for (const auto& s : split_list(v)) cfg.unet_depths.push_back(to_index(k, s));
       }},
      {"kernel_t", [&](const std::string& k, const std::string& v) { cfg.kernel_t = to_index(k, v); }},
      {"kernel_f", [&](const std::string& k, const std::string& v) { cfg.kernel_f = to_index(k, v); }},
      {"stride_f", [&](const std::string& k, const std::string& v) { cfg.stride_f = to_index(k, v); }},
      {"unet_kernel_f", [&](const std::string& k, const std::string& v) { cfg.unet_kernel_f = to_index(k, v); }},
      {"dilations", [&](const std::string& k, const std::string& v) {
         cfg.dilations.clear();
         for (const auto& s : split_list(v)) cfg.dilations.push_back(to_index(k, s));
         cfg.stcm_per_group = static_cast<Index>(cfg.dilations.size());
       }},
      {"recon", [&](const std::string& k, const std::string& v) {
         if (v == "crm") cfg.recon = ReconMode::kCrm;
         else if (v == "mag") cfg.recon = ReconMode::kMag;
         else if (v == "com") cfg.recon = ReconMode::kCom;
         else if (v == "phasen") cfg.recon = ReconMode::kPhasen;
         else throw UsageError("config: key '" + k + "' expects crm|mag|com|phasen, got '" + v + "'");
       }},
      {"norm", [&](const std::string& k, const std::string& v) {
         if (v == "cin") cfg.norm = NormKind::kCumulative;
         else if (v == "in") cfg.norm = NormKind::kInstance;
         else throw UsageError("config: key '" + k + "' expects cin|in, got '" + v + "'");
       }},
      {"lambda_mid", [&](const std::string& k, const std::string& v) { cfg.lambda_mid = to_real(k, v); }},
      {"lambda_last", [&](const std::string& k, const std::string& v) { cfg.lambda_last = to_real(k, v); }},
      {"lr", [&](const std::string& k, const std::string& v) { cfg.lr = to_real(k, v); }},
      {"batch", [&](const std::string& k, const std::string& v) { cfg.batch = to_index(k, v); }},
      {"epochs", [&](const std::string& k, const std::string& v) { cfg.epochs = to_index(k, v); }},
      {"max_steps", [&](const std::string& k, const std::string& v) { cfg.max_steps = to_index(k, v); }},
      {"seed", [&](const std::string& k, const std::string& v) { cfg.seed = static_cast<std::uint64_t>(to_index(k, v)); }},
      {"chunk_seconds", [&](const std::string& k, const std::string& v) { cfg.chunk_seconds = to_real(k, v); }},
      {"train_manifest", [&](const std::string&, const std::string& v) { cfg.train_manifest = v; }},
      {"val_manifest", [&](const std::string&, const std::string& v) { cfg.val_manifest = v; }},
      {"ckpt_dir", [&](const std::string&, const std::string& v) { cfg.ckpt_dir = v; }},
      {"mix_clean_count", [&](const std::string& k, const std::string& v) { cfg.mix_clean_count = to_index(k, v); }},
      {"mix_noise_count", [&](const std::string& k, const std::string& v) { cfg.mix_noise_count = to_index(k, v); }},
      {"mix_train_pairs", [&](const std::string& k, const std::string& v) { cfg.mix_train_pairs = to_index(k, v); }},
      {"mix_val_pairs", [&](const std::string& k, const std::string& v) { cfg.mix_val_pairs = to_index(k, v); }},
      {"mix_eval_pairs", [&](const std::string& k, const std::string& v) { cfg.mix_eval_pairs = to_index(k, v); }},
      {"snr_train_low", [&](const std::string& k, const std::string& v) { cfg.snr_train_low = to_real(k, v); }},
      {"snr_train_high", [&](const std::string& k, const std::string& v) { cfg.snr_train_high = to_real(k, v); }},
      {"snr_eval_grid", [&](const std::string& k, const std::string& v) {
         cfg.snr_eval_grid.clear();
         for (const auto& s : split_list(v)) cfg.snr_eval_grid.push_back(to_real(k, s));
       }},
  };

  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config: line " + std::to_string(line_no) + " is not 'key = value': '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) throw UsageError("config: unknown key '" + key + "'");
    it->second(key, val);
  }
  cfg.validate();
  return cfg;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const ModelConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  auto list_i = [](const std::vector<Index>& v) {
    std::ostringstream s;
    for (size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    return s.str();
  };
  auto list_r = [](const std::vector<Real>& v) {
    std::ostringstream s;
    s.precision(17);
    for (size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    return s.str();
  };
  os << "sample_rate = " << cfg.sample_rate << "\n";
  os << "n_fft = " << cfg.n_fft << "\n";
  os << "frame_len = " << cfg.frame_len << "\n";
  os << "hop = " << cfg.hop << "\n";
  os << "beta = " << cfg.beta << "\n";
  os << "channels = " << cfg.channels << "\n";
  os << "feat_dim = " << cfg.feat_dim << "\n";
  os << "squeeze_dim = " << cfg.squeeze_dim << "\n";
  os << "p = " << cfg.p << "\n";
  os << "q = " << cfg.q << "\n";
  os << "unet_depths = " << list_i(cfg.unet_depths) << "\n";
  os << "kernel_t = " << cfg.kernel_t << "\n";
  os << "kernel_f = " << cfg.kernel_f << "\n";
  os << "stride_f = " << cfg.stride_f << "\n";
  os << "unet_kernel_f = " << cfg.unet_kernel_f << "\n";
  os << "dilations = " << list_i(cfg.dilations) << "\n";
  os << "recon = " << recon_name(cfg.recon) << "\n";
  os << "norm = " << norm_name(cfg.norm) << "\n";
  os << "lambda_mid = " << cfg.lambda_mid << "\n";
  os << "lambda_last = " << cfg.lambda_last << "\n";
  os << "lr = " << cfg.lr << "\n";
  os << "batch = " << cfg.batch << "\n";
  os << "epochs = " << cfg.epochs << "\n";
  os << "max_steps = " << cfg.max_steps << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "chunk_seconds = " << cfg.chunk_seconds << "\n";
  if (!cfg.train_manifest.empty()) os << "train_manifest = " << cfg.train_manifest << "\n";
  if (!cfg.val_manifest.empty()) os << "val_manifest = " << cfg.val_manifest << "\n";
  os << "ckpt_dir = " << cfg.ckpt_dir << "\n";
  os << "mix_clean_count = " << cfg.mix_clean_count << "\n";
  os << "mix_noise_count = " << cfg.mix_noise_count << "\n";
  os << "mix_train_pairs = " << cfg.mix_train_pairs << "\n";
  os << "mix_val_pairs = " << cfg.mix_val_pairs << "\n";
  os << "mix_eval_pairs = " << cfg.mix_eval_pairs << "\n";
  os << "snr_train_low = " << cfg.snr_train_low << "\n";
  os << "snr_train_high = " << cfg.snr_train_high << "\n";
  os << "snr_eval_grid = " << list_r(cfg.snr_eval_grid) << "\n";
  return os.str();
}

}  // namespace gagnet
