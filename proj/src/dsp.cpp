#include "gagnet/dsp.hpp"

#include "gagnet/errors.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace gagnet {

namespace {

// Overlap-add normalizer floor. Interior samples see sum(w^2) in [0.5, 1];
// partially covered edge samples would otherwise divide by a vanishing window
// power, which blows up once the spectrum has been modified (masking makes the
// numerator non-vanishing there). Clamping attenuates those edge samples
// instead of amplifying them.
constexpr Real kOlaFloor = 1e-2;

void check_beta(Real beta) {
  if (!(beta > 0.0) || beta > 1.0) throw UsageError("compression exponent must lie in (0, 1]");
}

}  // namespace

Tensor hann_window(Index len) {
  Tensor w({len});
  for (Index n = 0; n < len; ++n)
    w[n] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<Real>(n) / static_cast<Real>(len)));
  return w;
}

Index stft_frames(Index len, Index frame_len, Index hop) {
  if (len < frame_len) return 0;
  return (len - frame_len) / hop + 1;
}

FrameDft::FrameDft(Index frame_len, Index n_fft) : frame_len_(frame_len), n_fft_(n_fft) {
  if (n_fft < frame_len) throw UsageError("stft: n_fft shorter than the frame");
  if (frame_len <= 0) throw UsageError("stft: frame length must be positive");
  window_ = hann_window(frame_len);
  const Index f_bins = bins();
  fwd_cos_.resize(f_bins, frame_len);
  fwd_sin_.resize(f_bins, frame_len);
  for (Index k = 0; k < f_bins; ++k) {
    for (Index n = 0; n < frame_len; ++n) {
      const Real ang = 2.0 * M_PI * static_cast<Real>(k) * static_cast<Real>(n) / static_cast<Real>(n_fft);
      fwd_cos_(k, n) = std::cos(ang) * window_[n];
      fwd_sin_(k, n) = -std::sin(ang) * window_[n];
    }
  }
  // Hermitian fold of the full inverse DFT: weight 1 for DC and Nyquist, 2 for
  // interior bins, all scaled by 1/N.
  inv_re_.resize(frame_len, f_bins);
  inv_im_.resize(frame_len, f_bins);
  for (Index n = 0; n < frame_len; ++n) {
    for (Index k = 0; k < f_bins; ++k) {
      const Real ang = 2.0 * M_PI * static_cast<Real>(k) * static_cast<Real>(n) / static_cast<Real>(n_fft);
      const Real fold = (k == 0 || 2 * k == n_fft) ? 1.0 : 2.0;
      inv_re_(n, k) = fold * std::cos(ang) / static_cast<Real>(n_fft);
      inv_im_(n, k) = -fold * std::sin(ang) / static_cast<Real>(n_fft);
    }
  }
}

void FrameDft::forward(const Real* frame, Real* re, Real* im) const {
  Eigen::Map<const Eigen::VectorXd> x(frame, frame_len_);
  Eigen::Map<Eigen::VectorXd>(re, bins()).noalias() = fwd_cos_ * x;
  Eigen::Map<Eigen::VectorXd>(im, bins()).noalias() = fwd_sin_ * x;
}

void FrameDft::inverse(const Real* re, const Real* im, Real* frame) const {
  Eigen::Map<const Eigen::VectorXd> r(re, bins());
  Eigen::Map<const Eigen::VectorXd> i(im, bins());
  Eigen::Map<Eigen::VectorXd>(frame, frame_len_).noalias() = inv_re_ * r + inv_im_ * i;
}

namespace {

const FrameDft& cached_dft(Index frame_len, Index n_fft) {
  static thread_local FrameDft cached(320, 320);
  if (cached.frame_len() != frame_len || cached.n_fft() != n_fft)
    cached = FrameDft(frame_len, n_fft);
  return cached;
}

}  // namespace

ComplexSpectrogram stft(const WaveBuffer& wave, Index frame_len, Index hop, Index n_fft) {
  if (hop <= 0 || frame_len <= 0) throw UsageError("stft: frame and hop must be positive");
  const Index len = wave.size();
  if (len < frame_len)
    throw DataError("stft: signal of " + std::to_string(len) + " samples is shorter than one frame (" +
                    std::to_string(frame_len) + ")");
  const FrameDft& dft = cached_dft(frame_len, n_fft);
  const Index t_frames = stft_frames(len, frame_len, hop);
  const Index f_bins = dft.bins();

  MatrixR<Real> frames(frame_len, t_frames);
  for (Index t = 0; t < t_frames; ++t)
    for (Index n = 0; n < frame_len; ++n)
      frames(n, t) = wave.samples[static_cast<size_t>(t * hop + n)];

  ComplexSpectrogram spec;
  spec.frame_len = frame_len;
  spec.hop = hop;
  spec.n_fft = n_fft;
  spec.beta = 1.0;
  spec.real = Tensor({t_frames, f_bins});
  spec.imag = Tensor({t_frames, f_bins});
  MatrixR<Real> re = dft.fwd_cos_ * frames;  // (F, T)
  MatrixR<Real> im = dft.fwd_sin_ * frames;
  mat_view(spec.real, t_frames, f_bins) = re.transpose();
  mat_view(spec.imag, t_frames, f_bins) = im.transpose();
  return spec;
}

WaveBuffer istft(const ComplexSpectrogram& spec, int sample_rate) {
  if (spec.beta < 1.0) throw UsageError("istft: input is power-compressed; decompress first");
  if (spec.real.rank() != 2 || !spec.real.same_shape(spec.imag))
    throw UsageError("istft: real/imag planes must be matching T x F grids");
  const FrameDft& dft = cached_dft(spec.frame_len, spec.n_fft);
  const Index t_frames = spec.frames();
  const Index f_bins = spec.bins();
  if (f_bins != dft.bins()) throw UsageError("istft: bin count does not match n_fft");
  if (t_frames < 1) throw UsageError("istft: empty spectrogram");
  const Tensor& w = dft.window();

  const Index out_len = (t_frames - 1) * spec.hop + spec.frame_len;
  std::vector<Real> acc(static_cast<size_t>(out_len), 0.0);
  std::vector<Real> wsum(static_cast<size_t>(out_len), 0.0);

  MatrixR<Real> re = mat_view(spec.real, t_frames, f_bins).transpose();  // (F, T)
  MatrixR<Real> im = mat_view(spec.imag, t_frames, f_bins).transpose();
  MatrixR<Real> frames = dft.inv_re_ * re + dft.inv_im_ * im;  // (frame_len, T)

  for (Index t = 0; t < t_frames; ++t) {
    const Index base = t * spec.hop;
    for (Index n = 0; n < spec.frame_len; ++n) {
      acc[static_cast<size_t>(base + n)] += frames(n, t) * w[n];
      wsum[static_cast<size_t>(base + n)] += w[n] * w[n];
    }
  }

  WaveBuffer out;
  out.sample_rate = sample_rate;
  out.samples.resize(static_cast<size_t>(out_len));
  for (Index i = 0; i < out_len; ++i)
    out.samples[static_cast<size_t>(i)] =
        acc[static_cast<size_t>(i)] / std::max(wsum[static_cast<size_t>(i)], kOlaFloor);
  return out;
}

ComplexSpectrogram compress(const ComplexSpectrogram& spec, Real beta) {
  check_beta(beta);
  if (spec.beta != 1.0) throw UsageError("compress: input already compressed (beta tag < 1)");
  ComplexSpectrogram out = spec;
  if (beta == 1.0) return out;
  const Index n = spec.real.numel();
  for (Index i = 0; i < n; ++i) {
    const Real re = spec.real[i], im = spec.imag[i];
    const Real mag = std::hypot(re, im);
    // |z|^beta (cos, sin) = |z|^(beta-1) z; exactly zero stays zero.
    const Real s = mag > 0.0 ? std::pow(mag, beta - 1.0) : 0.0;
    out.real[i] = re * s;
    out.imag[i] = im * s;
  }
  out.beta = beta;
  return out;
}

ComplexSpectrogram decompress(const ComplexSpectrogram& spec) {
  check_beta(spec.beta);
  if (spec.beta >= 1.0) throw UsageError("decompress: input is not compressed (beta tag is 1)");
  ComplexSpectrogram out = spec;
  const Real inv = 1.0 / spec.beta;
  const Index n = spec.real.numel();
  for (Index i = 0; i < n; ++i) {
    const Real re = spec.real[i], im = spec.imag[i];
    const Real mag = std::hypot(re, im);
    const Real s = mag > 0.0 ? std::pow(mag, inv - 1.0) : 0.0;
    out.real[i] = re * s;
    out.imag[i] = im * s;
  }
  out.beta = 1.0;
  return out;
}

}  // namespace gagnet
