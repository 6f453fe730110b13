#pragma once

#include "gagnet/tensor.hpp"
#include "gagnet/wav.hpp"

namespace gagnet {

/// T x F complex grid as separate real/imag planes (row-major, frames outer).
/// beta tags the magnitude compression state: 1.0 = uncompressed.
struct ComplexSpectrogram {
  Tensor real;  // (T, F)
  Tensor imag;  // (T, F)
  Index frame_len = 320;
  Index hop = 160;
  Index n_fft = 320;
  Real beta = 1.0;

  Index frames() const { return real.rank() == 2 ? real.dim(0) : 0; }
  Index bins() const { return real.rank() == 2 ? real.dim(1) : 0; }
};

/// Hann window, periodic convention: w[n] = 0.5 (1 - cos(2 pi n / N)).
Tensor hann_window(Index len);

/// Number of analysis frames for a signal of length `len`: frames start at
/// sample 0, no center padding, trailing partial frames dropped.
Index stft_frames(Index len, Index frame_len, Index hop);

/// Windowed real DFT of one frame and its inverse, as dense matrix products.
class FrameDft {
 public:
  FrameDft(Index frame_len, Index n_fft);
  Index bins() const { return n_fft_ / 2 + 1; }
  Index frame_len() const { return frame_len_; }
  Index n_fft() const { return n_fft_; }
  /// Analysis of one frame (window applied here): re/im get bins() values.
  void forward(const Real* frame, Real* re, Real* im) const;
  /// Synthesis of one raw frame (no window, no overlap normalization).
  void inverse(const Real* re, const Real* im, Real* frame) const;
  const Tensor& window() const { return window_; }

 private:
  friend ComplexSpectrogram stft(const WaveBuffer&, Index, Index, Index);
  friend WaveBuffer istft(const ComplexSpectrogram&, int);
  Index frame_len_;
  Index n_fft_;
  Tensor window_;
  MatrixR<Real> fwd_cos_, fwd_sin_;  // (F, frame_len), window folded in
  MatrixR<Real> inv_re_, inv_im_;   // (frame_len, F)
};

ComplexSpectrogram stft(const WaveBuffer& wave, Index frame_len = 320, Index hop = 160, Index n_fft = 320);

/// Overlap-add synthesis with squared-window normalization. Rejects compressed
/// input (decompress first). Output length is (T-1)*hop + frame_len.
WaveBuffer istft(const ComplexSpectrogram& spec, int sample_rate = 16000);

/// Magnitude to |.|^beta, phase untouched. Requires an uncompressed input and
/// beta in (0, 1].
ComplexSpectrogram compress(const ComplexSpectrogram& spec, Real beta);

/// Inverse of compress: magnitude to |.|^(1/beta). Requires beta tag < 1.
ComplexSpectrogram decompress(const ComplexSpectrogram& spec);

}  // namespace gagnet
