#include "gagnet/crm.hpp"

#include "gagnet/errors.hpp"

#include <cmath>

namespace gagnet {

namespace {

void expect_match(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b))
    throw UsageError(std::string(who) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace

std::pair<Tensor, Tensor> decouple(const Tensor& real, const Tensor& imag) {
  expect_match(real, imag, "decouple");
  Tensor mag(real.dims()), phase(real.dims());
  for (Index i = 0; i < real.numel(); ++i) {
    const Real r = real[i], im = imag[i];
    const Real m = std::hypot(r, im);
    mag[i] = m;
    phase[i] = m > 0.0 ? std::atan2(im, r) : 0.0;
  }
  return {std::move(mag), std::move(phase)};
}

StageEstimate crm_reconstruct(const StageEstimate& prev, const Tensor& gain, const Tensor& fr,
                              const Tensor& fi) {
  expect_match(prev.real, prev.imag, "crm_reconstruct");
  expect_match(prev.real, gain, "crm_reconstruct gain");
  expect_match(prev.real, fr, "crm_reconstruct residual");
  expect_match(prev.real, fi, "crm_reconstruct residual");
  auto [mag, phase] = decouple(prev.real, prev.imag);
  StageEstimate out;
  out.stage = prev.stage + 1;
  out.real = Tensor(prev.real.dims());
  out.imag = Tensor(prev.real.dims());
  for (Index i = 0; i < mag.numel(); ++i) {
    const Real filtered = mag[i] * gain[i];
    out.real[i] = filtered * std::cos(phase[i]) + fr[i];
    out.imag[i] = filtered * std::sin(phase[i]) + fi[i];
  }
  return out;
}

StageEstimate reconstruct_variant(ReconMode mode, const StageEstimate& prev, const Tensor* gain,
                                  const Tensor* fr, const Tensor* fi) {
  auto need = [&](const Tensor* t, const char* what) -> const Tensor& {
    if (t == nullptr)
      throw UsageError(std::string("reconstruct: mode ") + recon_name(mode) + " requires the " + what +
                       " branch");
    return *t;
  };
  StageEstimate out;
  out.stage = prev.stage + 1;
  switch (mode) {
    case ReconMode::kCrm:
      return crm_reconstruct(prev, need(gain, "gain"), need(fr, "residual"), need(fi, "residual"));
    case ReconMode::kMag: {
      const Tensor& g = need(gain, "gain");
      expect_match(prev.real, g, "reconstruct mag");
      auto [mag, phase] = decouple(prev.real, prev.imag);
      out.real = Tensor(prev.real.dims());
      out.imag = Tensor(prev.real.dims());
      for (Index i = 0; i < mag.numel(); ++i) {
        const Real filtered = mag[i] * g[i];
        out.real[i] = filtered * std::cos(phase[i]);
        out.imag[i] = filtered * std::sin(phase[i]);
      }
      return out;
    }
    case ReconMode::kCom: {
      out.real = need(fr, "complex");
      out.imag = need(fi, "complex");
      expect_match(prev.real, out.real, "reconstruct com");
      expect_match(prev.real, out.imag, "reconstruct com");
      return out;
    }
    case ReconMode::kPhasen: {
      const Tensor& g = need(gain, "gain");
      const Tensor& pc = need(fr, "phase (cos)");
      const Tensor& ps = need(fi, "phase (sin)");
      expect_match(prev.real, g, "reconstruct phasen");
      expect_match(prev.real, pc, "reconstruct phasen");
      expect_match(prev.real, ps, "reconstruct phasen");
      auto [mag, phase] = decouple(prev.real, prev.imag);
      (void)phase;
      out.real = Tensor(prev.real.dims());
      out.imag = Tensor(prev.real.dims());
      for (Index i = 0; i < mag.numel(); ++i) {
        const Real norm = std::max(std::hypot(pc[i], ps[i]), 1e-12);
        const Real filtered = mag[i] * g[i];
        out.real[i] = filtered * pc[i] / norm;
        out.imag[i] = filtered * ps[i] / norm;
      }
      return out;
    }
  }
  throw std::logic_error("reconstruct: unhandled mode");
}

}  // namespace gagnet
