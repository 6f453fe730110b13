#include "gagnet/objective.hpp"

#include "gagnet/errors.hpp"

#include <cmath>

namespace gagnet {

Var stage_loss(Var est_r, Var est_i, const Tensor& target_r, const Tensor& target_i,
               const Tensor* frame_mask) {
  Tape& tape = *est_r.tape;
  const Tensor& er = tape.val(est_r);
  if (!er.same_shape(target_r) || !tape.val(est_i).same_shape(target_i) ||
      !target_r.same_shape(target_i))
    throw UsageError("stage_loss: estimate " + er.shape_str() + " and target " + target_r.shape_str() +
                     " shapes must match");
  Real n = static_cast<Real>(target_r.numel());
  if (frame_mask != nullptr) {
    if (!frame_mask->same_shape(target_r)) throw UsageError("stage_loss: mask shape mismatch");
    n = frame_mask->flat().sum();
    if (n <= 0.0) throw UsageError("stage_loss: mask selects no cells");
  }

  Var tr = tape.leaf(target_r);
  Var ti = tape.leaf(target_i);
  Var dr = sub(est_r, tr);
  Var di = sub(est_i, ti);
  Var dm = sub(magnitude(est_r, est_i), magnitude(tr, ti));
  Var sq_r = mul(dr, dr);
  Var sq_i = mul(di, di);
  Var sq_m = mul(dm, dm);
  if (frame_mask != nullptr) {
    Var mask = tape.leaf(*frame_mask);
    sq_r = mul(sq_r, mask);
    sq_i = mul(sq_i, mask);
    sq_m = mul(sq_m, mask);
  }
  Var total = add(add(sum_all(sq_r), sum_all(sq_i)), sum_all(sq_m));
  return scale(total, 1.0 / (2.0 * n));
}

Var total_loss(const std::vector<StageVars>& stages, const Tensor& target_r,
               const Tensor& target_i, const std::vector<Real>& lambdas, const Tensor* frame_mask) {
  if (stages.empty()) throw UsageError("total_loss: no stage outputs");
  if (lambdas.size() != stages.size())
    throw UsageError("total_loss: " + std::to_string(lambdas.size()) + " weights for " +
                     std::to_string(stages.size()) + " stages");
  Var acc;
  for (size_t q = 0; q < stages.size(); ++q) {
    Var lq = scale(stage_loss(stages[q].sr, stages[q].si, target_r, target_i, frame_mask), lambdas[q]);
    acc = q == 0 ? lq : add(acc, lq);
  }
  return acc;
}

namespace {

constexpr Real kDbClamp = 60.0;

Real clamp_db(Real num, Real den) {
  if (num <= 0.0) return -kDbClamp;
  if (den <= 0.0) return kDbClamp;
  const Real db = 10.0 * std::log10(num / den);
  return std::min(std::max(db, -kDbClamp), kDbClamp);
}

}  // namespace

Real si_sdr(const WaveBuffer& est, const WaveBuffer& ref) {
  if (est.size() != ref.size()) throw UsageError("si_sdr: length mismatch");
  const Index n = ref.size();
  if (n == 0) throw UsageError("si_sdr: empty signals");
  Real mean_e = 0.0, mean_r = 0.0;
  for (Index i = 0; i < n; ++i) {
    mean_e += est.samples[static_cast<size_t>(i)];
    mean_r += ref.samples[static_cast<size_t>(i)];
  }
  mean_e /= static_cast<Real>(n);
  mean_r /= static_cast<Real>(n);

  Real dot = 0.0, ref_e = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Real e = est.samples[static_cast<size_t>(i)] - mean_e;
    const Real r = ref.samples[static_cast<size_t>(i)] - mean_r;
    dot += e * r;
    ref_e += r * r;
  }
  if (ref_e <= 0.0) throw DataError("si_sdr: reference has zero energy");
  const Real alpha = dot / ref_e;

  Real sig = 0.0, err = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Real e = est.samples[static_cast<size_t>(i)] - mean_e;
    const Real r = ref.samples[static_cast<size_t>(i)] - mean_r;
    const Real s = alpha * r;
    sig += s * s;
    err += (s - e) * (s - e);
  }
  return clamp_db(sig, err);
}

Real sdr_energy(const WaveBuffer& est, const WaveBuffer& ref) {
  if (est.size() != ref.size()) throw UsageError("sdr: length mismatch");
  Real sig = 0.0, err = 0.0;
  for (size_t i = 0; i < ref.samples.size(); ++i) {
    const Real r = ref.samples[i];
    const Real d = r - est.samples[i];
    sig += r * r;
    err += d * d;
  }
  if (sig <= 0.0) throw DataError("sdr: reference has zero energy");
  return clamp_db(sig, err);
}

}  // namespace gagnet
