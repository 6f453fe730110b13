#include <doctest.h>

#include "gagnet/errors.hpp"
#include "gagnet/mix.hpp"
#include "gagnet/objective.hpp"
#include "gagnet/rng.hpp"

#include "test_util.hpp"

#include <cmath>

using namespace gagnet;
using namespace gagnet::testutil;

namespace {

StageVars fake_stage(Tape& tape, const Tensor& sr, const Tensor& si) {
  StageVars sv;
  sv.sr = tape.leaf(sr, true);
  sv.si = tape.leaf(si, true);
  return sv;
}

WaveBuffer wave_of(std::vector<Real> samples) {
  WaveBuffer w;
  w.samples = std::move(samples);
  return w;
}

}  // namespace

TEST_CASE("stage loss is zero at the target and matches the one-cell hand case") {
  std::mt19937_64 rng(1);
  const Tensor tr = random_tensor(rng, {3, 4});
  const Tensor ti = random_tensor(rng, {3, 4});
  {
    Tape tape;
    StageVars sv = fake_stage(tape, tr, ti);
    CHECK(tape.val(stage_loss(sv.sr, sv.si, tr, ti))[0] == 0.0);
  }
  {
    // single cell (a, b), estimate offset by delta on the real plane:
    // L = ((delta)^2 + (|est| - |tgt|)^2) / (2 N), N = 1
    const Real a = 0.6, b = -0.8, delta = 0.35;
    const Tensor tgt_r = Tensor::of({1, 1}, {a});
    const Tensor tgt_i = Tensor::of({1, 1}, {b});
    const Tensor est_r = Tensor::of({1, 1}, {a + delta});
    Tape tape;
    StageVars sv = fake_stage(tape, est_r, tgt_i);
    const Real dmag = std::hypot(a + delta, b) - std::hypot(a, b);
    const Real expect = (delta * delta + dmag * dmag) / 2.0;
    CHECK(tape.val(stage_loss(sv.sr, sv.si, tgt_r, tgt_i))[0] == doctest::Approx(expect).epsilon(1e-12));
  }
  {
    // pure phase rotation with equal magnitudes: magnitude term vanishes
    const Real mag = 1.3, th0 = 0.4, th1 = 1.1;
    const Tensor tgt_r = Tensor::of({1, 1}, {mag * std::cos(th0)});
    const Tensor tgt_i = Tensor::of({1, 1}, {mag * std::sin(th0)});
    const Tensor est_r = Tensor::of({1, 1}, {mag * std::cos(th1)});
    const Tensor est_i = Tensor::of({1, 1}, {mag * std::sin(th1)});
    Tape tape;
    StageVars sv = fake_stage(tape, est_r, est_i);
    const Real loss = tape.val(stage_loss(sv.sr, sv.si, tgt_r, tgt_i))[0];
    const Real ri_part = (std::pow(mag * (std::cos(th1) - std::cos(th0)), 2) +
                          std::pow(mag * (std::sin(th1) - std::sin(th0)), 2)) /
                         2.0;
    CHECK(loss == doctest::Approx(ri_part).epsilon(1e-9));
    CHECK(loss > 0.0);
  }
}

TEST_CASE("stage loss mask restricts the normalization and the cells") {
  std::mt19937_64 rng(2);
  const Tensor tr = random_tensor(rng, {4, 3});
  const Tensor ti = random_tensor(rng, {4, 3});
  Tensor est_r = tr;
  est_r[0] += 1.0;   // masked-in cell
  est_r[11] += 5.0;  // masked-out cell must not contribute
  Tensor mask = Tensor::full({4, 3}, 1.0);
  for (Index f = 0; f < 3; ++f) mask[3 * 3 + f] = 0.0;  // drop the last frame

  Tape tape;
  StageVars sv = fake_stage(tape, est_r, ti);
  const Real loss = tape.val(stage_loss(sv.sr, sv.si, tr, ti, &mask))[0];
  const Real dmag = std::hypot(est_r[0], ti[0]) - std::hypot(tr[0], ti[0]);
  const Real expect = (1.0 + dmag * dmag) / (2.0 * 9.0);
  CHECK(loss == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("total loss applies the stage weights") {
  std::mt19937_64 rng(3);
  const Tensor tr = random_tensor(rng, {2, 3});
  const Tensor ti = random_tensor(rng, {2, 3});

  Tape tape;
  std::vector<StageVars> stages;
  std::vector<Real> expected;
  for (int q = 0; q < 3; ++q) {
    Tensor er = tr, ei = ti;
    er[0] += 0.1 * (q + 1);
    StageVars sv = fake_stage(tape, er, ei);
    stages.push_back(sv);
    expected.push_back(tape.val(stage_loss(sv.sr, sv.si, tr, ti))[0]);
  }
  const Real total = tape.val(total_loss(stages, tr, ti, {0.1, 0.1, 1.0}))[0];
  CHECK(total ==
        doctest::Approx(0.1 * expected[0] + 0.1 * expected[1] + 1.0 * expected[2]).epsilon(1e-12));

  // all stages perfect -> exactly zero
  Tape t2;
  std::vector<StageVars> perfect = {fake_stage(t2, tr, ti), fake_stage(t2, tr, ti),
                                    fake_stage(t2, tr, ti)};
  CHECK(t2.val(total_loss(perfect, tr, ti, {0.1, 0.1, 1.0}))[0] == 0.0);

  // single stage: lambda = 1.0 reproduces the stage loss
  Tape t3;
  Tensor er = tr;
  er[2] += 0.3;
  StageVars sv = fake_stage(t3, er, ti);
  CHECK(t3.val(total_loss({sv}, tr, ti, {1.0}))[0] ==
        doctest::Approx(t3.val(stage_loss(sv.sr, sv.si, tr, ti))[0]).epsilon(1e-12));

  CHECK_THROWS_AS(total_loss(stages, tr, ti, {0.1, 1.0}), UsageError);  // weight count != Q
}

TEST_CASE("loss gradient passes finite differences including the magnitude term") {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(1200 + static_cast<std::uint64_t>(seed));
    const Tensor tr = random_tensor(rng, {3, 4}, 0.3, 1.0);
    const Tensor ti = random_tensor(rng, {3, 4}, 0.3, 1.0);
    Tensor er = random_tensor(rng, {3, 4}, 0.4, 1.2);
    Tensor ei = random_tensor(rng, {3, 4}, 0.4, 1.2);
    CHECK(max_rel_grad_error({er, ei}, [&](Tape& t, std::vector<Var>& v) {
            StageVars sv;
            sv.sr = v[0];
            sv.si = v[1];
            return total_loss({sv}, tr, ti, {1.0});
          }) < 1e-4);
  }
}

TEST_CASE("si_sdr properties") {
  std::mt19937_64 rng(4);
  std::vector<Real> ref(2048), noise(2048);
  for (auto& x : ref) x = normal(rng);
  // orthogonalize a random noise vector against ref, then match energies
  for (auto& x : noise) x = normal(rng);
  Real dot = 0.0, ref_e = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    dot += noise[i] * ref[i];
    ref_e += ref[i] * ref[i];
  }
  for (size_t i = 0; i < ref.size(); ++i) noise[i] -= dot / ref_e * ref[i];
  Real noise_e = 0.0;
  for (Real x : noise) noise_e += x * x;
  for (auto& x : noise) x *= std::sqrt(ref_e / noise_e);

  // remove means so projection identities hold exactly in the metric
  Real mr = 0.0, mn = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    mr += ref[i];
    mn += noise[i];
  }
  for (size_t i = 0; i < ref.size(); ++i) {
    ref[i] -= mr / ref.size();
    noise[i] -= mn / noise.size();
  }
  // re-orthogonalize after mean removal
  dot = 0.0;
  ref_e = 0.0;
  for (size_t i = 0; i < ref.size(); ++i) {
    dot += noise[i] * ref[i];
    ref_e += ref[i] * ref[i];
  }
  for (size_t i = 0; i < ref.size(); ++i) noise[i] -= dot / ref_e * ref[i];
  noise_e = 0.0;
  for (Real x : noise) noise_e += x * x;
  for (auto& x : noise) x *= std::sqrt(ref_e / noise_e);

  const WaveBuffer wr = wave_of(ref);

  // doubled estimate: scale invariance drives the error to zero -> +60 clamp
  std::vector<Real> doubled = ref;
  for (auto& x : doubled) x *= 2.0;
  CHECK(si_sdr(wave_of(doubled), wr) == doctest::Approx(60.0));

  // orthogonal equal-energy noise -> exactly 0 dB
  std::vector<Real> offset = ref;
  for (size_t i = 0; i < offset.size(); ++i) offset[i] += noise[i];
  CHECK(si_sdr(wave_of(offset), wr) == doctest::Approx(0.0).epsilon(1e-9));

  // estimate orthogonal to the reference -> clamped at -60
  CHECK(si_sdr(wave_of(noise), wr) == doctest::Approx(-60.0));

  // invariance to positive scaling, to 1e-9 dB
  const Real a = si_sdr(wave_of(offset), wr);
  std::vector<Real> scaled = offset;
  for (auto& x : scaled) x *= 7.3;
  CHECK(std::abs(si_sdr(wave_of(scaled), wr) - a) < 1e-9);

  WaveBuffer zeros;
  zeros.samples.assign(2048, 0.0);
  CHECK_THROWS_AS(si_sdr(wr, zeros), DataError);
}

TEST_CASE("energy-ratio sdr") {
  std::mt19937_64 rng(5);
  std::vector<Real> ref(1024);
  for (auto& x : ref) x = normal(rng) * 0.2;
  const WaveBuffer wr = wave_of(ref);

  CHECK(sdr_energy(wr, wr) == doctest::Approx(60.0));  // perfect match clamps high

  WaveBuffer zeros;
  zeros.samples.assign(1024, 0.0);
  CHECK(sdr_energy(zeros, wr) == doctest::Approx(0.0).epsilon(1e-12));  // ratio 1 -> 0 dB

  // a k-dB mixture measured against clean gives exactly k
  std::vector<Real> noise(1024);
  for (auto& x : noise) x = normal(rng) * 0.2;
  for (Real k : {-3.0, 0.0, 3.0, 6.0}) {
    const WaveBuffer noisy = mix_at_snr(wr, wave_of(noise), k);
    CHECK(std::abs(sdr_energy(noisy, wr) - k) < 1e-6);
  }
}
