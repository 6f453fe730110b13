#include "gagnet/ops.hpp"

#include "gagnet/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace gagnet {

namespace {

Tape& tape_of(Var v) {
  if (!v.valid()) throw std::logic_error("ops: invalid Var");
  return *v.tape;
}

void same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::logic_error("ops: operands live on different tapes");
}

const Tensor& V(Var v) { return v.tape->val(v); }

void expect_rank(const Tensor& t, int rank, const char* who) {
  if (t.rank() != rank)
    throw std::invalid_argument(std::string(who) + ": expected rank " + std::to_string(rank) + ", got " +
                                t.shape_str());
}

void expect_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(who) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

Real stable_sigmoid(Real x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const Real e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Index conv_out_size(Index in, Index kernel, Index stride) {
  if (in < kernel) throw UsageError("conv: input extent " + std::to_string(in) + " smaller than kernel " +
                                    std::to_string(kernel));
  return (in - kernel) / stride + 1;
}

Var add(Var a, Var b) {
  same_tape(a, b);
  expect_same_shape(V(a), V(b), "add");
  Tensor out(V(a).dims());
  out.flat() = V(a).flat() + V(b).flat();
  const int pa = a.id, pb = b.id;
  return tape_of(a).make(std::move(out), {pa, pb}, [pa, pb](Tape& t, int self) {
    t.accumulate(pa, t.grad(self));
    t.accumulate(pb, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b);
  expect_same_shape(V(a), V(b), "sub");
  Tensor out(V(a).dims());
  out.flat() = V(a).flat() - V(b).flat();
  const int pa = a.id, pb = b.id;
  return tape_of(a).make(std::move(out), {pa, pb}, [pa, pb](Tape& t, int self) {
    t.accumulate(pa, t.grad(self));
    Tensor neg(t.grad(self).dims());
    neg.flat() = -t.grad(self).flat();
    t.accumulate(pb, neg);
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b);
  expect_same_shape(V(a), V(b), "mul");
  Tensor out(V(a).dims());
  out.flat() = V(a).flat() * V(b).flat();
  const int pa = a.id, pb = b.id;
  return tape_of(a).make(std::move(out), {pa, pb}, [pa, pb](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(pa)) {
      Tensor da(g.dims());
      da.flat() = g.flat() * t.val(pb).flat();
      t.accumulate(pa, da);
    }
    if (t.requires_grad(pb)) {
      Tensor db(g.dims());
      db.flat() = g.flat() * t.val(pa).flat();
      t.accumulate(pb, db);
    }
  });
}

Var vdiv(Var a, Var b) {
  same_tape(a, b);
  expect_same_shape(V(a), V(b), "div");
  Tensor out(V(a).dims());
  out.flat() = V(a).flat() / V(b).flat();
  const int pa = a.id, pb = b.id;
  return tape_of(a).make(std::move(out), {pa, pb}, [pa, pb](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(pa)) {
      Tensor da(g.dims());
      da.flat() = g.flat() / t.val(pb).flat();
      t.accumulate(pa, da);
    }
    if (t.requires_grad(pb)) {
      Tensor db(g.dims());
      db.flat() = -g.flat() * t.val(pa).flat() / t.val(pb).flat().square();
      t.accumulate(pb, db);
    }
  });
}

Var scale(Var a, Real c) {
  Tensor out(V(a).dims());
  out.flat() = V(a).flat() * c;
  const int pa = a.id;
  return tape_of(a).make(std::move(out), {pa}, [pa, c](Tape& t, int self) {
    Tensor da(t.grad(self).dims());
    da.flat() = t.grad(self).flat() * c;
    t.accumulate(pa, da);
  });
}

Var sigmoid(Var x) {
  Tensor out(V(x).dims());
  for (Index i = 0; i < out.numel(); ++i) out[i] = stable_sigmoid(V(x)[i]);
  const int px = x.id;
  return tape_of(x).make(std::move(out), {px}, [px](Tape& t, int self) {
    const auto& y = t.val(self).flat();
    Tensor dx(t.grad(self).dims());
    dx.flat() = t.grad(self).flat() * y * (1.0 - y);
    t.accumulate(px, dx);
  });
}

Var clamp_min(Var x, Real floor) {
  Tensor out(V(x).dims());
  out.flat() = V(x).flat().max(floor);
  const int px = x.id;
  return tape_of(x).make(std::move(out), {px}, [px, floor](Tape& t, int self) {
    Tensor dx(t.grad(self).dims());
    const auto& xv = t.val(px).flat();
    dx.flat() = (xv >= floor).select(t.grad(self).flat(), 0.0);
    t.accumulate(px, dx);
  });
}

Var prelu(Var x, Var alpha) {
  same_tape(x, alpha);
  const Tensor& xv = V(x);
  const Tensor& av = V(alpha);
  if (xv.rank() < 1 || av.numel() != xv.dim(0))
    throw std::invalid_argument("prelu: alpha must have one slope per channel");
  const Index c_count = xv.dim(0);
  const Index inner = xv.numel() / c_count;
  Tensor out(xv.dims());
  for (Index c = 0; c < c_count; ++c) {
    const Real a = av[c];
    for (Index i = c * inner; i < (c + 1) * inner; ++i) out[i] = xv[i] > 0.0 ? xv[i] : a * xv[i];
  }
  const int px = x.id, pa = alpha.id;
  return tape_of(x).make(std::move(out), {px, pa}, [px, pa, c_count, inner](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv2 = t.val(px);
    const Tensor& av2 = t.val(pa);
    if (t.requires_grad(px)) {
      Tensor dx(xv2.dims());
      for (Index c = 0; c < c_count; ++c) {
        const Real a = av2[c];
        for (Index i = c * inner; i < (c + 1) * inner; ++i) dx[i] = g[i] * (xv2[i] > 0.0 ? 1.0 : a);
      }
      t.accumulate(px, dx);
    }
    if (t.requires_grad(pa)) {
      Tensor da(av2.dims());
      for (Index c = 0; c < c_count; ++c) {
        Real s = 0.0;
        for (Index i = c * inner; i < (c + 1) * inner; ++i)
          if (xv2[i] <= 0.0) s += g[i] * xv2[i];
        da[c] = s;
      }
      t.accumulate(pa, da);
    }
  });
}

Var magnitude(Var re, Var im) {
  same_tape(re, im);
  expect_same_shape(V(re), V(im), "magnitude");
  Tensor out(V(re).dims());
  for (Index i = 0; i < out.numel(); ++i) out[i] = std::hypot(V(re)[i], V(im)[i]);
  const int pr = re.id, pi = im.id;
  return tape_of(re).make(std::move(out), {pr, pi}, [pr, pi](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& m = t.val(self);
    if (t.requires_grad(pr)) {
      Tensor dr(g.dims());
      for (Index i = 0; i < g.numel(); ++i) dr[i] = m[i] > 0.0 ? g[i] * t.val(pr)[i] / m[i] : 0.0;
      t.accumulate(pr, dr);
    }
    if (t.requires_grad(pi)) {
      Tensor di(g.dims());
      for (Index i = 0; i < g.numel(); ++i) di[i] = m[i] > 0.0 ? g[i] * t.val(pi)[i] / m[i] : 0.0;
      t.accumulate(pi, di);
    }
  });
}

Var concat_rows(const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Tape& tape = tape_of(xs[0]);
  Index rows = 0;
  const Index t_len = V(xs[0]).dim(1);
  for (Var x : xs) {
    same_tape(xs[0], x);
    expect_rank(V(x), 2, "concat_rows");
    if (V(x).dim(1) != t_len) throw std::invalid_argument("concat_rows: frame counts differ");
    rows += V(x).dim(0);
  }
  Tensor out({rows, t_len});
  std::vector<int> parents;
  std::vector<Index> row_of;  // starting row per input
  Index r0 = 0;
  for (Var x : xs) {
    std::copy(V(x).data(), V(x).data() + V(x).numel(), out.data() + r0 * t_len);
    parents.push_back(x.id);
    row_of.push_back(r0);
    r0 += V(x).dim(0);
  }
  return tape.make(std::move(out), parents, [parents, row_of, t_len](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    for (size_t i = 0; i < parents.size(); ++i) {
      const int p = parents[i];
      if (!t.requires_grad(p)) continue;
      const Index nr = t.val(p).dim(0);
      Tensor dp({nr, t_len});
      std::copy(g.data() + row_of[i] * t_len, g.data() + (row_of[i] + nr) * t_len, dp.data());
      t.accumulate(p, dp);
    }
  });
}

Var feature_rows(Var x) {
  expect_rank(V(x), 3, "feature_rows");
  const Index c_count = V(x).dim(0), t_len = V(x).dim(1), f_len = V(x).dim(2);
  Tensor out({c_count * f_len, t_len});
  for (Index c = 0; c < c_count; ++c)
    for (Index t = 0; t < t_len; ++t)
      for (Index f = 0; f < f_len; ++f)
        out[(c * f_len + f) * t_len + t] = V(x)[(c * t_len + t) * f_len + f];
  const int px = x.id;
  return tape_of(x).make(std::move(out), {px}, [px, c_count, t_len, f_len](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    Tensor dx({c_count, t_len, f_len});
    for (Index c = 0; c < c_count; ++c)
      for (Index tt = 0; tt < t_len; ++tt)
        for (Index f = 0; f < f_len; ++f)
          dx[(c * t_len + tt) * f_len + f] = g[(c * f_len + f) * t_len + tt];
    t.accumulate(px, dx);
  });
}

Var sum_all(Var x) {
  Tensor out = Tensor::scalar(V(x).flat().sum());
  const int px = x.id;
  return tape_of(x).make(std::move(out), {px}, [px](Tape& t, int self) {
    Tensor dx(t.val(px).dims());
    dx.flat().setConstant(t.grad(self)[0]);
    t.accumulate(px, dx);
  });
}

Var linear(Var x, Var w, Var b) {
  same_tape(x, w);
  same_tape(x, b);
  expect_rank(V(x), 2, "linear");
  expect_rank(V(w), 2, "linear weight");
  const Index d_in = V(x).dim(0), t_len = V(x).dim(1);
  const Index d_out = V(w).dim(0);
  if (V(w).dim(1) != d_in) throw std::invalid_argument("linear: weight " + V(w).shape_str() +
                                                       " does not match input " + V(x).shape_str());
  if (V(b).numel() != d_out) throw std::invalid_argument("linear: bias size mismatch");

  Tensor out({d_out, t_len});
  {
    auto y = mat_view(out, d_out, t_len);
    y.noalias() = mat_view(V(w), d_out, d_in) * mat_view(V(x), d_in, t_len);
    y.colwise() += Eigen::Map<const Eigen::VectorXd>(V(b).data(), d_out);
  }
  const int px = x.id, pw = w.id, pb = b.id;
  return tape_of(x).make(std::move(out), {px, pw, pb},
                         [px, pw, pb, d_in, d_out, t_len](Tape& t, int self) {
    auto g = mat_view(t.grad(self), d_out, t_len);
    if (t.requires_grad(pw)) {
      Tensor dw({d_out, d_in});
      mat_view(dw, d_out, d_in).noalias() = g * mat_view(t.val(px), d_in, t_len).transpose();
      t.accumulate(pw, dw);
    }
    if (t.requires_grad(px)) {
      Tensor dx({d_in, t_len});
      mat_view(dx, d_in, t_len).noalias() = mat_view(t.val(pw), d_out, d_in).transpose() * g;
      t.accumulate(px, dx);
    }
    if (t.requires_grad(pb)) {
      Tensor db({d_out});
      Eigen::Map<Eigen::VectorXd>(db.data(), d_out) = g.rowwise().sum();
      t.accumulate(pb, db);
    }
  });
}

namespace {

// im2col for the causal dilated 1-d convolution.
MatrixR<Real> conv1d_patches(const Tensor& x, Index k, Index dilation) {
  const Index c_in = x.dim(0), t_len = x.dim(1);
  MatrixR<Real> p = MatrixR<Real>::Zero(c_in * k, t_len);
  for (Index ci = 0; ci < c_in; ++ci)
    for (Index j = 0; j < k; ++j) {
      const Index lag = (k - 1 - j) * dilation;
      for (Index t = lag; t < t_len; ++t) p(ci * k + j, t) = x[ci * t_len + t - lag];
    }
  return p;
}

}  // namespace

Var conv1d(Var x, Var w, Var b, Index dilation) {
  same_tape(x, w);
  same_tape(x, b);
  expect_rank(V(x), 2, "conv1d");
  expect_rank(V(w), 3, "conv1d weight");
  if (dilation <= 0) throw UsageError("conv1d: dilation must be positive");
  const Index c_in = V(x).dim(0), t_len = V(x).dim(1);
  const Index c_out = V(w).dim(0), k = V(w).dim(2);
  if (V(w).dim(1) != c_in) throw std::invalid_argument("conv1d: channel mismatch");
  if (V(b).numel() != c_out) throw std::invalid_argument("conv1d: bias size mismatch");

  MatrixR<Real> patches = conv1d_patches(V(x), k, dilation);
  Tensor out({c_out, t_len});
  {
    auto y = mat_view(out, c_out, t_len);
    y.noalias() = mat_view(V(w), c_out, c_in * k) * patches;
    y.colwise() += Eigen::Map<const Eigen::VectorXd>(V(b).data(), c_out);
  }
  const int px = x.id, pw = w.id, pb = b.id;
  return tape_of(x).make(std::move(out), {px, pw, pb},
                         [px, pw, pb, c_in, c_out, k, t_len, dilation](Tape& t, int self) {
    auto g = mat_view(t.grad(self), c_out, t_len);
    if (t.requires_grad(pw)) {
      MatrixR<Real> patches = conv1d_patches(t.val(px), k, dilation);
      Tensor dw({c_out, c_in, k});
      mat_view(dw, c_out, c_in * k).noalias() = g * patches.transpose();
      t.accumulate(pw, dw);
    }
    if (t.requires_grad(px)) {
      MatrixR<Real> dp = mat_view(t.val(pw), c_out, c_in * k).transpose() * g;
      Tensor dx({c_in, t_len});
      for (Index ci = 0; ci < c_in; ++ci)
        for (Index j = 0; j < k; ++j) {
          const Index lag = (k - 1 - j) * dilation;
          for (Index tt = lag; tt < t_len; ++tt) dx[ci * t_len + tt - lag] += dp(ci * k + j, tt);
        }
      t.accumulate(px, dx);
    }
    if (t.requires_grad(pb)) {
      Tensor db({c_out});
      Eigen::Map<Eigen::VectorXd>(db.data(), c_out) = g.rowwise().sum();
      t.accumulate(pb, db);
    }
  });
}

namespace {

// im2col for the causal-time, valid-frequency 2-d convolution.
MatrixR<Real> conv2d_patches(const Tensor& x, Index kt, Index kf, Index stride_f, Index f_out) {
  const Index c_in = x.dim(0), t_len = x.dim(1), f_len = x.dim(2);
  MatrixR<Real> p = MatrixR<Real>::Zero(c_in * kt * kf, t_len * f_out);
  for (Index ci = 0; ci < c_in; ++ci)
    for (Index dt = 0; dt < kt; ++dt)
      for (Index df = 0; df < kf; ++df) {
        const Index row = (ci * kt + dt) * kf + df;
        for (Index t = 0; t < t_len; ++t) {
          const Index src_t = t + dt - (kt - 1);
          if (src_t < 0) continue;
          const Real* src = x.data() + (ci * t_len + src_t) * f_len;
          for (Index fo = 0; fo < f_out; ++fo) p(row, t * f_out + fo) = src[fo * stride_f + df];
        }
      }
  return p;
}

}  // namespace

Var conv2d(Var x, Var w, Var b, Index stride_f) {
  same_tape(x, w);
  same_tape(x, b);
  expect_rank(V(x), 3, "conv2d");
  expect_rank(V(w), 4, "conv2d weight");
  const Index c_in = V(x).dim(0), t_len = V(x).dim(1), f_len = V(x).dim(2);
  const Index c_out = V(w).dim(0), kt = V(w).dim(2), kf = V(w).dim(3);
  if (V(w).dim(1) != c_in) throw std::invalid_argument("conv2d: channel mismatch");
  if (V(b).numel() != c_out) throw std::invalid_argument("conv2d: bias size mismatch");
  const Index f_out = conv_out_size(f_len, kf, stride_f);  // rejects kf > f_len

  MatrixR<Real> patches = conv2d_patches(V(x), kt, kf, stride_f, f_out);
  Tensor out({c_out, t_len, f_out});
  {
    auto y = mat_view(out, c_out, t_len * f_out);
    y.noalias() = mat_view(V(w), c_out, c_in * kt * kf) * patches;
    y.colwise() += Eigen::Map<const Eigen::VectorXd>(V(b).data(), c_out);
  }
  const int px = x.id, pw = w.id, pb = b.id;
  return tape_of(x).make(std::move(out), {px, pw, pb},
                         [px, pw, pb, c_in, c_out, kt, kf, stride_f, t_len, f_len, f_out](Tape& t, int self) {
    auto g = mat_view(t.grad(self), c_out, t_len * f_out);
    if (t.requires_grad(pw)) {
      MatrixR<Real> patches = conv2d_patches(t.val(px), kt, kf, stride_f, f_out);
      Tensor dw({c_out, c_in, kt, kf});
      mat_view(dw, c_out, c_in * kt * kf).noalias() = g * patches.transpose();
      t.accumulate(pw, dw);
    }
    if (t.requires_grad(px)) {
      MatrixR<Real> dp = mat_view(t.val(pw), c_out, c_in * kt * kf).transpose() * g;
      Tensor dx({c_in, t_len, f_len});
      for (Index ci = 0; ci < c_in; ++ci)
        for (Index dt = 0; dt < kt; ++dt)
          for (Index df = 0; df < kf; ++df) {
            const Index row = (ci * kt + dt) * kf + df;
            for (Index tt = 0; tt < t_len; ++tt) {
              const Index src_t = tt + dt - (kt - 1);
              if (src_t < 0) continue;
              Real* dst = dx.data() + (ci * t_len + src_t) * f_len;
              for (Index fo = 0; fo < f_out; ++fo) dst[fo * stride_f + df] += dp(row, tt * f_out + fo);
            }
          }
      t.accumulate(px, dx);
    }
    if (t.requires_grad(pb)) {
      Tensor db({c_out});
      Eigen::Map<Eigen::VectorXd>(db.data(), c_out) = g.rowwise().sum();
      t.accumulate(pb, db);
    }
  });
}

Var conv_transpose2d(Var x, Var w, Var b, Index stride_f, Index out_f) {
  same_tape(x, w);
  same_tape(x, b);
  expect_rank(V(x), 3, "conv_transpose2d");
  expect_rank(V(w), 3, "conv_transpose2d weight");
  const Index c_in = V(x).dim(0), t_len = V(x).dim(1), f_in = V(x).dim(2);
  const Index c_out = V(w).dim(1), kf = V(w).dim(2);
  if (V(w).dim(0) != c_in) throw std::invalid_argument("conv_transpose2d: channel mismatch");
  if (V(b).numel() != c_out) throw std::invalid_argument("conv_transpose2d: bias size mismatch");
  const Index reach = (f_in - 1) * stride_f + kf;
  if (out_f != reach && out_f != reach + 1)
    throw UsageError("conv_transpose2d: output width " + std::to_string(out_f) +
                     " unreachable from input width " + std::to_string(f_in));

  // Z = Wz (Cout*kf, Cin) * X (Cin, T*Fin), then scatter along frequency.
  MatrixR<Real> wz(c_out * kf, c_in);
  for (Index ci = 0; ci < c_in; ++ci)
    for (Index co = 0; co < c_out; ++co)
      for (Index tap = 0; tap < kf; ++tap) wz(co * kf + tap, ci) = V(w)[(ci * c_out + co) * kf + tap];

  MatrixR<Real> z = wz * mat_view(V(x), c_in, t_len * f_in);
  Tensor out({c_out, t_len, out_f});
  for (Index co = 0; co < c_out; ++co) {
    const Real bias = V(b)[co];
    for (Index i = (co * t_len) * out_f; i < (co + 1) * t_len * out_f; ++i) out[i] = bias;
  }
  for (Index co = 0; co < c_out; ++co)
    for (Index tap = 0; tap < kf; ++tap)
      for (Index tt = 0; tt < t_len; ++tt)
        for (Index i = 0; i < f_in; ++i) {
          const Index fo = i * stride_f + tap;
          out[(co * t_len + tt) * out_f + fo] += z(co * kf + tap, tt * f_in + i);
        }

  const int px = x.id, pw = w.id, pb = b.id;
  return tape_of(x).make(std::move(out), {px, pw, pb},
                         [px, pw, pb, c_in, c_out, kf, stride_f, t_len, f_in, out_f](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    // Gather the gradient of Z back from the scattered output positions.
    MatrixR<Real> dz(c_out * kf, t_len * f_in);
    for (Index co = 0; co < c_out; ++co)
      for (Index tap = 0; tap < kf; ++tap)
        for (Index tt = 0; tt < t_len; ++tt)
          for (Index i = 0; i < f_in; ++i)
            dz(co * kf + tap, tt * f_in + i) = g[(co * t_len + tt) * out_f + i * stride_f + tap];
    if (t.requires_grad(px)) {
      MatrixR<Real> wz(c_out * kf, c_in);
      const Tensor& wv = t.val(pw);
      for (Index ci = 0; ci < c_in; ++ci)
        for (Index co = 0; co < c_out; ++co)
          for (Index tap = 0; tap < kf; ++tap) wz(co * kf + tap, ci) = wv[(ci * c_out + co) * kf + tap];
      Tensor dx({c_in, t_len, f_in});
      mat_view(dx, c_in, t_len * f_in).noalias() = wz.transpose() * dz;
      t.accumulate(px, dx);
    }
    if (t.requires_grad(pw)) {
      MatrixR<Real> dwz = dz * mat_view(t.val(px), c_in, t_len * f_in).transpose();  // (Cout*kf, Cin)
      Tensor dw({c_in, c_out, kf});
      for (Index ci = 0; ci < c_in; ++ci)
        for (Index co = 0; co < c_out; ++co)
          for (Index tap = 0; tap < kf; ++tap) dw[(ci * c_out + co) * kf + tap] = dwz(co * kf + tap, ci);
      t.accumulate(pw, dw);
    }
    if (t.requires_grad(pb)) {
      Tensor db({c_out});
      for (Index co = 0; co < c_out; ++co) {
        Real s = 0.0;
        for (Index i = (co * t_len) * out_f; i < (co + 1) * t_len * out_f; ++i) s += g[i];
        db[co] = s;
      }
      t.accumulate(pb, db);
    }
  });
}

namespace {

void expect_affine(const Tensor& x, const Tensor& gamma, const Tensor& beta, const char* who) {
  if (x.rank() < 2) throw std::invalid_argument(std::string(who) + ": input must be (C, ...)");
  if (gamma.numel() != x.dim(0) || beta.numel() != x.dim(0))
    throw std::invalid_argument(std::string(who) + ": affine parameter size must equal channel count");
}

}  // namespace

Var instance_norm(Var x, Var gamma, Var beta, Real eps) {
  same_tape(x, gamma);
  same_tape(x, beta);
  const Tensor& xv = V(x);
  expect_affine(xv, V(gamma), V(beta), "instance_norm");
  const Index c_count = xv.dim(0);
  const Index inner = xv.numel() / c_count;

  Tensor out(xv.dims());
  std::vector<Real> mu(static_cast<size_t>(c_count)), rstd(static_cast<size_t>(c_count));
  for (Index c = 0; c < c_count; ++c) {
    auto slice = Eigen::Map<const Eigen::ArrayXd>(xv.data() + c * inner, inner);
    const Real m = slice.mean();
    const Real var = (slice - m).square().mean();
    const Real r = 1.0 / std::sqrt(var + eps);
    mu[static_cast<size_t>(c)] = m;
    rstd[static_cast<size_t>(c)] = r;
    Eigen::Map<Eigen::ArrayXd>(out.data() + c * inner, inner) = V(gamma)[c] * (slice - m) * r + V(beta)[c];
  }
  const int px = x.id, pg = gamma.id, pb = beta.id;
  return tape_of(x).make(std::move(out), {px, pg, pb},
                         [px, pg, pb, c_count, inner, mu, rstd](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv2 = t.val(px);
    const Tensor& gam = t.val(pg);
    Tensor dx(xv2.dims());
    Tensor dgam({c_count}), dbet({c_count});
    for (Index c = 0; c < c_count; ++c) {
      auto xs = Eigen::Map<const Eigen::ArrayXd>(xv2.data() + c * inner, inner);
      auto gs = Eigen::Map<const Eigen::ArrayXd>(g.data() + c * inner, inner);
      const Real m = mu[static_cast<size_t>(c)];
      const Real r = rstd[static_cast<size_t>(c)];
      Eigen::ArrayXd xhat = (xs - m) * r;
      const Real sum_g = gs.sum();
      const Real sum_gx = (gs * xhat).sum();
      dbet[c] = sum_g;
      dgam[c] = sum_gx;
      if (t.requires_grad(px)) {
        const Real n = static_cast<Real>(inner);
        Eigen::Map<Eigen::ArrayXd>(dx.data() + c * inner, inner) =
            gam[c] * r * (gs - sum_g / n - xhat * (sum_gx / n));
      }
    }
    if (t.requires_grad(px)) t.accumulate(px, dx);
    if (t.requires_grad(pg)) t.accumulate(pg, dgam);
    if (t.requires_grad(pb)) t.accumulate(pb, dbet);
  });
}

Var cumulative_norm(Var x, Var gamma, Var beta, Real eps) {
  same_tape(x, gamma);
  same_tape(x, beta);
  const Tensor& xv = V(x);
  expect_affine(xv, V(gamma), V(beta), "cumulative_norm");
  if (xv.rank() != 2 && xv.rank() != 3)
    throw std::invalid_argument("cumulative_norm: input must be (C, T) or (C, T, F)");
  const Index c_count = xv.dim(0);
  const Index t_len = xv.dim(1);
  const Index f_len = xv.rank() == 3 ? xv.dim(2) : 1;

  Tensor out(xv.dims());
  Tensor mu({c_count, t_len}), rstd({c_count, t_len});
  for (Index c = 0; c < c_count; ++c) {
    Real run_s = 0.0, run_q = 0.0;
    for (Index tt = 0; tt < t_len; ++tt) {
      const Real* frame = xv.data() + (c * t_len + tt) * f_len;
      Real fs = 0.0, fq = 0.0;
      for (Index f = 0; f < f_len; ++f) {
        fs += frame[f];
        fq += frame[f] * frame[f];
      }
      run_s += fs;
      run_q += fq;
      const Real n = static_cast<Real>(f_len * (tt + 1));
      const Real m = run_s / n;
      const Real var = std::max(run_q / n - m * m, 0.0);
      const Real r = 1.0 / std::sqrt(var + eps);
      mu[c * t_len + tt] = m;
      rstd[c * t_len + tt] = r;
      Real* dst = out.data() + (c * t_len + tt) * f_len;
      for (Index f = 0; f < f_len; ++f) dst[f] = V(gamma)[c] * (frame[f] - m) * r + V(beta)[c];
    }
  }
  const int px = x.id, pg = gamma.id, pb = beta.id;
  return tape_of(x).make(std::move(out), {px, pg, pb},
                         [px, pg, pb, c_count, t_len, f_len, mu, rstd](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv2 = t.val(px);
    const Tensor& gam = t.val(pg);
    Tensor dx(xv2.dims());
    Tensor dgam({c_count}), dbet({c_count});
    std::vector<Real> A(static_cast<size_t>(t_len)), B(static_cast<size_t>(t_len)), C(static_cast<size_t>(t_len));
    for (Index c = 0; c < c_count; ++c) {
      const Real gc = gam[c];
      Real sum_g = 0.0, sum_gx = 0.0;
      for (Index tt = 0; tt < t_len; ++tt) {
        const Real m = mu[c * t_len + tt];
        const Real r = rstd[c * t_len + tt];
        const Real n = static_cast<Real>(f_len * (tt + 1));
        const Real* xf = xv2.data() + (c * t_len + tt) * f_len;
        const Real* gf = g.data() + (c * t_len + tt) * f_len;
        Real gsum = 0.0, dsum = 0.0;
        for (Index f = 0; f < f_len; ++f) {
          gsum += gf[f];
          dsum += gf[f] * (xf[f] - m);
          sum_gx += gf[f] * (xf[f] - m) * r;
        }
        sum_g += gsum;
        A[static_cast<size_t>(tt)] = r * (gc * gsum) / n;
        B[static_cast<size_t>(tt)] = r * r * r * (gc * dsum) / n;
        C[static_cast<size_t>(tt)] = m * B[static_cast<size_t>(tt)];
      }
      dbet[c] = sum_g;
      dgam[c] = sum_gx;
      if (t.requires_grad(px)) {
        Real sa = 0.0, sb = 0.0, sc = 0.0;
        for (Index tt = t_len - 1; tt >= 0; --tt) {
          sa += A[static_cast<size_t>(tt)];
          sb += B[static_cast<size_t>(tt)];
          sc += C[static_cast<size_t>(tt)];
          const Real r = rstd[c * t_len + tt];
          const Real* xf = xv2.data() + (c * t_len + tt) * f_len;
          const Real* gf = g.data() + (c * t_len + tt) * f_len;
          Real* df = dx.data() + (c * t_len + tt) * f_len;
          for (Index f = 0; f < f_len; ++f) df[f] = gc * gf[f] * r - sa - xf[f] * sb + sc;
        }
      }
    }
    if (t.requires_grad(px)) t.accumulate(px, dx);
    if (t.requires_grad(pg)) t.accumulate(pg, dgam);
    if (t.requires_grad(pb)) t.accumulate(pb, dbet);
  });
}

Var glu1d(Var x, Var wm, Var bm, Var wg, Var bg) {
  return mul(linear(x, wm, bm), sigmoid(linear(x, wg, bg)));
}

Var glu2d(Var x, Var wm, Var bm, Var wg, Var bg, Index stride_f) {
  return mul(conv2d(x, wm, bm, stride_f), sigmoid(conv2d(x, wg, bg, stride_f)));
}

}  // namespace gagnet
