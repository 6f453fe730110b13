#include "gagnet/stream.hpp"

#include "gagnet/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <deque>

namespace gagnet {

namespace {

using Mat = MatrixR<Real>;
using Vec = Eigen::VectorXd;
using ArrX = Eigen::ArrayXd;

Eigen::Map<const Mat> wmat(const Tensor& t, Index rows, Index cols) {
  return Eigen::Map<const Mat>(t.data(), rows, cols);
}

Eigen::Map<const Vec> wvec(const Tensor& t) { return Eigen::Map<const Vec>(t.data(), t.numel()); }

// Running per-channel statistics of the cumulative norm; accumulation order
// matches the offline kernel (frame-local sums first).
struct StNorm {
  const Tensor* gamma = nullptr;
  const Tensor* beta = nullptr;
  Real count = 0.0;
  ArrX sum, sumsq;

  void init(const Tensor& g, const Tensor& b) {
    gamma = &g;
    beta = &b;
    sum = ArrX::Zero(g.numel());
    sumsq = ArrX::Zero(g.numel());
  }

  void step(Mat& frame) {  // frame (C, W), normalized in place
    const Index c_count = frame.rows(), w = frame.cols();
    count += static_cast<Real>(w);
    for (Index c = 0; c < c_count; ++c) {
      Real fs = 0.0, fq = 0.0;
      for (Index i = 0; i < w; ++i) {
        const Real x = frame(c, i);
        fs += x;
        fq += x * x;
      }
      sum[c] += fs;
      sumsq[c] += fq;
      const Real m = sum[c] / count;
      const Real var = std::max(sumsq[c] / count - m * m, 0.0);
      const Real r = 1.0 / std::sqrt(var + 1e-8);
      const Real gc = (*gamma)[c], bc = (*beta)[c];
      for (Index i = 0; i < w; ++i) frame(c, i) = gc * (frame(c, i) - m) * r + bc;
    }
  }

  Index scalars() const { return 2 * static_cast<Index>(sum.size()) + 1; }
};

struct StPrelu {
  const Tensor* alpha = nullptr;
  void step(Mat& frame) const {
    for (Index c = 0; c < frame.rows(); ++c) {
      const Real a = (*alpha)[c];
      for (Index i = 0; i < frame.cols(); ++i)
        if (frame(c, i) < 0.0) frame(c, i) *= a;
    }
  }
};

// Causal 2-d convolution step; keeps kt-1 frames of input history.
struct StConv2d {
  const Tensor *w = nullptr, *b = nullptr;
  Index cin = 0, cout = 0, kt = 0, kf = 0, stride = 0, fin = 0, fout = 0;
  std::deque<Mat> hist;  // oldest first, kt-1 entries

  void init(const Tensor& weight, const Tensor& bias, Index stride_f, Index f_in) {
    w = &weight;
    b = &bias;
    cout = weight.dim(0);
    cin = weight.dim(1);
    kt = weight.dim(2);
    kf = weight.dim(3);
    stride = stride_f;
    fin = f_in;
    fout = conv_out_size(f_in, kf, stride_f);
    for (Index i = 0; i < kt - 1; ++i) hist.emplace_back(Mat::Zero(cin, fin));
  }

  Mat compute(const Mat& cur) const {
    Mat patch(cin * kt * kf, fout);
    for (Index ci = 0; ci < cin; ++ci)
      for (Index dt = 0; dt < kt; ++dt) {
        const Mat& src = dt == kt - 1 ? cur : hist[static_cast<size_t>(dt)];
        for (Index df = 0; df < kf; ++df) {
          const Index row = (ci * kt + dt) * kf + df;
          for (Index fo = 0; fo < fout; ++fo) patch(row, fo) = src(ci, fo * stride + df);
        }
      }
    Mat y = wmat(*w, cout, cin * kt * kf) * patch;
    y.colwise() += wvec(*b);
    return y;
  }

  Mat step(const Mat& cur) {
    Mat y = compute(cur);
    if (kt > 1) {
      hist.pop_front();
      hist.push_back(cur);
    }
    return y;
  }

  Index scalars() const { return (kt - 1) * cin * fin; }
};

// Frequency-axis transposed convolution (time kernel 1), stateless per frame.
struct StDeconv {
  Mat wz;  // (cout*kf, cin)
  const Tensor* b = nullptr;
  Index cin = 0, cout = 0, kf = 0, stride = 0, fout = 0;

  void init(const Tensor& weight, const Tensor& bias, Index stride_f, Index out_f) {
    cin = weight.dim(0);
    cout = weight.dim(1);
    kf = weight.dim(2);
    stride = stride_f;
    fout = out_f;
    b = &bias;
    wz.resize(cout * kf, cin);
    for (Index ci = 0; ci < cin; ++ci)
      for (Index co = 0; co < cout; ++co)
        for (Index tap = 0; tap < kf; ++tap) wz(co * kf + tap, ci) = weight[(ci * cout + co) * kf + tap];
  }

  Mat step(const Mat& cur) const {
    Mat z = wz * cur;  // (cout*kf, fin)
    Mat y(cout, fout);
    y.colwise() = wvec(*b);
    for (Index co = 0; co < cout; ++co)
      for (Index tap = 0; tap < kf; ++tap)
        for (Index i = 0; i < cur.cols(); ++i) y(co, i * stride + tap) += z(co * kf + tap, i);
    return y;
  }
};

struct StUnetUnit {  // encoder or decoder unit: conv/deconv + norm + prelu
  StConv2d conv;
  StDeconv deconv;
  bool transposed = false;
  StNorm norm;
  StPrelu act;
};

struct StFemLayer {
  StConv2d glu_main, glu_gate;
  StNorm norm;
  StPrelu act;
  bool has_unet = false;
  std::vector<StUnetUnit> enc, dec;
  std::vector<Index> dec_targets;
};

// Dilated causal conv taps read from a ring of past squeezed frames.
struct StStcm {
  const Tensor *in_w, *in_b, *dw, *db, *out_w, *out_b, *a1, *a2;
  StNorm norm1, norm2;
  Index dilation = 0, d = 0, k = 0;
  Mat ring;  // (d, 2*dilation), slot tau % capacity
  Index frame_no = 0;

  Vec step(const Vec& x) {
    Vec y = wmat(*in_w, d, x.size()) * x + wvec(*in_b);
    for (Index c = 0; c < d; ++c)
      if (y[c] < 0.0) y[c] *= (*a1)[c];
    Mat col = y;
    norm1.step(col);
    y = col;

    const Index cap = ring.cols();
    Vec conv = wvec(*db);
    for (Index j = 0; j < k; ++j) {
      const Index lag = (k - 1 - j) * dilation;
      const Index tau = frame_no - lag;
      if (tau < 0) continue;
      const Vec src_vec = (lag == 0) ? y : Vec(ring.col(tau % cap));
      // w layout (Cout, Cin, k): tap j of all (co, ci)
      for (Index co = 0; co < d; ++co) {
        Real s = 0.0;
        const Real* wrow = dw->data() + (co * d) * k + j;
        for (Index ci = 0; ci < d; ++ci) s += wrow[ci * k] * src_vec[ci];
        conv[co] += s;
      }
    }
    if (cap > 0) ring.col(frame_no % cap) = y;
    ++frame_no;

    for (Index c = 0; c < d; ++c)
      if (conv[c] < 0.0) conv[c] *= (*a2)[c];
    col = conv;
    norm2.step(col);
    conv = col;
    return wmat(*out_w, out_w->dim(0), d) * conv + wvec(*out_b) + x;
  }

  Index scalars() const { return static_cast<Index>(ring.size()); }
};

struct StGlu1d {
  const Tensor *wm, *bm, *wg, *bg;
  Vec step(const Vec& x) const {
    Vec a = wmat(*wm, wm->dim(0), wm->dim(1)) * x + wvec(*bm);
    Vec g = wmat(*wg, wg->dim(0), wg->dim(1)) * x + wvec(*bg);
    for (Index i = 0; i < g.size(); ++i) {
      const Real v = g[i];
      g[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return a.cwiseProduct(g);
  }
};

struct StPath {  // one temporal path: S-TCM chain + linear head
  std::vector<StStcm> tcms;
  const Tensor *head_w, *head_b;

  Vec step(Vec x) {
    for (StStcm& t : tcms) x = t.step(x);
    return wmat(*head_w, head_w->dim(0), head_w->dim(1)) * x + wvec(*head_b);
  }
};

struct StStage {
  bool has_glance = false, has_gaze = false;
  StGlu1d glance_glu, gaze_glu;
  StPath glance, gaze_re, gaze_im;
};

}  // namespace

struct StreamEnhancer::Impl {
  ModelConfig cfg;
  ModelPlan plan;
  const ParamStore* store;
  FrameDft dft;

  std::vector<Real> inbuf;
  std::vector<Real> acc, wsum;
  Index frame_no = 0;
  bool finished = false;

  std::vector<StFemLayer> fem;
  std::vector<StStage> stages;

  Impl(const ModelConfig& c, const ParamStore& s)
      : cfg(c), plan(build_plan(c)), store(&s), dft(c.frame_len, c.n_fft) {
    if (cfg.norm != NormKind::kCumulative)
      throw UsageError("streaming: norm = in depends on whole-utterance statistics; use norm = cin");
    acc.assign(static_cast<size_t>(cfg.frame_len), 0.0);
    wsum.assign(static_cast<size_t>(cfg.frame_len), 0.0);
    build();
  }

  const Tensor& pt(const std::string& name) const { return store->named(name).value; }

  void build_norm(StNorm& n, const std::string& prefix) {
    n.init(pt(prefix + ".gamma"), pt(prefix + ".beta"));
  }

  void build() {
    for (const FemLayerPlan& lp : plan.fem) {
      StFemLayer layer;
      layer.glu_main.init(pt(lp.prefix + ".glu.main.w"), pt(lp.prefix + ".glu.main.b"), cfg.stride_f, lp.f_in);
      layer.glu_gate.init(pt(lp.prefix + ".glu.gate.w"), pt(lp.prefix + ".glu.gate.b"), cfg.stride_f, lp.f_in);
      build_norm(layer.norm, lp.prefix + ".norm");
      layer.act.alpha = &pt(lp.prefix + ".prelu.alpha");
      layer.has_unet = lp.has_unet();
      const size_t m = lp.levels.size();
      for (size_t j = 0; j < m; ++j) {
        StUnetUnit enc;
        enc.conv.init(pt(lp.prefix + ".enc" + std::to_string(j + 1) + ".conv.w"),
                      pt(lp.prefix + ".enc" + std::to_string(j + 1) + ".conv.b"), cfg.stride_f,
                      lp.levels[j].width_in);
        build_norm(enc.norm, lp.prefix + ".enc" + std::to_string(j + 1) + ".norm");
        enc.act.alpha = &pt(lp.prefix + ".enc" + std::to_string(j + 1) + ".prelu.alpha");
        layer.enc.push_back(std::move(enc));
      }
      for (size_t i = 0; i < m; ++i) {
        StUnetUnit dec;
        dec.transposed = true;
        const Index target = lp.levels[m - 1 - i].width_in;
        dec.deconv.init(pt(lp.prefix + ".dec" + std::to_string(i + 1) + ".deconv.w"),
                        pt(lp.prefix + ".dec" + std::to_string(i + 1) + ".deconv.b"), cfg.stride_f, target);
        build_norm(dec.norm, lp.prefix + ".dec" + std::to_string(i + 1) + ".norm");
        dec.act.alpha = &pt(lp.prefix + ".dec" + std::to_string(i + 1) + ".prelu.alpha");
        layer.dec.push_back(std::move(dec));
        layer.dec_targets.push_back(target);
      }
      fem.push_back(std::move(layer));
    }

    for (Index s = 1; s <= cfg.q; ++s) {
      const std::string pfx = "ggm" + std::to_string(s);
      StStage st;
      st.has_glance = cfg.recon != ReconMode::kCom;
      st.has_gaze = cfg.recon != ReconMode::kMag;
      if (st.has_glance) {
        st.glance_glu = {&pt(pfx + ".glance.glu.main.w"), &pt(pfx + ".glance.glu.main.b"),
                         &pt(pfx + ".glance.glu.gate.w"), &pt(pfx + ".glance.glu.gate.b")};
        build_path(st.glance, pfx + ".glance");
      }
      if (st.has_gaze) {
        st.gaze_glu = {&pt(pfx + ".gaze.glu.main.w"), &pt(pfx + ".gaze.glu.main.b"),
                       &pt(pfx + ".gaze.glu.gate.w"), &pt(pfx + ".gaze.glu.gate.b")};
        build_path(st.gaze_re, pfx + ".gaze.re");
        build_path(st.gaze_im, pfx + ".gaze.im");
      }
      stages.push_back(std::move(st));
    }
  }

  void build_path(StPath& path, const std::string& prefix) {
    for (Index g = 0; g < cfg.p; ++g)
      for (Index j = 0; j < cfg.stcm_per_group; ++j) {
        const std::string tp = prefix + ".g" + std::to_string(g + 1) + ".t" + std::to_string(j + 1);
        StStcm t;
        t.in_w = &pt(tp + ".in.w");
        t.in_b = &pt(tp + ".in.b");
        t.a1 = &pt(tp + ".prelu1.alpha");
        build_norm(t.norm1, tp + ".norm1");
        t.dw = &pt(tp + ".dconv.w");
        t.db = &pt(tp + ".dconv.b");
        t.a2 = &pt(tp + ".prelu2.alpha");
        build_norm(t.norm2, tp + ".norm2");
        t.out_w = &pt(tp + ".out.w");
        t.out_b = &pt(tp + ".out.b");
        t.dilation = cfg.dilations[static_cast<size_t>(j)];
        t.d = cfg.squeeze_dim;
        t.k = 3;
        t.ring = Mat::Zero(t.d, (t.k - 1) * t.dilation);
        path.tcms.push_back(std::move(t));
      }
    path.head_w = &pt(prefix + ".head.w");
    path.head_b = &pt(prefix + ".head.b");
  }

  // One network step on a compressed spectral frame; returns the enhanced
  // compressed frame in place.
  void network_frame(Vec& sr, Vec& si) {
    const Index f_bins = cfg.f_bins();
    Mat x(2, f_bins);
    x.row(0) = sr.transpose();
    x.row(1) = si.transpose();

    Mat cur = x;
    for (StFemLayer& layer : fem) {
      Mat a = layer.glu_main.step(cur);
      Mat g = layer.glu_gate.step(cur);
      for (Index i = 0; i < g.rows(); ++i)
        for (Index jj = 0; jj < g.cols(); ++jj) {
          const Real v = g(i, jj);
          g(i, jj) = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        }
      Mat k = a.cwiseProduct(g);
      layer.norm.step(k);
      layer.act.step(k);
      if (layer.has_unet) {
        std::vector<Mat> encoded;
        Mat u = k;
        for (StUnetUnit& e : layer.enc) {
          u = e.conv.step(u);
          e.norm.step(u);
          e.act.step(u);
          encoded.push_back(u);
        }
        const size_t m = layer.dec.size();
        for (size_t i = 0; i < m; ++i) {
          if (i > 0) u += encoded[m - 1 - i];
          StUnetUnit& dunit = layer.dec[i];
          u = dunit.deconv.step(u);
          dunit.norm.step(u);
          dunit.act.step(u);
        }
        cur = u + k;
      } else {
        cur = k;
      }
    }

    // (C, F') frame to feature rows, then the stacked stages.
    const Index c_count = cur.rows(), f_last = cur.cols();
    Vec h0(c_count * f_last);
    for (Index c = 0; c < c_count; ++c)
      for (Index f = 0; f < f_last; ++f) h0[c * f_last + f] = cur(c, f);

    Vec prev_r = sr, prev_i = si;
    for (StStage& st : stages) {
      Vec u(h0.size() + 2 * f_bins);
      u << h0, prev_r, prev_i;
      Vec gain, fr, fi;
      if (st.has_glance) {
        gain = st.glance.step(st.glance_glu.step(u));
        for (Index i = 0; i < gain.size(); ++i) {
          const Real v = gain[i];
          gain[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        }
      }
      if (st.has_gaze) {
        Vec z = st.gaze_glu.step(u);
        fr = st.gaze_re.step(z);
        fi = st.gaze_im.step(z);
      }
      Vec nr(f_bins), ni(f_bins);
      switch (cfg.recon) {
        case ReconMode::kCrm:
          nr = gain.cwiseProduct(prev_r) + fr;
          ni = gain.cwiseProduct(prev_i) + fi;
          break;
        case ReconMode::kMag:
          nr = gain.cwiseProduct(prev_r);
          ni = gain.cwiseProduct(prev_i);
          break;
        case ReconMode::kCom:
          nr = fr;
          ni = fi;
          break;
        case ReconMode::kPhasen:
          for (Index i = 0; i < f_bins; ++i) {
            const Real mag = std::hypot(prev_r[i], prev_i[i]) * gain[i];
            const Real den = std::max(std::hypot(fr[i], fi[i]), 1e-12);
            nr[i] = mag * fr[i] / den;
            ni[i] = mag * fi[i] / den;
          }
          break;
      }
      prev_r = nr;
      prev_i = ni;
    }
    sr = prev_r;
    si = prev_i;
  }

  std::vector<Real> process_frame(const Real* frame) {
    const Index f_bins = cfg.f_bins();
    Vec re(f_bins), im(f_bins);
    dft.forward(frame, re.data(), im.data());

    // power compression, network, decompression
    for (Index i = 0; i < f_bins; ++i) {
      const Real mag = std::hypot(re[i], im[i]);
      const Real s = mag > 0.0 ? std::pow(mag, cfg.beta - 1.0) : 0.0;
      re[i] *= s;
      im[i] *= s;
    }
    network_frame(re, im);
    for (Index i = 0; i < f_bins; ++i) {
      const Real mag = std::hypot(re[i], im[i]);
      const Real s = mag > 0.0 ? std::pow(mag, 1.0 / cfg.beta - 1.0) : 0.0;
      re[i] *= s;
      im[i] *= s;
    }

    std::vector<Real> synth(static_cast<size_t>(cfg.frame_len));
    dft.inverse(re.data(), im.data(), synth.data());
    const Tensor& w = dft.window();
    for (Index n = 0; n < cfg.frame_len; ++n) {
      acc[static_cast<size_t>(n)] += synth[static_cast<size_t>(n)] * w[n];
      wsum[static_cast<size_t>(n)] += w[n] * w[n];
    }
    std::vector<Real> out(static_cast<size_t>(cfg.hop));
    for (Index n = 0; n < cfg.hop; ++n)
      out[static_cast<size_t>(n)] =
          acc[static_cast<size_t>(n)] / std::max(wsum[static_cast<size_t>(n)], 1e-2);
    const Index rest = cfg.frame_len - cfg.hop;
    for (Index n = 0; n < rest; ++n) {
      acc[static_cast<size_t>(n)] = acc[static_cast<size_t>(n + cfg.hop)];
      wsum[static_cast<size_t>(n)] = wsum[static_cast<size_t>(n + cfg.hop)];
    }
    for (Index n = rest; n < cfg.frame_len; ++n) {
      acc[static_cast<size_t>(n)] = 0.0;
      wsum[static_cast<size_t>(n)] = 0.0;
    }
    ++frame_no;
    return out;
  }

  Index state_scalars() const {
    Index total = cfg.frame_len + 2 * cfg.frame_len;  // input buffer + overlap-add acc/wsum
    for (const StFemLayer& layer : fem) {
      total += layer.glu_main.scalars() + layer.glu_gate.scalars();
      total += layer.norm.scalars();
      for (const StUnetUnit& e : layer.enc) total += e.conv.scalars() + e.norm.scalars();
      for (const StUnetUnit& d : layer.dec) total += d.norm.scalars();
    }
    for (const StStage& st : stages) {
      auto path_scalars = [](const StPath& p) {
        Index s = 0;
        for (const StStcm& t : p.tcms) s += t.scalars() + t.norm1.scalars() + t.norm2.scalars();
        return s;
      };
      if (st.has_glance) total += path_scalars(st.glance);
      if (st.has_gaze) total += path_scalars(st.gaze_re) + path_scalars(st.gaze_im);
    }
    return total;
  }
};

StreamEnhancer::StreamEnhancer(const ModelConfig& cfg, const ParamStore& store)
    : impl_(std::make_unique<Impl>(cfg, store)) {}

StreamEnhancer::~StreamEnhancer() = default;
StreamEnhancer::StreamEnhancer(StreamEnhancer&&) noexcept = default;
StreamEnhancer& StreamEnhancer::operator=(StreamEnhancer&&) noexcept = default;

std::vector<Real> StreamEnhancer::push(const std::vector<Real>& samples) {
  Impl& im = *impl_;
  if (im.finished) throw UsageError("streaming: push after finish");
  if (static_cast<Index>(samples.size()) != im.cfg.hop)
    throw UsageError("streaming: expected " + std::to_string(im.cfg.hop) + " samples per push, got " +
                     std::to_string(samples.size()));
  im.inbuf.insert(im.inbuf.end(), samples.begin(), samples.end());
  std::vector<Real> out;
  while (static_cast<Index>(im.inbuf.size()) >= im.cfg.frame_len) {
    std::vector<Real> chunk = im.process_frame(im.inbuf.data());
    out.insert(out.end(), chunk.begin(), chunk.end());
    im.inbuf.erase(im.inbuf.begin(), im.inbuf.begin() + im.cfg.hop);
  }
  return out;
}

std::vector<Real> StreamEnhancer::finish() {
  Impl& im = *impl_;
  if (im.finished) throw UsageError("streaming: finish called twice");
  im.finished = true;
  std::vector<Real> out;
  if (im.frame_no == 0) return out;
  const Index rest = im.cfg.frame_len - im.cfg.hop;
  for (Index n = 0; n < rest; ++n)
    out.push_back(im.acc[static_cast<size_t>(n)] / std::max(im.wsum[static_cast<size_t>(n)], 1e-2));
  return out;
}

Index StreamEnhancer::state_scalars() const { return impl_->state_scalars(); }

}  // namespace gagnet
