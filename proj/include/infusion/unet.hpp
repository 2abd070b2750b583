#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "infusion/array.hpp"
#include "infusion/edm.hpp"
#include "infusion/nn.hpp"

namespace infusion {

struct UnetOptions {
  int in_channels = 2;
  int w0 = 32, w1 = 64, w2 = 96;
  int emb_dim = 64;
  double emb_scale = 4.0;
};

namespace detail {

// Pre-activation residual block without normalization. The noise embedding
// enters as a per-channel bias after the first convolution.
template <typename T>
struct ResBlock {
  int cin = 0, cout = 0;
  Conv2d<T> conv1, conv2, conv_skip;
  Dense<T> emb_proj;
  bool has_skip_conv = false;
  Tensor3<T> cache_x, cache_hpre;

  void setup(int cin_, int cout_, int emb_dim, Rng& rng) {
    cin = cin_;
    cout = cout_;
    conv1.setup(cin, cout, 3, 1, 1, rng);
    conv2.setup(cout, cout, 3, 1, 1, rng);
    emb_proj.setup(emb_dim, cout, rng);
    has_skip_conv = (cin != cout);
    if (has_skip_conv) conv_skip.setup(cin, cout, 1, 1, 0, rng);
  }

  Tensor3<T> forward(const Tensor3<T>& x, const Mat<T>& emb, bool keep_cache) {
    Tensor3<T> a1 = x;
    a1.m = silu(x.m);
    Tensor3<T> h = conv1.forward(a1, keep_cache);
    Mat<T> bias = emb_proj.forward(emb, keep_cache);
    h.m.colwise() += Vec<T>(bias.col(0));
    if (keep_cache) {
      cache_x = x;
      cache_hpre = h;
    }
    Tensor3<T> a2 = h;
    a2.m = silu(h.m);
    Tensor3<T> out = conv2.forward(a2, keep_cache);
    if (has_skip_conv) {
      Tensor3<T> s = conv_skip.forward(x, keep_cache);
      out.m += s.m;
    } else {
      out.m += x.m;
    }
    return out;
  }

  Tensor3<T> backward(const Tensor3<T>& dout, bool accumulate) {
    Tensor3<T> da2 = conv2.backward(dout, accumulate);
    Tensor3<T> dh = da2;
    dh.m = silu_backward(da2.m, cache_hpre.m);
    if (accumulate) {
      Mat<T> demb(cout, 1);
      demb.col(0) = dh.m.rowwise().sum();
      emb_proj.backward(demb, true);
    }
    Tensor3<T> da1 = conv1.backward(dh, accumulate);
    Tensor3<T> dx = da1;
    dx.m = silu_backward(da1.m, cache_x.m);
    if (has_skip_conv) {
      Tensor3<T> ds = conv_skip.backward(dout, accumulate);
      dx.m += ds.m;
    } else {
      dx.m += dout.m;
    }
    return dx;
  }

  void visit(const std::string& p, const ParamVisitor<T>& v) {
    conv1.visit(p + ".conv1", v);
    conv2.visit(p + ".conv2", v);
    emb_proj.visit(p + ".emb", v);
    if (has_skip_conv) conv_skip.visit(p + ".skip", v);
  }
};

}  // namespace detail

// Three-stage encoder/decoder operating on 2-channel (re, im) images.
// Downsampling by strided convolution, upsampling by nearest-neighbor plus
// convolution, skip connections by channel concat.
template <typename T>
struct Unet {
  UnetOptions opt;
  Mat<T> emb_freq;  // (emb_dim/2, 1), fixed at setup
  Conv2d<T> conv_in, down0, down1, up1_conv, up0_conv, conv_out;
  detail::ResBlock<T> enc0, enc1, mid, dec1, dec0;
  Tensor3<T> cache_skip0, cache_skip1;  // for concat backward splits

  void setup(const UnetOptions& o, Rng& rng) {
    opt = o;
    if (o.emb_dim % 2 != 0)
      throw std::invalid_argument("unet: emb_dim must be even");
    Rng emb_rng = rng.stream("unet.embedding");
    emb_freq = Mat<T>(o.emb_dim / 2, 1);
    for (Eigen::Index i = 0; i < emb_freq.rows(); ++i)
      emb_freq(i, 0) = T(o.emb_scale * emb_rng.normal());

    Rng w_rng = rng.stream("unet.weights");
    conv_in.setup(o.in_channels, o.w0, 3, 1, 1, w_rng);
    enc0.setup(o.w0, o.w0, o.emb_dim, w_rng);
    down0.setup(o.w0, o.w1, 3, 2, 1, w_rng);
    enc1.setup(o.w1, o.w1, o.emb_dim, w_rng);
    down1.setup(o.w1, o.w2, 3, 2, 1, w_rng);
    mid.setup(o.w2, o.w2, o.emb_dim, w_rng);
    up1_conv.setup(o.w2, o.w1, 3, 1, 1, w_rng);
    dec1.setup(2 * o.w1, o.w1, o.emb_dim, w_rng);
    up0_conv.setup(o.w1, o.w0, 3, 1, 1, w_rng);
    dec0.setup(2 * o.w0, o.w0, o.emb_dim, w_rng);
    conv_out.setup(o.w0, o.in_channels, 3, 1, 1, w_rng);
  }

  Mat<T> embed(double c_noise) const {
    Mat<T> e(opt.emb_dim, 1);
    const Eigen::Index half = emb_freq.rows();
    for (Eigen::Index i = 0; i < half; ++i) {
      const double a = 2.0 * M_PI * double(emb_freq(i, 0)) * c_noise;
      e(i, 0) = T(std::cos(a));
      e(half + i, 0) = T(std::sin(a));
    }
    return e;
  }

  Tensor3<T> forward(const Tensor3<T>& x, double c_noise, bool keep_cache = true) {
    if (x.c != opt.in_channels)
      throw std::invalid_argument("unet: channel count mismatch");
    if (x.h % 4 != 0 || x.w % 4 != 0 || x.h < 8 || x.w < 8)
      throw std::invalid_argument("unet: spatial dims must be multiples of 4, >= 8");
    const Mat<T> e = embed(c_noise);

    Tensor3<T> h0 = conv_in.forward(x, keep_cache);
    Tensor3<T> s0 = enc0.forward(h0, e, keep_cache);
    Tensor3<T> h1 = down0.forward(s0, keep_cache);
    Tensor3<T> s1 = enc1.forward(h1, e, keep_cache);
    Tensor3<T> h2 = down1.forward(s1, keep_cache);
    Tensor3<T> b = mid.forward(h2, e, keep_cache);

    Tensor3<T> u1 = up1_conv.forward(upsample2_nearest(b), keep_cache);
    Tensor3<T> c1 = concat_channels(u1, s1);
    Tensor3<T> d1 = dec1.forward(c1, e, keep_cache);

    Tensor3<T> u0 = up0_conv.forward(upsample2_nearest(d1), keep_cache);
    Tensor3<T> c0 = concat_channels(u0, s0);
    Tensor3<T> d0 = dec0.forward(c0, e, keep_cache);

    if (keep_cache) {
      cache_skip0 = s0;
      cache_skip1 = s1;
    }
    return conv_out.forward(d0, keep_cache);
  }

  // Input gradient; parameter gradients accumulate when `accumulate` is set.
  // Requires a forward pass with keep_cache immediately before.
  Tensor3<T> backward(const Tensor3<T>& dy, bool accumulate = true) {
    Tensor3<T> dd0 = conv_out.backward(dy, accumulate);
    Tensor3<T> dc0 = dec0.backward(dd0, accumulate);
    Tensor3<T> du0(opt.w0, dc0.h, dc0.w), ds0(opt.w0, dc0.h, dc0.w);
    du0.m = dc0.m.topRows(opt.w0);
    ds0.m = dc0.m.bottomRows(opt.w0);
    Tensor3<T> dd1 = upsample2_nearest_backward(up0_conv.backward(du0, accumulate));

    Tensor3<T> dc1 = dec1.backward(dd1, accumulate);
    Tensor3<T> du1(opt.w1, dc1.h, dc1.w), ds1(opt.w1, dc1.h, dc1.w);
    du1.m = dc1.m.topRows(opt.w1);
    ds1.m = dc1.m.bottomRows(opt.w1);
    Tensor3<T> db = upsample2_nearest_backward(up1_conv.backward(du1, accumulate));

    Tensor3<T> dh2 = mid.backward(db, accumulate);
    Tensor3<T> ds1_total = down1.backward(dh2, accumulate);
    ds1_total.m += ds1.m;
    Tensor3<T> dh1 = enc1.backward(ds1_total, accumulate);
    Tensor3<T> ds0_total = down0.backward(dh1, accumulate);
    ds0_total.m += ds0.m;
    Tensor3<T> dh0 = enc0.backward(ds0_total, accumulate);
    return conv_in.backward(dh0, accumulate);
  }

  void visit_params(const ParamVisitor<T>& v) {
    conv_in.visit("unet.conv_in", v);
    enc0.visit("unet.enc0", v);
    down0.visit("unet.down0", v);
    enc1.visit("unet.enc1", v);
    down1.visit("unet.down1", v);
    mid.visit("unet.mid", v);
    up1_conv.visit("unet.up1", v);
    dec1.visit("unet.dec1", v);
    up0_conv.visit("unet.up0", v);
    dec0.visit("unet.dec0", v);
    conv_out.visit("unet.conv_out", v);
  }

  std::size_t param_count() {
    std::size_t n = 0;
    visit_params([&](const std::string&, Param<T>& p) { n += p.count(); });
    return n;
  }
};

// Complex image <-> 2-channel tensor (channel 0 real, channel 1 imaginary).
template <typename T>
Tensor3<T> image_to_tensor(const ComplexArray<T>& img) {
  if (img.rank() != 2)
    throw std::invalid_argument("image_to_tensor: rank-2 input required");
  Tensor3<T> t(2, int(img.dim(0)), int(img.dim(1)));
  for (std::size_t i = 0; i < img.size(); ++i) {
    t.m(0, Eigen::Index(i)) = img[i].real();
    t.m(1, Eigen::Index(i)) = img[i].imag();
  }
  return t;
}

template <typename T>
ComplexArray<T> tensor_to_image(const Tensor3<T>& t) {
  if (t.c != 2) throw std::invalid_argument("tensor_to_image: need 2 channels");
  ComplexArray<T> img({std::size_t(t.h), std::size_t(t.w)});
  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = std::complex<T>(t.m(0, Eigen::Index(i)), t.m(1, Eigen::Index(i)));
  return img;
}

// Preconditioned denoiser D(x; sigma) = c_skip x + c_out F(c_in x; c_noise).
template <typename T>
struct Denoiser {
  Unet<T> net;
  double sigma_data = 0.5;
  double cache_sigma = 0.0;

  Tensor3<T> denoise(const Tensor3<T>& x, double sigma, bool keep_cache = true) {
    const EdmWeights w = edm_weights(sigma, sigma_data);
    Tensor3<T> xin = x;
    xin.m *= T(w.c_in);
    Tensor3<T> f = net.forward(xin, w.c_noise, keep_cache);
    Tensor3<T> out = f;
    out.m = T(w.c_skip) * x.m + T(w.c_out) * f.m;
    if (keep_cache) cache_sigma = sigma;
    return out;
  }

  // dL/dx given dL/dD; matches the sigma of the cached forward pass.
  Tensor3<T> denoise_backward(const Tensor3<T>& ddenoised, bool accumulate) {
    const EdmWeights w = edm_weights(cache_sigma, sigma_data);
    Tensor3<T> df = ddenoised;
    df.m *= T(w.c_out);
    Tensor3<T> dxin = net.backward(df, accumulate);
    Tensor3<T> dx = dxin;
    dx.m = T(w.c_skip) * ddenoised.m + T(w.c_in) * dxin.m;
    return dx;
  }
};

}  // namespace infusion
