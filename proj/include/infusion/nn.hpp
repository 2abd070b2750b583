#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "infusion/rng.hpp"

namespace infusion {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Trainable tensor plus its gradient and Adam moments.
template <typename T>
struct Param {
  Mat<T> value, grad, m1, m2;

  void setup(Eigen::Index rows, Eigen::Index cols) {
    value = Mat<T>::Zero(rows, cols);
    grad = Mat<T>::Zero(rows, cols);
    m1 = Mat<T>::Zero(rows, cols);
    m2 = Mat<T>::Zero(rows, cols);
  }
  void he_init(Rng& rng, double fan_in) {
    const double std = std::sqrt(2.0 / fan_in);
    for (Eigen::Index r = 0; r < value.rows(); ++r)
      for (Eigen::Index c = 0; c < value.cols(); ++c)
        value(r, c) = T(std * rng.normal());
  }
  std::size_t count() const { return std::size_t(value.size()); }
};

// Models expose their parameters through a visitor so the optimizer and the
// checkpoint reader share one traversal order.
template <typename T>
using ParamVisitor = std::function<void(const std::string&, Param<T>&)>;

template <typename T>
struct AdamOptimizer {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;

  void step(const std::vector<Param<T>*>& params) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, double(t));
    const double c2 = 1.0 - std::pow(beta2, double(t));
    for (Param<T>* p : params) {
      auto& g = p->grad;
      p->m1 = T(beta1) * p->m1 + T(1.0 - beta1) * g;
      p->m2 = T(beta2) * p->m2 + T(1.0 - beta2) * g.array().square().matrix();
      p->value.array() -= T(lr) * (p->m1.array() / T(c1)) /
                          ((p->m2.array() / T(c2)).sqrt() + T(eps));
      g.setZero();
    }
  }
};

template <typename T>
std::vector<Param<T>*> collect_params(
    const std::function<void(const ParamVisitor<T>&)>& visit) {
  std::vector<Param<T>*> out;
  visit([&](const std::string&, Param<T>& p) { out.push_back(&p); });
  return out;
}

// Fully connected layer; activations hold one sample per column.
template <typename T>
struct Dense {
  Param<T> W, b;
  Mat<T> cache_x;

  void setup(Eigen::Index in, Eigen::Index out, Rng& rng) {
    W.setup(out, in);
    b.setup(out, 1);
    W.he_init(rng, double(in));
  }
  Mat<T> forward(const Mat<T>& x, bool keep_cache = true) {
    if (keep_cache) cache_x = x;
    Mat<T> z = W.value * x;
    z.colwise() += Vec<T>(b.value.col(0));
    return z;
  }
  // returns dL/dx; accumulates dL/dW, dL/db
  Mat<T> backward(const Mat<T>& dz, bool accumulate_grads = true) {
    if (accumulate_grads) {
      W.grad.noalias() += dz * cache_x.transpose();
      b.grad.col(0) += dz.rowwise().sum();
    }
    return W.value.transpose() * dz;
  }
  void visit(const std::string& prefix, const ParamVisitor<T>& v) {
    v(prefix + ".W", W);
    v(prefix + ".b", b);
  }
};

template <typename T>
void relu_inplace(Mat<T>& z) {
  z = z.array().max(T(0)).matrix();
}

// dL/dz given dL/drelu(z) and the pre-activation z
template <typename T>
Mat<T> relu_backward(const Mat<T>& dz, const Mat<T>& z) {
  return (z.array() > T(0)).select(dz, Mat<T>::Zero(dz.rows(), dz.cols()));
}

template <typename T>
Mat<T> silu(const Mat<T>& z) {
  return (z.array() / (T(1) + (-z.array()).exp())).matrix();
}

template <typename T>
Mat<T> silu_backward(const Mat<T>& dz, const Mat<T>& z) {
  auto s = (T(1) / (T(1) + (-z.array()).exp())).eval();
  return (dz.array() * (s + z.array() * s * (T(1) - s))).matrix();
}

// Channel-major feature map: row c of `m` holds channel c scanned row-major
// over h*w pixels.
template <typename T>
struct Tensor3 {
  int c = 0, h = 0, w = 0;
  Mat<T> m;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_) : c(c_), h(h_), w(w_) {
    m = Mat<T>::Zero(c_, Eigen::Index(h_) * w_);
  }
  bool same_shape(const Tensor3& o) const {
    return c == o.c && h == o.h && w == o.w;
  }
};

namespace detail {

// Unrolled receptive fields: one column per output pixel, rows ordered
// (ci, ky, kx). Out-of-bounds taps contribute zeros.
template <typename T>
void im2col(const Tensor3<T>& x, int k, int stride, int pad, Mat<T>& cols,
            int ho, int wo) {
  cols.setZero(Eigen::Index(x.c) * k * k, Eigen::Index(ho) * wo);
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      const Eigen::Index col = Eigen::Index(oy) * wo + ox;
      for (int ci = 0; ci < x.c; ++ci) {
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= x.h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= x.w) continue;
            cols((Eigen::Index(ci) * k + ky) * k + kx, col) =
                x.m(ci, Eigen::Index(iy) * x.w + ix);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const Mat<T>& cols, int k, int stride, int pad, Tensor3<T>& dx,
            int ho, int wo) {
  dx.m.setZero();
  for (int oy = 0; oy < ho; ++oy) {
    for (int ox = 0; ox < wo; ++ox) {
      const Eigen::Index col = Eigen::Index(oy) * wo + ox;
      for (int ci = 0; ci < dx.c; ++ci) {
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= dx.h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= dx.w) continue;
            dx.m(ci, Eigen::Index(iy) * dx.w + ix) +=
                cols((Eigen::Index(ci) * k + ky) * k + kx, col);
          }
        }
      }
    }
  }
}

}  // namespace detail

// 2D convolution as im2col followed by one GEMM.
template <typename T>
struct Conv2d {
  int cin = 0, cout = 0, k = 3, stride = 1, pad = 1;
  Param<T> W;  // (cout, cin*k*k)
  Param<T> b;  // (cout, 1)
  Mat<T> cache_cols;
  int cache_h = 0, cache_w = 0;

  void setup(int cin_, int cout_, int k_, int stride_, int pad_, Rng& rng) {
    cin = cin_;
    cout = cout_;
    k = k_;
    stride = stride_;
    pad = pad_;
    W.setup(cout, Eigen::Index(cin) * k * k);
    b.setup(cout, 1);
    W.he_init(rng, double(cin) * k * k);
  }

  int out_h(int h) const { return (h + 2 * pad - k) / stride + 1; }
  int out_w(int w) const { return (w + 2 * pad - k) / stride + 1; }

  Tensor3<T> forward(const Tensor3<T>& x, bool keep_cache = true) {
    if (x.c != cin) throw std::invalid_argument("conv2d: channel mismatch");
    const int ho = out_h(x.h), wo = out_w(x.w);
    Mat<T> cols;
    detail::im2col(x, k, stride, pad, cols, ho, wo);
    Tensor3<T> y(cout, ho, wo);
    y.m.noalias() = W.value * cols;
    y.m.colwise() += Vec<T>(b.value.col(0));
    if (keep_cache) {
      cache_cols = std::move(cols);
      cache_h = x.h;
      cache_w = x.w;
    }
    return y;
  }

  Tensor3<T> backward(const Tensor3<T>& dy, bool accumulate_grads = true) {
    if (accumulate_grads) {
      W.grad.noalias() += dy.m * cache_cols.transpose();
      b.grad.col(0) += dy.m.rowwise().sum();
    }
    Mat<T> dcols = W.value.transpose() * dy.m;
    Tensor3<T> dx(cin, cache_h, cache_w);
    detail::col2im(dcols, k, stride, pad, dx, dy.h, dy.w);
    return dx;
  }

  void visit(const std::string& prefix, const ParamVisitor<T>& v) {
    v(prefix + ".W", W);
    v(prefix + ".b", b);
  }
};

template <typename T>
Tensor3<T> upsample2_nearest(const Tensor3<T>& x) {
  Tensor3<T> y(x.c, x.h * 2, x.w * 2);
  for (int c = 0; c < x.c; ++c)
    for (int iy = 0; iy < x.h; ++iy)
      for (int ix = 0; ix < x.w; ++ix) {
        const T v = x.m(c, Eigen::Index(iy) * x.w + ix);
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx)
            y.m(c, Eigen::Index(2 * iy + dy) * y.w + (2 * ix + dx)) = v;
      }
  return y;
}

template <typename T>
Tensor3<T> upsample2_nearest_backward(const Tensor3<T>& dy) {
  Tensor3<T> dx(dy.c, dy.h / 2, dy.w / 2);
  for (int c = 0; c < dy.c; ++c)
    for (int iy = 0; iy < dx.h; ++iy)
      for (int ix = 0; ix < dx.w; ++ix) {
        T s = T(0);
        for (int dyy = 0; dyy < 2; ++dyy)
          for (int dxx = 0; dxx < 2; ++dxx)
            s += dy.m(c, Eigen::Index(2 * iy + dyy) * dy.w + (2 * ix + dxx));
        dx.m(c, Eigen::Index(iy) * dx.w + ix) = s;
      }
  return dx;
}

template <typename T>
Tensor3<T> avg_pool2(const Tensor3<T>& x) {
  Tensor3<T> y(x.c, x.h / 2, x.w / 2);
  for (int c = 0; c < x.c; ++c)
    for (int iy = 0; iy < y.h; ++iy)
      for (int ix = 0; ix < y.w; ++ix) {
        T s = T(0);
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx)
            s += x.m(c, Eigen::Index(2 * iy + dy) * x.w + (2 * ix + dx));
        y.m(c, Eigen::Index(iy) * y.w + ix) = s * T(0.25);
      }
  return y;
}

template <typename T>
Tensor3<T> avg_pool2_backward(const Tensor3<T>& dy, int h, int w) {
  Tensor3<T> dx(dy.c, h, w);
  for (int c = 0; c < dy.c; ++c)
    for (int iy = 0; iy < dy.h; ++iy)
      for (int ix = 0; ix < dy.w; ++ix) {
        const T v = dy.m(c, Eigen::Index(iy) * dy.w + ix) * T(0.25);
        for (int dyy = 0; dyy < 2; ++dyy)
          for (int dxx = 0; dxx < 2; ++dxx)
            dx.m(c, Eigen::Index(2 * iy + dyy) * w + (2 * ix + dxx)) = v;
      }
  return dx;
}

template <typename T>
Tensor3<T> concat_channels(const Tensor3<T>& a, const Tensor3<T>& b) {
  if (a.h != b.h || a.w != b.w)
    throw std::invalid_argument("concat: spatial shapes differ");
  Tensor3<T> y(a.c + b.c, a.h, a.w);
  y.m.topRows(a.c) = a.m;
  y.m.bottomRows(b.c) = b.m;
  return y;
}

}  // namespace infusion
