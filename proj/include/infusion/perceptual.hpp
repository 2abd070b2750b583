#pragma once

#include <cmath>
#include <stdexcept>

#include "infusion/array.hpp"
#include "infusion/nn.hpp"
#include "infusion/rng.hpp"

namespace infusion {

enum class PerceptualKind { PixelL2, RandomFeature };

inline PerceptualKind perceptual_kind_from_string(const std::string& s) {
  if (s == "pixel-l2") return PerceptualKind::PixelL2;
  if (s == "random-feature") return PerceptualKind::RandomFeature;
  throw std::invalid_argument("unknown perceptual kind: " + s);
}

// Similarity loss between two complex images.
//   pixel-l2:       sum_i |a_i - b_i|^2
//   random-feature: squared difference of the responses of a fixed, seeded
//                   two-layer convolutional stack applied to the magnitude
//                   images, compared at full and half resolution, scaled to
//                   the pixel count.
// Both kinds grow with image area, the same convention as a summed
// data-consistency loss, so a single weight balances the two terms at any
// resolution. Gradients use the (d/d re, d/d im) pair packed as a complex
// value, matching the data-consistency seeds.
template <typename T>
class PerceptualLoss {
 public:
  PerceptualLoss(PerceptualKind kind, std::uint64_t feature_seed)
      : kind_(kind) {
    if (kind_ == PerceptualKind::RandomFeature) {
      Rng rng = Rng(feature_seed).stream("perceptual.features");
      c1_.setup(1, 8, 3, 1, 1, rng);
      c2_.setup(8, 16, 3, 1, 1, rng);
    }
  }

  double eval(const ComplexArray<T>& a, const ComplexArray<T>& b,
              ComplexArray<T>* grad_a = nullptr,
              ComplexArray<T>* grad_b = nullptr) {
    if (!a.same_shape(b) || a.rank() != 2)
      throw std::invalid_argument("perceptual: rank-2 images of equal shape");
    if (kind_ == PerceptualKind::PixelL2) return pixel_l2(a, b, grad_a, grad_b);
    return random_feature(a, b, grad_a, grad_b);
  }

 private:
  struct Features {
    Tensor3<T> z1, a1, z2, a2, pool;
  };

  double pixel_l2(const ComplexArray<T>& a, const ComplexArray<T>& b,
                  ComplexArray<T>* ga, ComplexArray<T>* gb) {
    double loss = 0.0;
    if (ga) *ga = ComplexArray<T>(a.dims());
    if (gb) *gb = ComplexArray<T>(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double dr = double(a[i].real()) - double(b[i].real());
      const double di = double(a[i].imag()) - double(b[i].imag());
      loss += dr * dr + di * di;
      if (ga) (*ga)[i] = std::complex<T>(T(2.0 * dr), T(2.0 * di));
      if (gb) (*gb)[i] = std::complex<T>(T(-2.0 * dr), T(-2.0 * di));
    }
    return loss;
  }

  Tensor3<T> magnitude_tensor(const ComplexArray<T>& a) const {
    Tensor3<T> t(1, int(a.dim(0)), int(a.dim(1)));
    for (std::size_t i = 0; i < a.size(); ++i)
      t.m(0, Eigen::Index(i)) =
          T(std::hypot(double(a[i].real()), double(a[i].imag())));
    return t;
  }

  Features forward_features(const Tensor3<T>& x, bool keep_cache) {
    Features f;
    f.z1 = c1_.forward(x, keep_cache);
    f.a1 = f.z1;
    f.a1.m = silu(f.z1.m);
    f.z2 = c2_.forward(f.a1, keep_cache);
    f.a2 = f.z2;
    f.a2.m = silu(f.z2.m);
    f.pool = avg_pool2(f.a2);
    return f;
  }

  // Backward through the fixed stack for the input whose conv caches are
  // loaded; seeds are the scaled feature residuals.
  Tensor3<T> backward_features(const Features& f, const Tensor3<T>& s1,
                               const Tensor3<T>& s2, const Tensor3<T>& s3) {
    Tensor3<T> da2 = avg_pool2_backward(s3, f.a2.h, f.a2.w);
    da2.m += s2.m;
    Tensor3<T> dz2 = da2;
    dz2.m = silu_backward(da2.m, f.z2.m);
    Tensor3<T> da1 = c2_.backward(dz2, false);
    da1.m += s1.m;
    Tensor3<T> dz1 = da1;
    dz1.m = silu_backward(da1.m, f.z1.m);
    return c1_.backward(dz1, false);
  }

  static void magnitude_grad_to_complex(const Tensor3<T>& dmag,
                                        const ComplexArray<T>& src,
                                        ComplexArray<T>& out) {
    out = ComplexArray<T>(src.dims());
    for (std::size_t i = 0; i < src.size(); ++i) {
      const double re = double(src[i].real()), im = double(src[i].imag());
      const double mag = std::hypot(re, im);
      if (mag == 0.0) {
        out[i] = std::complex<T>(0);
        continue;
      }
      const double g = double(dmag.m(0, Eigen::Index(i)));
      out[i] = std::complex<T>(T(g * re / mag), T(g * im / mag));
    }
  }

  double random_feature(const ComplexArray<T>& a, const ComplexArray<T>& b,
                        ComplexArray<T>* ga, ComplexArray<T>* gb) {
    if (a.dim(0) % 2 != 0 || a.dim(1) % 2 != 0)
      throw std::invalid_argument("perceptual: even image sides required");
    const Tensor3<T> ta = magnitude_tensor(a), tb = magnitude_tensor(b);
    const Features fb = forward_features(tb, false);
    const Features fa = forward_features(ta, ga != nullptr);

    const double area = double(a.size());
    const double n1 = double(fa.a1.m.size()) / area,
                 n2 = double(fa.a2.m.size()) / area,
                 n3 = double(fa.pool.m.size()) / area;
    Tensor3<T> r1 = fa.a1, r2 = fa.a2, r3 = fa.pool;
    r1.m -= fb.a1.m;
    r2.m -= fb.a2.m;
    r3.m -= fb.pool.m;
    const double loss = double(r1.m.squaredNorm()) / n1 +
                        double(r2.m.squaredNorm()) / n2 +
                        double(r3.m.squaredNorm()) / n3;

    Tensor3<T> s1 = r1, s2 = r2, s3 = r3;
    s1.m *= T(2.0 / n1);
    s2.m *= T(2.0 / n2);
    s3.m *= T(2.0 / n3);
    if (ga) {
      Tensor3<T> dmag = backward_features(fa, s1, s2, s3);
      magnitude_grad_to_complex(dmag, a, *ga);
    }
    if (gb) {
      forward_features(tb, true);
      Tensor3<T> neg1 = s1, neg2 = s2, neg3 = s3;
      neg1.m = -s1.m;
      neg2.m = -s2.m;
      neg3.m = -s3.m;
      Tensor3<T> dmag = backward_features(fb, neg1, neg2, neg3);
      magnitude_grad_to_complex(dmag, b, *gb);
    }
    return loss;
  }

  PerceptualKind kind_;
  Conv2d<T> c1_, c2_;
};

}  // namespace infusion
