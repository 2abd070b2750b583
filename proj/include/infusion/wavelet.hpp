#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "infusion/array.hpp"

namespace infusion {

namespace detail {

// Daubechies 4-tap orthonormal pair.
inline const double* db4_lowpass() {
  static const double s3 = std::sqrt(3.0), r = 4.0 * std::sqrt(2.0);
  static const double h[4] = {(1.0 + s3) / r, (3.0 + s3) / r, (3.0 - s3) / r,
                              (1.0 - s3) / r};
  return h;
}

inline const double* db4_highpass() {
  static const double* h = db4_lowpass();
  static const double g[4] = {h[3], -h[2], h[1], -h[0]};
  return g;
}

// One periodic analysis level along a contiguous length-n lane.
inline void dwt_lane(const std::complex<double>* in, std::complex<double>* out,
                     std::size_t n) {
  const double* h = db4_lowpass();
  const double* g = db4_highpass();
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < half; ++i) {
    std::complex<double> a(0.0), d(0.0);
    for (std::size_t k = 0; k < 4; ++k) {
      const std::complex<double> v = in[(2 * i + k) % n];
      a += h[k] * v;
      d += g[k] * v;
    }
    out[i] = a;
    out[half + i] = d;
  }
}

inline void idwt_lane(const std::complex<double>* in, std::complex<double>* out,
                      std::size_t n) {
  const double* h = db4_lowpass();
  const double* g = db4_highpass();
  const std::size_t half = n / 2;
  for (std::size_t j = 0; j < n; ++j) out[j] = std::complex<double>(0.0);
  for (std::size_t i = 0; i < half; ++i) {
    const std::complex<double> a = in[i], d = in[half + i];
    for (std::size_t k = 0; k < 4; ++k)
      out[(2 * i + k) % n] += h[k] * a + g[k] * d;
  }
}

inline void check_wavelet_dims(std::size_t ny, std::size_t nx, int levels) {
  if (levels < 1) throw std::invalid_argument("wavelet: levels must be >= 1");
  const std::size_t div = std::size_t(1) << levels;
  if (ny % div != 0 || nx % div != 0 || ny / div < 2 || nx / div < 2)
    throw std::invalid_argument(
        "wavelet: each side must be divisible by 2^levels with a coarse band "
        "of at least 2");
}

}  // namespace detail

// Separable 2D transform, quadrant layout: after each level the low-low band
// occupies the top-left sub-block and the next level recurses into it.
template <typename T>
ComplexArray<T> dwt2(const ComplexArray<T>& img, int levels = 3) {
  if (img.rank() != 2) throw std::invalid_argument("dwt2: rank-2 input required");
  const std::size_t ny = img.dim(0), nx = img.dim(1);
  detail::check_wavelet_dims(ny, nx, levels);

  std::vector<std::complex<double>> buf(ny * nx), lane(std::max(ny, nx)),
      lane_out(std::max(ny, nx));
  for (std::size_t i = 0; i < ny * nx; ++i)
    buf[i] = std::complex<double>(img[i].real(), img[i].imag());

  std::size_t cy = ny, cx = nx;
  for (int l = 0; l < levels; ++l) {
    for (std::size_t r = 0; r < cy; ++r) {
      detail::dwt_lane(buf.data() + r * nx, lane_out.data(), cx);
      std::copy(lane_out.begin(), lane_out.begin() + cx, buf.begin() + r * nx);
    }
    for (std::size_t c = 0; c < cx; ++c) {
      for (std::size_t r = 0; r < cy; ++r) lane[r] = buf[r * nx + c];
      detail::dwt_lane(lane.data(), lane_out.data(), cy);
      for (std::size_t r = 0; r < cy; ++r) buf[r * nx + c] = lane_out[r];
    }
    cy /= 2;
    cx /= 2;
  }

  ComplexArray<T> out({ny, nx});
  for (std::size_t i = 0; i < ny * nx; ++i)
    out[i] = std::complex<T>(T(buf[i].real()), T(buf[i].imag()));
  return out;
}

template <typename T>
ComplexArray<T> idwt2(const ComplexArray<T>& coeffs, int levels = 3) {
  if (coeffs.rank() != 2)
    throw std::invalid_argument("idwt2: rank-2 input required");
  const std::size_t ny = coeffs.dim(0), nx = coeffs.dim(1);
  detail::check_wavelet_dims(ny, nx, levels);

  std::vector<std::complex<double>> buf(ny * nx), lane(std::max(ny, nx)),
      lane_out(std::max(ny, nx));
  for (std::size_t i = 0; i < ny * nx; ++i)
    buf[i] = std::complex<double>(coeffs[i].real(), coeffs[i].imag());

  for (int l = levels - 1; l >= 0; --l) {
    const std::size_t cy = ny >> l, cx = nx >> l;
    for (std::size_t c = 0; c < cx; ++c) {
      for (std::size_t r = 0; r < cy; ++r) lane[r] = buf[r * nx + c];
      detail::idwt_lane(lane.data(), lane_out.data(), cy);
      for (std::size_t r = 0; r < cy; ++r) buf[r * nx + c] = lane_out[r];
    }
    for (std::size_t r = 0; r < cy; ++r) {
      detail::idwt_lane(buf.data() + r * nx, lane_out.data(), cx);
      std::copy(lane_out.begin(), lane_out.begin() + cx, buf.begin() + r * nx);
    }
  }

  ComplexArray<T> out({ny, nx});
  for (std::size_t i = 0; i < ny * nx; ++i)
    out[i] = std::complex<T>(T(buf[i].real()), T(buf[i].imag()));
  return out;
}

// Complex soft-threshold: shrink the magnitude by t, keep the phase.
template <typename T>
std::complex<T> soft_threshold(std::complex<T> c, T t) {
  const double mag = std::abs(std::complex<double>(c.real(), c.imag()));
  if (mag <= double(t)) return std::complex<T>(0);
  const double scale = (mag - double(t)) / mag;
  return std::complex<T>(T(c.real() * scale), T(c.imag() * scale));
}

template <typename T>
void soft_threshold_inplace(ComplexArray<T>& a, T t) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = soft_threshold(a[i], t);
}

// Sum of coefficient magnitudes, double-accumulated.
template <typename T>
double l1_norm(const ComplexArray<T>& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::abs(std::complex<double>(a[i].real(), a[i].imag()));
  return s;
}

}  // namespace infusion
