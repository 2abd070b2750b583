#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "infusion/array.hpp"

namespace infusion {

// Centered orthonormal 2D DFT pair: DC sits at (ny/2, nx/2) and
// ||fft2c(x)|| == ||x||. Backed by FFTW double-precision plans; inputs of
// any scalar type are widened to double for the transform and narrowed on
// the way out. Plan creation and execution are serialized on a mutex, so
// calls are safe from concurrent threads.

namespace detail {

class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  // in/out are ny*nx row-major; executes the transform unshifted and
  // unscaled. Caller handles centering and normalization.
  void execute(int ny, int nx, int sign, const std::complex<double>* in,
               std::complex<double>* out) {
    std::lock_guard<std::mutex> lock(mutex_);
    Entry& e = entry(ny, nx, sign);
    std::memcpy(e.in, in, sizeof(fftw_complex) * std::size_t(ny) * nx);
    fftw_execute(e.plan);
    std::memcpy(out, e.out, sizeof(fftw_complex) * std::size_t(ny) * nx);
  }

 private:
  struct Entry {
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan plan = nullptr;
  };

  Entry& entry(int ny, int nx, int sign) {
    auto key = std::make_tuple(ny, nx, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    Entry e;
    e.in = fftw_alloc_complex(std::size_t(ny) * nx);
    e.out = fftw_alloc_complex(std::size_t(ny) * nx);
    // FFTW_ESTIMATE keeps plan selection independent of runtime timing.
    e.plan = fftw_plan_dft_2d(ny, nx, e.in, e.out, sign, FFTW_ESTIMATE);
    return plans_.emplace(key, e).first->second;
  }

  FftPlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, Entry> plans_;
};

}  // namespace detail

// Transform one contiguous ny*nx block. in and out may alias.
template <typename T>
void fft2c_block(const std::complex<T>* in, std::complex<T>* out, std::size_t ny,
                 std::size_t nx, bool inverse) {
  const std::size_t n = ny * nx;
  std::vector<std::complex<double>> a(n), b(n);
  // ifftshift: move the centered origin to index 0.
  const std::size_t sy = ny / 2, sx = nx / 2;
  for (std::size_t y = 0; y < ny; ++y) {
    const std::size_t ys = (y + sy) % ny;
    for (std::size_t x = 0; x < nx; ++x)
      a[y * nx + x] = std::complex<double>(in[ys * nx + (x + sx) % nx]);
  }
  detail::FftPlanCache::instance().execute(int(ny), int(nx),
                                           inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                           a.data(), b.data());
  // fftshift back and apply the orthonormal 1/sqrt(N) scale.
  const double scale = 1.0 / std::sqrt(double(n));
  const std::size_t cy = (ny + 1) / 2, cx = (nx + 1) / 2;
  for (std::size_t y = 0; y < ny; ++y) {
    const std::size_t ys = (y + cy) % ny;
    for (std::size_t x = 0; x < nx; ++x) {
      const std::complex<double> v = b[ys * nx + (x + cx) % nx] * scale;
      out[y * nx + x] = std::complex<T>(T(v.real()), T(v.imag()));
    }
  }
}

template <typename T>
ComplexArray<T> fft2c(const ComplexArray<T>& x) {
  if (x.rank() != 2) throw std::invalid_argument("fft2c: expected a 2D array");
  ComplexArray<T> out(x.dims());
  fft2c_block(x.data(), out.data(), x.dim(0), x.dim(1), false);
  return out;
}

template <typename T>
ComplexArray<T> ifft2c(const ComplexArray<T>& x) {
  if (x.rank() != 2) throw std::invalid_argument("ifft2c: expected a 2D array");
  ComplexArray<T> out(x.dims());
  fft2c_block(x.data(), out.data(), x.dim(0), x.dim(1), true);
  return out;
}

}  // namespace infusion
