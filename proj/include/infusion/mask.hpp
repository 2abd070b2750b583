#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "infusion/array.hpp"
#include "infusion/rng.hpp"

namespace infusion {

// Which k-space locations are acquired. For 2D data the grid is (ky, kx)
// and matches the image shape; for 3D data it is (ky, kz): the readout kx
// is always fully sampled and the mask is broadcast along it.
struct SamplingMask {
  std::size_t rows = 0;  // ky
  std::size_t cols = 0;  // kx (2D) or kz (3D)
  std::vector<std::uint8_t> kept;
  double acceleration_target = 1.0;

  bool at(std::size_t r, std::size_t c) const { return kept[r * cols + c] != 0; }
  std::size_t kept_count() const {
    std::size_t n = 0;
    for (auto k : kept) n += (k != 0);
    return n;
  }
  double realized_acceleration() const {
    std::size_t m = kept_count();
    if (m == 0) throw std::invalid_argument("mask: no locations kept");
    return double(rows * cols) / double(m);
  }
};

template <typename T = float>
ComplexArray<T> mask_to_array(const SamplingMask& m) {
  ComplexArray<T> a({m.rows, m.cols});
  for (std::size_t i = 0; i < a.size(); ++i)
    a[i] = std::complex<T>(m.kept[i] ? T(1) : T(0), T(0));
  return a;
}

template <typename T>
SamplingMask mask_from_array(const ComplexArray<T>& a, double accel_target) {
  if (a.rank() != 2) throw std::invalid_argument("mask_from_array: expected 2D");
  SamplingMask m;
  m.rows = a.dim(0);
  m.cols = a.dim(1);
  m.acceleration_target = accel_target;
  m.kept.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) m.kept[i] = std::abs(a[i]) > T(0.5);
  return m;
}

namespace detail {

struct Dart {
  double y, x, radius;
};

// One dart-throwing pass at base radius r0. The candidate sequence is a
// fixed function of the rng seed, so the pass is deterministic and the
// realized sample count is monotone-ish in r0 for bisection.
inline std::vector<Dart> throw_darts(std::size_t ny, std::size_t nx, double r0,
                                     std::size_t calib, std::uint64_t seed) {
  const double cy = double(ny - 1) / 2.0, cx = double(nx - 1) / 2.0;
  const double half_diag = std::sqrt(cy * cy + cx * cx);
  const std::size_t y0 = (ny - std::min(calib, ny)) / 2;
  const std::size_t x0 = (nx - std::min(calib, nx)) / 2;
  auto in_calib = [&](std::size_t iy, std::size_t ix) {
    return calib > 0 && iy >= y0 && iy < y0 + calib && ix >= x0 && ix < x0 + calib;
  };
  auto local_radius = [&](double y, double x) {
    const double rho = std::sqrt((y - cy) * (y - cy) + (x - cx) * (x - cx)) / half_diag;
    return r0 * (1.0 + 2.0 * rho);  // variable density: sparser away from center
  };

  // bucket grid for neighbor lookups
  const double bucket = std::max(r0, 1.0);
  const std::size_t by = std::size_t(std::ceil(double(ny) / bucket));
  const std::size_t bx = std::size_t(std::ceil(double(nx) / bucket));
  std::vector<std::vector<std::uint32_t>> buckets(by * bx);
  std::vector<Dart> darts;

  const double max_radius = r0 * 3.0;
  const int reach = int(std::ceil(max_radius / bucket)) + 1;

  Rng rng(seed);
  const std::size_t attempts = 30 * ny * nx;
  for (std::size_t t = 0; t < attempts; ++t) {
    const std::size_t iy = rng.uniform_index(ny);
    const std::size_t ix = rng.uniform_index(nx);
    if (in_calib(iy, ix)) continue;  // calibration block is added separately
    const double y = double(iy), x = double(ix);
    const double r = local_radius(y, x);
    const int gy = int(y / bucket), gx = int(x / bucket);
    bool ok = true;
    for (int dy = -reach; dy <= reach && ok; ++dy) {
      const int yy = gy + dy;
      if (yy < 0 || yy >= int(by)) continue;
      for (int dx = -reach; dx <= reach && ok; ++dx) {
        const int xx = gx + dx;
        if (xx < 0 || xx >= int(bx)) continue;
        for (std::uint32_t idx : buckets[std::size_t(yy) * bx + std::size_t(xx)]) {
          const Dart& d = darts[idx];
          const double need = std::max(r, d.radius);
          const double ddy = d.y - y, ddx = d.x - x;
          if (ddy * ddy + ddx * ddx < need * need) {
            ok = false;
            break;
          }
        }
      }
    }
    if (!ok) continue;
    buckets[std::size_t(gy) * bx + std::size_t(gx)].push_back(
        std::uint32_t(darts.size()));
    darts.push_back({y, x, r});
  }
  return darts;
}

inline SamplingMask assemble_poisson(std::size_t ny, std::size_t nx, double R,
                                     std::size_t calib,
                                     const std::vector<Dart>& darts) {
  SamplingMask m;
  m.rows = ny;
  m.cols = nx;
  m.acceleration_target = R;
  m.kept.assign(ny * nx, 0);
  for (const Dart& d : darts)
    m.kept[std::size_t(d.y) * nx + std::size_t(d.x)] = 1;
  // fully sampled calibration block around the k-space center
  const std::size_t y0 = (ny - std::min(calib, ny)) / 2;
  const std::size_t x0 = (nx - std::min(calib, nx)) / 2;
  for (std::size_t y = y0; y < y0 + std::min(calib, ny); ++y)
    for (std::size_t x = x0; x < x0 + std::min(calib, nx); ++x)
      m.kept[y * nx + x] = 1;
  m.kept[(ny / 2) * nx + nx / 2] = 1;  // DC always acquired
  return m;
}

}  // namespace detail

// Variable-density Poisson-disc undersampling with a fully sampled
// calib x calib center. The base radius is bisected until the realized
// acceleration lands within 15% of the request.
inline SamplingMask make_poisson_mask(std::size_t ny, std::size_t nx, double R,
                                      std::size_t calib, std::uint64_t seed) {
  if (ny < 1 || nx < 1) throw std::invalid_argument("make_poisson_mask: empty grid");
  if (R < 1.0) throw std::invalid_argument("make_poisson_mask: R must be >= 1");
  if (calib >= std::min(ny, nx))
    throw std::invalid_argument("make_poisson_mask: calib must be smaller than the grid");

  const double total = double(ny) * double(nx);
  SamplingMask best;
  if (R == 1.0) {
    best.rows = ny;
    best.cols = nx;
    best.acceleration_target = R;
    best.kept.assign(ny * nx, 1);
    return best;
  }
  // Even with zero darts the calibration block bounds the acceleration.
  if (calib > 0 && total / double(calib * calib) < 0.85 * R)
    throw std::invalid_argument(
        "make_poisson_mask: target R infeasible with this calibration size");

  const double tol = 0.15;
  double lo = 0.2, hi = double(std::min(ny, nx));
  double best_err = 1e300;
  for (int iter = 0; iter < 48; ++iter) {
    const double r0 = 0.5 * (lo + hi);
    SamplingMask cand =
        detail::assemble_poisson(ny, nx, R, calib,
                                 detail::throw_darts(ny, nx, r0, calib, seed));
    const double realized = cand.realized_acceleration();
    const double err = std::abs(realized - R) / R;
    if (err < best_err) {
      best_err = err;
      best = cand;
    }
    if (err <= tol * 0.5) break;  // comfortably inside tolerance
    if (realized < R)
      lo = r0;  // too dense, grow the radius
    else
      hi = r0;
  }
  if (best_err > tol)
    throw std::invalid_argument(
        "make_poisson_mask: could not realize requested acceleration");
  return best;
}

// Regular lattice undersampling of the (ky, kz) plane. The lattice is
// anchored so the DC row/column is always kept.
inline SamplingMask make_uniform_mask(std::size_t ny, std::size_t nz,
                                      std::size_t Ry, std::size_t Rz) {
  if (Ry < 1 || Rz < 1)
    throw std::invalid_argument("make_uniform_mask: factors must be >= 1");
  SamplingMask m;
  m.rows = ny;
  m.cols = nz;
  m.acceleration_target = double(Ry) * double(Rz);
  m.kept.assign(ny * nz, 0);
  for (std::size_t y = 0; y < ny; ++y) {
    if ((y + Ry - (ny / 2) % Ry) % Ry != 0) continue;
    for (std::size_t z = 0; z < nz; ++z)
      if ((z + Rz - (nz / 2) % Rz) % Rz == 0) m.kept[y * nz + z] = 1;
  }
  return m;
}

}  // namespace infusion
