#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "infusion/array.hpp"
#include "infusion/rng.hpp"

namespace infusion {

namespace detail {

struct Ellipse {
  double value;  // additive intensity
  double ax, ay; // semi-axes in [-1, 1] coordinates
  double cx, cy; // center
  double theta;  // rotation, radians
  double cz, az; // center and semi-axis along z for volumes
};

// Head-like ellipse table (modified intensities for usable contrast).
inline std::vector<Ellipse> base_ellipses() {
  return {
      {1.00, 0.69, 0.92, 0.0, 0.0, 0.0, 0.0, 0.90},
      {-0.80, 0.6624, 0.874, 0.0, -0.0184, 0.0, 0.0, 0.88},
      {-0.20, 0.11, 0.31, 0.22, 0.0, -18.0 * M_PI / 180.0, 0.0, 0.70},
      {-0.20, 0.16, 0.41, -0.22, 0.0, 18.0 * M_PI / 180.0, 0.0, 0.74},
      {0.10, 0.21, 0.25, 0.0, 0.35, 0.0, 0.0, 0.60},
      {0.10, 0.046, 0.046, 0.0, 0.10, 0.0, 0.0, 0.30},
      {0.10, 0.046, 0.046, 0.0, -0.10, 0.0, 0.0, 0.30},
      {0.10, 0.046, 0.023, -0.08, -0.605, 0.0, 0.0, 0.25},
      {0.10, 0.023, 0.023, 0.0, -0.606, 0.0, 0.0, 0.25},
      {0.10, 0.023, 0.046, 0.06, -0.605, 0.0, 0.0, 0.25},
  };
}

inline std::vector<Ellipse> jitter_ellipses(Rng& rng) {
  auto es = base_ellipses();
  for (auto& e : es) {
    e.cx += rng.uniform(-0.04, 0.04);
    e.cy += rng.uniform(-0.04, 0.04);
    e.ax *= 1.0 + rng.uniform(-0.08, 0.08);
    e.ay *= 1.0 + rng.uniform(-0.08, 0.08);
    e.theta += rng.uniform(-0.1, 0.1);
    e.value *= 1.0 + rng.uniform(-0.1, 0.1);
  }
  return es;
}

inline double rasterize_point(const std::vector<Ellipse>& es, double x, double y,
                              double zslice, bool volumetric) {
  double v = 0.0;
  for (const auto& e : es) {
    double sx = e.ax, sy = e.ay;
    if (volumetric) {
      const double dz = (zslice - e.cz) / e.az;
      if (dz * dz >= 1.0) continue;
      const double s = std::sqrt(1.0 - dz * dz);
      sx *= s;
      sy *= s;
    }
    const double ct = std::cos(e.theta), st = std::sin(e.theta);
    const double dx = x - e.cx, dy = y - e.cy;
    const double u = (ct * dx + st * dy) / sx;
    const double w = (-st * dx + ct * dy) / sy;
    if (u * u + w * w <= 1.0) v += e.value;
  }
  return v;
}

// Low-order polynomial phase; coefficients drawn once per phantom so the
// field is smooth but differs between ensemble members.
struct PhaseField {
  double a1, a2, a3, a4, a5;
  double eval(double x, double y) const {
    return a1 * x + a2 * y + a3 * x * y + a4 * (x * x - y * y) +
           a5 * (x * x + y * y);
  }
};

inline PhaseField draw_phase(Rng& rng) {
  const double s = 0.6;
  return {rng.uniform(-s, s), rng.uniform(-s, s), rng.uniform(-s, s),
          rng.uniform(-s, s), rng.uniform(-s, s)};
}

}  // namespace detail

// Complex head phantom on an ny-by-nx grid. Magnitudes land in [0, 1] with a
// zero background; a smooth seeded phase makes the image genuinely complex.
// Same (ny, nx, seed) reproduces the array bit for bit.
template <typename T = float>
ComplexArray<T> make_phantom(std::size_t ny, std::size_t nx, std::uint64_t seed) {
  if (ny < 16 || nx < 16)
    throw std::invalid_argument("phantom: grid must be at least 16x16");
  Rng root(seed);
  Rng shape_rng = root.stream("phantom.shape");
  Rng phase_rng = root.stream("phantom.phase");
  const auto es = detail::jitter_ellipses(shape_rng);
  const auto ph = detail::draw_phase(phase_rng);

  ComplexArray<T> img({ny, nx});
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double y = 2.0 * (double(iy) + 0.5) / double(ny) - 1.0;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double x = 2.0 * (double(ix) + 0.5) / double(nx) - 1.0;
      double v = detail::rasterize_point(es, x, y, 0.0, false);
      v = std::clamp(v, 0.0, 1.0);
      const double phi = ph.eval(x, y);
      img.at2(iy, ix) = std::complex<T>(T(v * std::cos(phi)), T(v * std::sin(phi)));
    }
  }
  return img;
}

// Volume {nz, ny, nx}: the jittered ellipses act as ellipsoids and each x-y
// slice is their cross-section at z in [-1, 1].
template <typename T = float>
ComplexArray<T> make_phantom_3d(std::size_t nz, std::size_t ny, std::size_t nx,
                                std::uint64_t seed) {
  if (ny < 16 || nx < 16 || nz < 2)
    throw std::invalid_argument("phantom: volume needs ny, nx >= 16 and nz >= 2");
  Rng root(seed);
  Rng shape_rng = root.stream("phantom.shape");
  Rng phase_rng = root.stream("phantom.phase");
  const auto es = detail::jitter_ellipses(shape_rng);
  const auto ph = detail::draw_phase(phase_rng);

  ComplexArray<T> vol({nz, ny, nx});
  for (std::size_t iz = 0; iz < nz; ++iz) {
    const double z = 2.0 * (double(iz) + 0.5) / double(nz) - 1.0;
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const double y = 2.0 * (double(iy) + 0.5) / double(ny) - 1.0;
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const double x = 2.0 * (double(ix) + 0.5) / double(nx) - 1.0;
        double v = detail::rasterize_point(es, x, y, z, true);
        v = std::clamp(v, 0.0, 1.0);
        const double phi = ph.eval(x, y) * (1.0 + 0.2 * z);
        vol.at3(iz, iy, ix) =
            std::complex<T>(T(v * std::cos(phi)), T(v * std::sin(phi)));
      }
    }
  }
  return vol;
}

// Training corpus for the image prior: count phantoms with consecutive seeds
// derived from base_seed.
template <typename T = float>
std::vector<ComplexArray<T>> make_ensemble(std::size_t count, std::size_t ny,
                                           std::size_t nx, std::uint64_t base_seed) {
  std::vector<ComplexArray<T>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(make_phantom<T>(ny, nx, base_seed + i));
  return out;
}

}  // namespace infusion
