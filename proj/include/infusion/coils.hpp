#pragma once

#include <cmath>

#include "infusion/rng.hpp"
#include "infusion/sense.hpp"

namespace infusion {

// Smooth synthetic receive profiles: ncoils Gaussian lobes centered on a ring
// just outside the FOV, each with a mild linear phase ramp pointing inward.
// The seed rotates the ring and jitters lobe placement and width. Maps are
// normalized so sum_c |S_c|^2 == 1 at every pixel, which makes the composite
// operator's image-domain diagonal exactly the sampling pattern.
template <typename T = float>
SensitivityMaps<T> simulate_coil_maps(std::size_t ny, std::size_t nx, int ncoils,
                                      std::uint64_t seed) {
  if (ncoils < 1) throw std::invalid_argument("simulate_coil_maps: ncoils >= 1");
  Rng rng = Rng(seed).stream("coils.geometry");
  const double ang0 = rng.uniform(0.0, 2.0 * M_PI);
  std::vector<double> cx(std::size_t(ncoils), 0.0);
  std::vector<double> cy(std::size_t(ncoils), 0.0);
  std::vector<double> width(std::size_t(ncoils), 0.0);
  for (int c = 0; c < ncoils; ++c) {
    const double ang = ang0 + 2.0 * M_PI * double(c) / double(ncoils) +
                       rng.uniform(-0.1, 0.1);
    const double ring = 1.25 + rng.uniform(-0.05, 0.05);
    cx[c] = ring * std::cos(ang);
    cy[c] = ring * std::sin(ang);
    width[c] = 1.05 * (1.0 + rng.uniform(-0.1, 0.1));
  }

  SensitivityMaps<T> S;
  S.ncoils = ncoils;
  S.values = ComplexArray<T>({std::size_t(ncoils), ny, nx});
  std::vector<double> mag(std::size_t(ncoils), 0.0);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double y = 2.0 * (double(iy) + 0.5) / double(ny) - 1.0;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double x = 2.0 * (double(ix) + 0.5) / double(nx) - 1.0;
      double ssq = 0.0;
      for (int c = 0; c < ncoils; ++c) {
        const double dx = x - cx[c], dy = y - cy[c];
        mag[c] = std::exp(-(dx * dx + dy * dy) / (2.0 * width[c] * width[c]));
        ssq += mag[c] * mag[c];
      }
      const double inv = 1.0 / std::sqrt(ssq);
      for (int c = 0; c < ncoils; ++c) {
        const double phi = 0.7 * (x * cx[c] + y * cy[c]) / 1.25;
        const double m = mag[c] * inv;
        S.values.at3(std::size_t(c), iy, ix) =
            std::complex<T>(T(m * std::cos(phi)), T(m * std::sin(phi)));
      }
    }
  }
  return S;
}

}  // namespace infusion
