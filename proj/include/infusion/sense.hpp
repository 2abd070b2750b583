#pragma once

#include <stdexcept>

#include "infusion/array.hpp"
#include "infusion/fft.hpp"
#include "infusion/mask.hpp"

namespace infusion {

// Per-coil complex receive profiles, dims {C, ny, nx}. For volumes the same
// 2D profile is applied to every x-y plane.
template <typename T>
struct SensitivityMaps {
  ComplexArray<T> values;
  int ncoils = 0;

  std::size_t ny() const { return values.dim(1); }
  std::size_t nx() const { return values.dim(2); }
  const std::complex<T>* coil(std::size_t c) const {
    return values.data() + c * ny() * nx();
  }
};

// Acquired k-space on the full grid; unsampled entries are exactly zero.
// values dims: {C, ny, nx} for 2D, {C, nz, ny, nx} for 3D.
template <typename T>
struct KSpaceMeasurements {
  ComplexArray<T> values;
  SamplingMask mask;
  int ncoils = 0;
};

namespace detail {

template <typename T>
void check_operator_shapes(const ComplexArray<T>& x, const SensitivityMaps<T>& S,
                           const SamplingMask& m) {
  if (S.values.rank() != 3 || S.values.dim(0) != std::size_t(S.ncoils))
    throw std::invalid_argument("sense: coil maps must have dims {C, ny, nx}");
  if (x.rank() == 2) {
    if (x.dim(0) != S.ny() || x.dim(1) != S.nx())
      throw std::invalid_argument("sense: image and coil map shapes differ");
    if (m.rows != x.dim(0) || m.cols != x.dim(1))
      throw std::invalid_argument("sense: 2D mask must match the (ky, kx) grid");
  } else if (x.rank() == 3) {
    if (x.dim(1) != S.ny() || x.dim(2) != S.nx())
      throw std::invalid_argument("sense: volume and coil map shapes differ");
    if (m.rows != x.dim(1) || m.cols != x.dim(0))
      throw std::invalid_argument("sense: 3D mask must match the (ky, kz) grid");
  } else {
    throw std::invalid_argument("sense: image rank must be 2 or 3");
  }
}

}  // namespace detail

// y_c = P fft2c(S_c . x), coil by coil. For volumes the transform runs on
// each x-y plane and the (ky, kz) mask is broadcast along the readout kx.
template <typename T>
KSpaceMeasurements<T> forward(const ComplexArray<T>& x,
                              const SensitivityMaps<T>& S, const SamplingMask& m) {
  detail::check_operator_shapes(x, S, m);
  const std::size_t C = std::size_t(S.ncoils);
  const std::size_t ny = S.ny(), nx = S.nx();
  const std::size_t nz = (x.rank() == 3) ? x.dim(0) : 1;
  const std::size_t plane = ny * nx;

  KSpaceMeasurements<T> out;
  out.mask = m;
  out.ncoils = int(C);
  out.values = (x.rank() == 2) ? ComplexArray<T>({C, ny, nx})
                               : ComplexArray<T>({C, nz, ny, nx});

  std::vector<std::complex<T>> tmp(plane);
  for (std::size_t c = 0; c < C; ++c) {
    const std::complex<T>* sc = S.coil(c);
    for (std::size_t z = 0; z < nz; ++z) {
      const std::complex<T>* xz = x.data() + z * plane;
      std::complex<T>* yz = out.values.data() + (c * nz + z) * plane;
      for (std::size_t i = 0; i < plane; ++i) tmp[i] = sc[i] * xz[i];
      fft2c_block(tmp.data(), yz, ny, nx, false);
      if (x.rank() == 2) {
        for (std::size_t i = 0; i < plane; ++i)
          if (!m.kept[i]) yz[i] = std::complex<T>(0);
      } else {
        for (std::size_t ky = 0; ky < ny; ++ky)
          if (!m.at(ky, z))
            for (std::size_t kx = 0; kx < nx; ++kx)
              yz[ky * nx + kx] = std::complex<T>(0);
      }
    }
  }
  return out;
}

// x = sum_c conj(S_c) . ifft2c(P y_c); the coil sum runs in coil order so
// the reduction is deterministic.
template <typename T>
ComplexArray<T> adjoint(const KSpaceMeasurements<T>& y, const SensitivityMaps<T>& S,
                        const SamplingMask& m) {
  const std::size_t C = std::size_t(S.ncoils);
  const std::size_t ny = S.ny(), nx = S.nx();
  const bool volumetric = (y.values.rank() == 4);
  const std::size_t nz = volumetric ? y.values.dim(1) : 1;
  const std::size_t plane = ny * nx;
  if (y.values.dim(0) != C)
    throw std::invalid_argument("adjoint: coil count mismatch");
  if (y.values.dim(volumetric ? 2 : 1) != ny ||
      y.values.dim(volumetric ? 3 : 2) != nx)
    throw std::invalid_argument("adjoint: measurement grid and coil maps differ");

  ComplexArray<T> x = volumetric ? ComplexArray<T>({nz, ny, nx})
                                 : ComplexArray<T>({ny, nx});
  detail::check_operator_shapes(x, S, m);

  std::vector<std::complex<T>> tmp(plane), img(plane);
  for (std::size_t c = 0; c < C; ++c) {
    const std::complex<T>* sc = S.coil(c);
    for (std::size_t z = 0; z < nz; ++z) {
      const std::complex<T>* yz = y.values.data() + (c * nz + z) * plane;
      if (volumetric) {
        for (std::size_t ky = 0; ky < ny; ++ky) {
          const bool keep = m.at(ky, z);
          for (std::size_t kx = 0; kx < nx; ++kx)
            tmp[ky * nx + kx] = keep ? yz[ky * nx + kx] : std::complex<T>(0);
        }
      } else {
        for (std::size_t i = 0; i < plane; ++i)
          tmp[i] = m.kept[i] ? yz[i] : std::complex<T>(0);
      }
      fft2c_block(tmp.data(), img.data(), ny, nx, true);
      std::complex<T>* xz = x.data() + z * plane;
      for (std::size_t i = 0; i < plane; ++i) xz[i] += std::conj(sc[i]) * img[i];
    }
  }
  return x;
}

// Uniform coil maps (S == 1) for single-coil experiments.
template <typename T>
SensitivityMaps<T> unit_coil(std::size_t ny, std::size_t nx) {
  SensitivityMaps<T> S;
  S.ncoils = 1;
  S.values = ComplexArray<T>({1, ny, nx});
  for (std::size_t i = 0; i < S.values.size(); ++i) S.values[i] = std::complex<T>(1);
  return S;
}

}  // namespace infusion
