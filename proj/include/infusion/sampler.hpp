#pragma once

#include <algorithm>
#include <vector>

#include "infusion/edm.hpp"
#include "infusion/unet.hpp"

namespace infusion {

struct SamplerOptions {
  int steps = 10;
  double sigma_min = 0.002;
  double rho = 7.0;
};

// Inputs and noise levels recorded during sampling so the chain can be
// differentiated afterwards. Denoiser activations are recomputed on the
// backward sweep rather than stored.
template <typename T>
struct HeunTape {
  std::vector<Tensor3<T>> xs, xes;
  std::vector<double> sigmas;
  bool second_order_last = false;
};

// Deterministic second-order sampler: x_start carries noise at level
// sigma_start, the schedule warps down from there and finishes at exactly 0.
// A sigma_start at or below the sampler floor still yields a valid strictly
// decreasing schedule by shrinking the floor under it.
template <typename T>
Tensor3<T> heun_sample(Denoiser<T>& den, const Tensor3<T>& x_start,
                       double sigma_start, const SamplerOptions& opt = {},
                       HeunTape<T>* tape = nullptr) {
  if (sigma_start <= 0.0)
    throw std::invalid_argument("heun_sample: sigma_start must be positive");
  const double lo = std::min(opt.sigma_min, 0.9 * sigma_start);
  const std::vector<double> sig =
      karras_sigmas(opt.steps, lo, sigma_start, opt.rho);
  if (tape) {
    tape->xs.clear();
    tape->xes.clear();
    tape->sigmas = sig;
  }

  Tensor3<T> x = x_start;
  for (int i = 0; i < opt.steps; ++i) {
    const double t = sig[std::size_t(i)], tn = sig[std::size_t(i) + 1];
    if (tape) tape->xs.push_back(x);
    Tensor3<T> den_t = den.denoise(x, t, false);
    Tensor3<T> d = x;
    d.m = (x.m - den_t.m) / T(t);
    Tensor3<T> xe = x;
    xe.m = x.m + T(tn - t) * d.m;
    if (tn > 0.0) {
      if (tape) tape->xes.push_back(xe);
      Tensor3<T> den_n = den.denoise(xe, tn, false);
      Tensor3<T> d2 = xe;
      d2.m = (xe.m - den_n.m) / T(tn);
      x.m = x.m + T(0.5 * (tn - t)) * (d.m + d2.m);
    } else {
      x = std::move(xe);
    }
  }
  if (tape) tape->second_order_last = false;
  return x;
}

// Pulls dL/d(final sample) back to dL/d(x_start) through the recorded chain.
// Each step re-runs the denoiser forward to rebuild its caches, then applies
// the input-side vector-Jacobian product.
template <typename T>
Tensor3<T> heun_sample_vjp(Denoiser<T>& den, const HeunTape<T>& tape,
                           const Tensor3<T>& dfinal) {
  Tensor3<T> g = dfinal;
  const int n = int(tape.xs.size());
  for (int i = n - 1; i >= 0; --i) {
    const double t = tape.sigmas[std::size_t(i)];
    const double tn = tape.sigmas[std::size_t(i) + 1];
    const double h = tn - t;
    const Tensor3<T>& x = tape.xs[std::size_t(i)];
    if (tn > 0.0) {
      const Tensor3<T>& xe = tape.xes[std::size_t(i)];
      Tensor3<T> g_d2 = g;
      g_d2.m = T(0.5 * h) * g.m;
      den.denoise(xe, tn, true);
      Tensor3<T> jtv = den.denoise_backward(g_d2, false);
      Tensor3<T> g_xe = g_d2;
      g_xe.m = (g_d2.m - jtv.m) / T(tn);

      Tensor3<T> g_d = g;
      g_d.m = T(0.5 * h) * g.m + T(h) * g_xe.m;
      den.denoise(x, t, true);
      Tensor3<T> jtv2 = den.denoise_backward(g_d, false);
      Tensor3<T> g_x = g;
      g_x.m = g.m + g_xe.m + (g_d.m - jtv2.m) / T(t);
      g = std::move(g_x);
    } else {
      Tensor3<T> g_d = g;
      g_d.m = T(h) * g.m;
      den.denoise(x, t, true);
      Tensor3<T> jtv = den.denoise_backward(g_d, false);
      Tensor3<T> g_x = g;
      g_x.m = g.m + (g_d.m - jtv.m) / T(t);
      g = std::move(g_x);
    }
  }
  return g;
}

// Unconditional draw: pure noise at sigma_max pulled down the full schedule.
template <typename T>
Tensor3<T> sample_from_noise(Denoiser<T>& den, int h, int w, Rng& rng,
                             double sigma_max = 80.0,
                             const SamplerOptions& opt = {}) {
  Tensor3<T> x(2, h, w);
  for (Eigen::Index i = 0; i < x.m.size(); ++i)
    x.m.data()[i] = T(sigma_max * rng.normal());
  return heun_sample(den, x, sigma_max, opt);
}

}  // namespace infusion
