#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "infusion/rng.hpp"

namespace infusion {

// Preconditioning weights for the denoiser wrapper
//   D(x; sigma) = c_skip x + c_out F(c_in x; c_noise),
// chosen so F sees unit-variance inputs and trains against unit-variance
// targets for every noise level.
struct EdmWeights {
  double c_skip, c_out, c_in, c_noise;
};

inline EdmWeights edm_weights(double sigma, double sigma_data = 0.5) {
  if (sigma <= 0.0) throw std::invalid_argument("edm_weights: sigma must be > 0");
  const double s2 = sigma * sigma, d2 = sigma_data * sigma_data;
  EdmWeights w;
  w.c_skip = d2 / (s2 + d2);
  w.c_out = sigma * sigma_data / std::sqrt(s2 + d2);
  w.c_in = 1.0 / std::sqrt(s2 + d2);
  w.c_noise = std::log(sigma) / 4.0;
  return w;
}

// Training noise level: ln(sigma) ~ N(p_mean, p_std^2).
inline double draw_training_sigma(Rng& rng, double p_mean = -1.2,
                                  double p_std = 1.2) {
  return std::exp(p_mean + p_std * rng.normal());
}

// Per-sample loss weight lambda(sigma) = (sigma^2 + sigma_data^2) /
// (sigma * sigma_data)^2, the reciprocal of c_out^2.
inline double edm_loss_weight(double sigma, double sigma_data = 0.5) {
  const double s2 = sigma * sigma, d2 = sigma_data * sigma_data;
  return (s2 + d2) / (s2 * d2);
}

// Polynomial-warped sampling schedule: n decreasing positive levels from
// sigma_max to sigma_min with warp exponent rho, then a final exact zero.
inline std::vector<double> karras_sigmas(int n, double sigma_min = 0.002,
                                         double sigma_max = 80.0,
                                         double rho = 7.0) {
  if (n < 1) throw std::invalid_argument("karras_sigmas: n must be >= 1");
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min))
    throw std::invalid_argument("karras_sigmas: need 0 < sigma_min < sigma_max");
  std::vector<double> s(std::size_t(n) + 1);
  const double a = std::pow(sigma_max, 1.0 / rho);
  const double b = std::pow(sigma_min, 1.0 / rho);
  for (int i = 0; i < n; ++i) {
    const double t = (n == 1) ? 0.0 : double(i) / double(n - 1);
    s[std::size_t(i)] = std::pow(a + t * (b - a), rho);
  }
  s[std::size_t(n)] = 0.0;
  return s;
}

}  // namespace infusion
