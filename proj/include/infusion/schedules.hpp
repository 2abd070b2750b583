#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "infusion/rng.hpp"

namespace infusion {

// Lower edge of the perturbation range at iteration j of J: decays linearly
// from 1 and is clamped at a small floor so late iterations still perturb.
inline double sigma_min_schedule(int j, int total, double floor = 0.02) {
  if (total < 1 || j < 0 || j >= total)
    throw std::invalid_argument("sigma_min_schedule: need 0 <= j < total");
  // (total - j) / total rather than 1 - j/total: the division rounds once,
  // so the value where the line meets the floor compares equal to it.
  return std::max(double(total - j) / double(total), floor);
}

// Regularization weight: exponential decay from w0 with time constant
// tau * total iterations.
inline double weight_schedule(int j, int total, double w0 = 1.0,
                              double tau = 0.2) {
  if (total < 1 || j < 0 || j >= total)
    throw std::invalid_argument("weight_schedule: need 0 <= j < total");
  if (tau <= 0.0) throw std::invalid_argument("weight_schedule: tau must be > 0");
  return w0 * std::exp(-double(j) / (tau * double(total)));
}

// Perturbation level for iteration j, uniform on [sigma_min(j), 1].
inline double draw_perturbation_sigma(Rng& rng, int j, int total,
                                      double floor = 0.02) {
  const double lo = sigma_min_schedule(j, total, floor);
  return rng.uniform(lo, 1.0);
}

}  // namespace infusion
