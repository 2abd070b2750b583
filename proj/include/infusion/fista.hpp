#pragma once

#include <cmath>
#include <vector>

#include "infusion/common.hpp"
#include "infusion/metrics.hpp"
#include "infusion/sense.hpp"
#include "infusion/wavelet.hpp"

namespace infusion {

struct FistaOptions {
  double lambda = 1e-3;
  int iters = 60;
  int levels = 3;
  double step = 0.5;  // 1/L with L = 2 ||A||^2 and ||A|| <= 1 for unit-SOS coils
  bool record_objective = false;
};

template <typename T>
struct FistaResult {
  ComplexArray<T> image;
  std::vector<double> objective;  // filled when record_objective is set
};

namespace detail {

template <typename T>
double data_term(const KSpaceMeasurements<T>& pred, const KSpaceMeasurements<T>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    const double dr = double(pred.values[i].real()) - double(y.values[i].real());
    const double di = double(pred.values[i].imag()) - double(y.values[i].imag());
    s += dr * dr + di * di;
  }
  return s;
}

}  // namespace detail

// Accelerated proximal gradient for
//   min_x ||A x - y||^2 + lambda ||W x||_1
// with A the masked coil-weighted Fourier operator and W the orthonormal
// wavelet transform, so the prox is an exact coefficient shrink.
template <typename T>
FistaResult<T> fista_l1wavelet(const KSpaceMeasurements<T>& y,
                               const SensitivityMaps<T>& S,
                               const FistaOptions& opt = {}) {
  if (opt.lambda < 0) throw std::invalid_argument("fista: lambda must be >= 0");
  if (opt.iters < 1) throw std::invalid_argument("fista: iters must be >= 1");

  ComplexArray<T> x = adjoint(y, S, y.mask);
  ComplexArray<T> x_prev = x;
  ComplexArray<T> z = x;
  double t = 1.0;

  auto objective = [&](const ComplexArray<T>& img) {
    auto pred = forward(img, S, y.mask);
    return detail::data_term(pred, y) + opt.lambda * l1_norm(dwt2(img, opt.levels));
  };
  const double f0 = objective(x);

  FistaResult<T> res;
  if (opt.record_objective) res.objective.push_back(f0);

  for (int it = 0; it < opt.iters; ++it) {
    // gradient of the data term at z: 2 A^H (A z - y)
    auto pred = forward(z, S, y.mask);
    for (std::size_t i = 0; i < pred.values.size(); ++i)
      pred.values[i] -= y.values[i];
    ComplexArray<T> grad = adjoint(pred, S, y.mask);

    ComplexArray<T> xn = z;
    for (std::size_t i = 0; i < xn.size(); ++i)
      xn[i] -= std::complex<T>(T(2.0 * opt.step)) * grad[i];

    ComplexArray<T> coeffs = dwt2(xn, opt.levels);
    soft_threshold_inplace(coeffs, T(opt.lambda * opt.step));
    xn = idwt2(coeffs, opt.levels);

    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const T beta = T((t - 1.0) / tn);
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] = xn[i] + beta * (xn[i] - x[i]);
    x_prev = std::move(x);
    x = std::move(xn);
    t = tn;

    const double f = objective(x);
    if (!std::isfinite(f) || f > 10.0 * f0)
      throw NumericalFailure("fista: objective diverged at iteration " +
                             std::to_string(it));
    if (opt.record_objective) res.objective.push_back(f);
  }
  res.image = std::move(x);
  return res;
}

inline std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int i = 0; i < 7; ++i) g.push_back(std::pow(10.0, -4.0 + 3.0 * i / 6.0));
  return g;
}

template <typename T>
struct LambdaSearchResult {
  double best_lambda = 0.0;
  double best_nrmse = 0.0;
  ComplexArray<T> best_image;
  std::vector<std::pair<double, double>> trials;  // (lambda, nrmse)
};

// Oracle tuning: run the solver across the grid and keep the reconstruction
// closest to the reference.
template <typename T>
LambdaSearchResult<T> lambda_grid_search(const KSpaceMeasurements<T>& y,
                                         const SensitivityMaps<T>& S,
                                         const ComplexArray<T>& reference,
                                         FistaOptions opt = {},
                                         std::vector<double> grid = {}) {
  if (grid.empty()) grid = default_lambda_grid();
  LambdaSearchResult<T> out;
  bool first = true;
  for (double lam : grid) {
    opt.lambda = lam;
    auto res = fista_l1wavelet(y, S, opt);
    const double err = nrmse(res.image, reference);
    out.trials.emplace_back(lam, err);
    if (first || err < out.best_nrmse) {
      out.best_nrmse = err;
      out.best_lambda = lam;
      out.best_image = std::move(res.image);
      first = false;
    }
  }
  return out;
}

}  // namespace infusion
