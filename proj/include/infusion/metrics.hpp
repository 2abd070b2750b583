#pragma once

#include <cmath>
#include <stdexcept>

#include "infusion/array.hpp"

namespace infusion {

// ||x - ref||_2 / ||ref||_2 over the complex values.
template <typename T>
double nrmse(const ComplexArray<T>& x, const ComplexArray<T>& ref) {
  if (!x.same_shape(ref)) throw std::invalid_argument("nrmse: shape mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dr = double(x[i].real()) - double(ref[i].real());
    const double di = double(x[i].imag()) - double(ref[i].imag());
    num += dr * dr + di * di;
    den += double(ref[i].real()) * double(ref[i].real()) +
           double(ref[i].imag()) * double(ref[i].imag());
  }
  if (den == 0.0)
    throw std::invalid_argument("nrmse: reference is identically zero");
  return std::sqrt(num / den);
}

}  // namespace infusion
