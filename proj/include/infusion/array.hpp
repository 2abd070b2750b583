#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace infusion {

// Dense row-major complex array, rank 1..4. Axis conventions used across
// the project:
//   2D images             {ny, nx}
//   3D volumes            {nz, ny, nx}        (x-y planes contiguous)
//   multi-coil k-space    {C, ny, nx} / {C, nz, ny, nx}
//   coil maps             {C, ny, nx}
template <typename T>
class ComplexArray {
 public:
  using value_type = std::complex<T>;

  ComplexArray() = default;

  explicit ComplexArray(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    check_dims();
    data_.assign(element_count(), value_type(0));
  }

  ComplexArray(std::initializer_list<std::size_t> dims)
      : ComplexArray(std::vector<std::size_t>(dims)) {}

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const { return data_.size(); }

  value_type* data() { return data_.data(); }
  const value_type* data() const { return data_.data(); }

  value_type& operator[](std::size_t i) { return data_[i]; }
  const value_type& operator[](std::size_t i) const { return data_[i]; }

  value_type& at2(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
  const value_type& at2(std::size_t i, std::size_t j) const {
    return data_[i * dims_[1] + j];
  }
  value_type& at3(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }
  const value_type& at3(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * dims_[1] + j) * dims_[2] + k];
  }
  value_type& at4(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l];
  }
  const value_type& at4(std::size_t i, std::size_t j, std::size_t k,
                        std::size_t l) const {
    return data_[((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l];
  }

  bool same_shape(const ComplexArray& other) const { return dims_ == other.dims_; }

  void fill(value_type v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  ComplexArray<U> cast() const {
    ComplexArray<U> out(dims_);
    for (std::size_t i = 0; i < size(); ++i)
      out[i] = std::complex<U>(static_cast<U>(data_[i].real()),
                               static_cast<U>(data_[i].imag()));
    return out;
  }

  bool all_finite() const {
    for (const auto& v : data_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

 private:
  std::size_t element_count() const {
    return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                           std::multiplies<>());
  }

  void check_dims() const {
    if (dims_.empty() || dims_.size() > 4)
      throw std::invalid_argument("ComplexArray rank must be 1..4");
    for (auto d : dims_)
      if (d < 1) throw std::invalid_argument("ComplexArray dims must be >= 1");
  }

  std::vector<std::size_t> dims_;
  std::vector<value_type> data_;
};

// Accumulate in double regardless of T so norms stay accurate for large arrays.
template <typename T>
double norm2_sq(const ComplexArray<T>& a) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += double(a[i].real()) * a[i].real() + double(a[i].imag()) * a[i].imag();
  return acc;
}

template <typename T>
double norm2(const ComplexArray<T>& a) {
  return std::sqrt(norm2_sq(a));
}

template <typename T>
double max_abs(const ComplexArray<T>& a) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, double(std::abs(a[i])));
  return m;
}

template <typename T>
std::complex<double> inner_product(const ComplexArray<T>& a,
                                   const ComplexArray<T>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("inner_product: shape mismatch");
  std::complex<double> acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += std::conj(std::complex<double>(a[i])) * std::complex<double>(b[i]);
  return acc;
}

template <typename T>
bool bitwise_equal(const ComplexArray<T>& a, const ComplexArray<T>& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::memcmp(&a[i], &b[i], sizeof(std::complex<T>)) != 0) return false;
  }
  return true;
}

template <typename T>
std::string shape_string(const ComplexArray<T>& a) {
  std::string s = "(";
  for (std::size_t i = 0; i < a.rank(); ++i) {
    if (i) s += ", ";
    s += std::to_string(a.dim(i));
  }
  return s + ")";
}

}  // namespace infusion
