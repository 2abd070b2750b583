#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "infusion/array.hpp"
#include "infusion/common.hpp"

namespace infusion {

// CPXA: fixed binary container for complex arrays.
//   bytes 0-3   magic "CPXA"
//   byte  4     version, currently 1
//   byte  5     ndim, 1..4
//   next        ndim x little-endian uint64 dims
//   payload     row-major interleaved (real, imag) float32, little-endian
//
// Values are stored as float32 regardless of the in-memory scalar type, so
// save/load round-trips bitwise for float arrays and rounds for double.

namespace detail {

inline void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

inline void put_f32_le(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(bits >> (8 * i)));
}

inline std::uint64_t get_u64_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

inline float get_f32_le(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= std::uint32_t(p[i]) << (8 * i);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace detail

template <typename T>
void save_array(const std::string& path, const ComplexArray<T>& a) {
  std::vector<std::uint8_t> buf;
  buf.reserve(6 + 8 * a.rank() + 8 * a.size());
  buf.insert(buf.end(), {'C', 'P', 'X', 'A'});
  buf.push_back(1);  // version
  buf.push_back(std::uint8_t(a.rank()));
  for (std::size_t i = 0; i < a.rank(); ++i) detail::put_u64_le(buf, a.dim(i));
  for (std::size_t i = 0; i < a.size(); ++i) {
    detail::put_f32_le(buf, static_cast<float>(a[i].real()));
    detail::put_f32_le(buf, static_cast<float>(a[i].imag()));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("save_array: cannot open " + path);
  f.write(reinterpret_cast<const char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) throw std::runtime_error("save_array: write failed for " + path);
}

inline ComplexArray<float> load_array(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_array: cannot open " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());

  if (buf.size() < 4 || std::memcmp(buf.data(), "CPXA", 4) != 0)
    throw FormatError("load_array: bad magic in " + path, 0);
  if (buf.size() < 5) throw FormatError("load_array: truncated header", 4);
  if (buf[4] != 1)
    throw FormatError(
        "load_array: unsupported version " + std::to_string(int(buf[4])), 4);
  if (buf.size() < 6) throw FormatError("load_array: truncated header", 5);
  unsigned ndim = buf[5];
  if (ndim < 1 || ndim > 4)
    throw FormatError("load_array: ndim out of range: " + std::to_string(ndim), 5);

  std::size_t off = 6;
  std::vector<std::size_t> dims(ndim);
  std::size_t count = 1;
  for (unsigned i = 0; i < ndim; ++i, off += 8) {
    if (buf.size() < off + 8)
      throw FormatError("load_array: truncated dims", off);
    std::uint64_t d = detail::get_u64_le(buf.data() + off);
    if (d < 1) throw FormatError("load_array: zero dim", off);
    dims[i] = static_cast<std::size_t>(d);
    count *= dims[i];
  }

  if (buf.size() < off + 8 * count)
    throw FormatError("load_array: truncated payload", buf.size());
  if (buf.size() > off + 8 * count)
    throw FormatError("load_array: trailing bytes", off + 8 * count);

  ComplexArray<float> a(dims);
  for (std::size_t i = 0; i < count; ++i, off += 8) {
    a[i] = std::complex<float>(detail::get_f32_le(buf.data() + off),
                               detail::get_f32_le(buf.data() + off + 4));
  }
  return a;
}

template <typename T>
ComplexArray<T> load_array_as(const std::string& path) {
  return load_array(path).template cast<T>();
}

}  // namespace infusion
