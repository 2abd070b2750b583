#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <sys/resource.h>

namespace infusion {

// Malformed binary container or checkpoint. Carries the byte offset at
// which parsing failed.
struct FormatError : std::runtime_error {
  std::uint64_t offset;
  FormatError(const std::string& msg, std::uint64_t off)
      : std::runtime_error(msg + " (byte offset " + std::to_string(off) + ")"),
        offset(off) {}
};

// Divergence, NaN losses, or other numeric breakdown inside a solver.
struct NumericalFailure : std::runtime_error {
  explicit NumericalFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid experiment specification detected before any compute starts.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Peak resident set size of this process. Monotone over the process
// lifetime, so per-phase readings only bound the phase from above.
inline std::uint64_t peak_rss_bytes() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<std::uint64_t>(usage.ru_maxrss) * 1024u;  // KiB on Linux
}

}  // namespace infusion
