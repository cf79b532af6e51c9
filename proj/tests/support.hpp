#pragma once

#include <optional>
#include <vector>

#include "mpvar/error.hpp"
#include "mpvar/random.hpp"

namespace support {

// Kind of the mpvar::Error thrown by `f`, or nullopt when nothing is thrown.
template <typename F>
std::optional<mpvar::ErrorKind> thrown_kind(F&& f) {
  try {
    f();
  } catch (const mpvar::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline std::vector<double> normals(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  mpvar::Rng rng(seed, 0xBEEF);
  std::vector<double> out(n);
  for (auto& v : out) v = sd * rng.normal();
  return out;
}

}  // namespace support
