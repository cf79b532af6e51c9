#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "mpvar/error.hpp"

namespace mpvar::detail {

inline void require_finite(std::span<const double> values, const char* what) {
  for (double value : values) {
    if (!std::isfinite(value)) {
      throw Error(ErrorKind::NonFinite, std::string(what) + " contains NaN or Inf");
    }
  }
}

inline void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::LengthMismatch, "inputs have lengths " + std::to_string(a.size()) +
                                               " and " + std::to_string(b.size()));
  }
}

inline void require_min_size(std::span<const double> values, std::size_t min_size) {
  if (values.size() < min_size) {
    throw Error(ErrorKind::SampleTooSmall, "need at least " + std::to_string(min_size) +
                                               " observations, got " +
                                               std::to_string(values.size()));
  }
}

inline double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double value : values) m = std::max(m, std::fabs(value));
  return m;
}

/// True when the spread of `values` is within rounding noise of `scale`.
inline bool is_constant(std::span<const double> values, double scale) {
  if (values.empty()) return true;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return (*hi - *lo) <= 64.0 * std::numeric_limits<double>::epsilon() * scale;
}

inline bool is_constant(std::span<const double> values) {
  return is_constant(values, max_abs(values));
}

inline double mean(std::span<const double> values) {
  double sum = 0.0;
  for (double value : values) sum += value;
  return sum / static_cast<double>(values.size());
}

/// Sample variance with n - 1 denominator.
inline double sample_variance(std::span<const double> values) {
  const double m = mean(values);
  double ss = 0.0;
  for (double value : values) ss += (value - m) * (value - m);
  return ss / static_cast<double>(values.size() - 1);
}

}  // namespace mpvar::detail
