#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpvar/models.hpp"

namespace mpvar {

enum class ResidualScheme { kfold, oob_bootstrap };

[[nodiscard]] std::string_view to_string(ResidualScheme scheme) noexcept;
[[nodiscard]] ResidualScheme parse_residual_scheme(std::string_view text);

/// Out-of-sample residuals y_i - yhat_i with provenance.
/// kfold: one residual per original index, in index order.
/// oob_bootstrap: one residual per round; `indices[r]` is the test point.
struct ResidualSet {
  std::vector<double> residuals;
  std::vector<std::size_t> indices;
  std::vector<double> predictions;
  ResidualScheme scheme = ResidualScheme::kfold;
  std::string model_id;
  std::uint64_t seed = 0;
  /// Times each original sample served as a test point.
  std::vector<std::size_t> coverage;

  /// max(coverage) - min(coverage).
  [[nodiscard]] std::size_t coverage_spread() const;
};

/// Fold label in [0, k) for every index: a seeded shuffle cut into k
/// contiguous blocks whose sizes differ by at most one.
[[nodiscard]] std::vector<std::size_t> kfold_assignment(std::size_t n, std::size_t k,
                                                        std::uint64_t seed);

/// K-fold residuals with explicit fold labels.
[[nodiscard]] ResidualSet kfold_residuals(const Matrix& x, const Vector& y, const ModelSpec& spec,
                                          std::span<const std::size_t> folds, std::size_t k);

/// K-fold residuals; fold labels from kfold_assignment(n, k, seed).
[[nodiscard]] ResidualSet kfold_residuals(const Matrix& x, const Vector& y, const ModelSpec& spec,
                                          std::size_t k, std::uint64_t seed);

/// Bootstrap out-of-bag residuals. Round r uses seed + r: it draws n rows
/// with replacement for training and tests on one out-of-bag row with the
/// lowest coverage so far (seeded tie-break). Draws in which no
/// least-covered row is out of bag are redrawn, up to 100 times.
[[nodiscard]] ResidualSet oob_bootstrap_residuals(const Matrix& x, const Vector& y,
                                                  const ModelSpec& spec, std::size_t rounds,
                                                  std::uint64_t seed);

}  // namespace mpvar
