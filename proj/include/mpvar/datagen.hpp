#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpvar/models.hpp"

namespace mpvar {

/// Feature matrix plus regression target. Invariants: finite entries,
/// rows(features) == size(target) == ..., names.size() == cols(features).
struct Dataset {
  Matrix features;
  Vector target;
  std::vector<std::string> names;
  nlohmann::json meta = nlohmann::json::object();

  [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(target.size()); }
  [[nodiscard]] std::size_t cols() const noexcept { return names.size(); }
  /// Throws DimensionMismatch / NonFinite when the invariants are broken.
  void validate() const;
};

/// Lower Cholesky factor of the d x d equicorrelation matrix
/// (unit diagonal, `rho` elsewhere). Throws InvalidCorrelation unless
/// -1/(d-1) < rho < 1.
[[nodiscard]] Matrix equicorrelation_cholesky(std::size_t d, double rho);

/// n i.i.d. rows from N(0, Sigma) with Sigma the equicorrelation matrix.
[[nodiscard]] Matrix sample_equicorrelated_gaussian(std::size_t n, std::size_t d, double rho,
                                                    std::uint64_t seed);

/// n i.i.d. Student-t draws (normal over sqrt(chi-square / df)).
[[nodiscard]] std::vector<double> sample_t(double df, std::size_t n, std::uint64_t seed);

/// Noiseless response 3 L(2x1 + 4x2 + 3x3 + 3x4) + 3 cos(2x1 + 4x2 - 3x3 - 3x4),
/// L the logistic function, x1..x4 stored in columns 0..3.
[[nodiscard]] Vector logistic_cosine_response(const Matrix& x);

/// Noiseless full quadratic 1 + x0 + x1 + x0^2 + x0 x1 + x1^2.
[[nodiscard]] Vector quadratic_response(const Matrix& x);

/// Eight standard normal features with pairwise correlation 0.5, t3 noise.
[[nodiscard]] Dataset simdata1(std::size_t n, std::uint64_t seed);
/// As simdata1 with independent features; the noise stream is shared.
[[nodiscard]] Dataset simdata2(std::size_t n, std::uint64_t seed);
/// Two independent N(0,1) features, quadratic response plus t3 noise.
[[nodiscard]] Dataset simdata3(std::size_t n, std::uint64_t seed);

/// (10, 8, 8, 1) ReLU network with Glorot-normal weights from seed 0.
[[nodiscard]] NetSpec simdata4_generator_spec();
/// Ten N(0,1) features; target = untrained generator network output plus
/// N(0, (0.05 s_y)^2) noise, s_y the sample sd of the noiseless outputs.
[[nodiscard]] Dataset simdata4(std::size_t n, std::uint64_t seed,
                               const NetSpec& generator_spec = simdata4_generator_spec());

/// simdata4 with explicit generator parameters (e.g. a hand-built network).
[[nodiscard]] Dataset simdata4_with_parameters(std::size_t n, std::uint64_t seed,
                                               const NetSpec& generator_spec,
                                               const Vector& parameters);

/// Generator dispatch by name (simdata1 .. simdata4). Throws InvalidArgument
/// on an unknown name.
[[nodiscard]] Dataset generate_dataset(const std::string& name, std::size_t n,
                                       std::uint64_t seed);

/// Dataset restricted to the `kept` feature columns, in the given order.
[[nodiscard]] Dataset select_features(const Dataset& data, std::span<const std::size_t> kept);

struct TukeyFence {
  double lower = 0.0;
  double upper = 0.0;
};

/// [Q1 - 1.5 IQR, Q3 + 1.5 IQR] with type-7 quartiles.
[[nodiscard]] TukeyFence tukey_fence(std::span<const double> values);

/// Drops the named columns, optionally log-transforms the target, then
/// removes rows with at least `tukey_max_outliers` features outside their
/// Tukey fences (fences computed once on the retained columns; 0 disables
/// the outlier step).
[[nodiscard]] Dataset preprocess_tabular(const Dataset& raw,
                                         const std::vector<std::string>& drop_columns,
                                         bool log_target, std::size_t tukey_max_outliers);

}  // namespace mpvar
