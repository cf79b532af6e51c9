#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mpvar/stats_core.hpp"

namespace mpvar {

/// Order statistics of a sample. Invariants: sorted ascending, finite, n >= 1.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> values);

  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
};

struct DensityCurve {
  std::vector<double> grid;     // strictly increasing
  std::vector<double> density;  // >= 0
  double bandwidth = 0.0;
};

/// One-sample two-sided t-test of zero mean (df = n - 1).
[[nodiscard]] TestResult bias_test(std::span<const double> residuals);

/// bias_test on the elementwise difference a - b.
[[nodiscard]] TestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// W1 = (1/n) sum |F_(i) - G_(i)| for equal-size samples.
[[nodiscard]] double wasserstein1(const EmpiricalDistribution& f, const EmpiricalDistribution& g);

/// W1 against the point mass at zero, i.e. the mean absolute residual.
[[nodiscard]] double wasserstein_to_delta(std::span<const double> residuals);

/// Distance correlation from doubly-centred |a - b| distance matrices (V-statistic).
[[nodiscard]] double distance_correlation(std::span<const double> x, std::span<const double> y);

/// Permutation test of independence on distance correlation. Only y is
/// permuted; permutation j draws from the stream derived from (seed, j), so
/// the result is a pure function of the arguments.
/// p = (1 + #{dCor_perm >= dCor_obs}) / (1 + n_perm).
[[nodiscard]] TestResult dcor_perm_test(std::span<const double> x, std::span<const double> y,
                                        std::size_t n_perm = 999, std::uint64_t seed = 0);

/// F test comparing nested least-squares fits with p_small < p_big parameters.
[[nodiscard]] TestResult nested_f_test(double rss_small, std::size_t p_small, double rss_big,
                                       std::size_t p_big, std::size_t n);

/// Silverman's rule of thumb, 0.9 min(sd, IQR / 1.34) n^(-1/5). Falls back to
/// sd when the IQR is zero.
[[nodiscard]] double silverman_bandwidth(std::span<const double> sample);

/// Gaussian KDE evaluated on `grid_size` points over [min - 3 bw, max + 3 bw].
[[nodiscard]] DensityCurve kde_density(std::span<const double> sample, std::size_t grid_size = 512);

/// Linearly interpolated quantile of sorted data (type 7).
[[nodiscard]] double quantile_sorted(std::span<const double> sorted, double prob);

}  // namespace mpvar
