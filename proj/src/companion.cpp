#include "mpvar/companion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "mpvar/error.hpp"
#include "mpvar/random.hpp"
#include "mpvar/special.hpp"
#include "numeric_checks.hpp"

namespace mpvar {

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.empty()) {
    throw Error(ErrorKind::SampleTooSmall, "empirical distribution needs at least one value");
  }
  detail::require_finite(values_, "sample");
  std::sort(values_.begin(), values_.end());
}

TestResult bias_test(std::span<const double> residuals) {
  detail::require_min_size(residuals, 3);
  detail::require_finite(residuals, "residuals");
  if (detail::is_constant(residuals)) {
    throw Error(ErrorKind::DegenerateSample, "residuals are constant");
  }
  const double n = static_cast<double>(residuals.size());
  const double m = detail::mean(residuals);
  const double sd = std::sqrt(detail::sample_variance(residuals));
  TestResult result;
  result.method = Method::t_bias;
  result.alternative = Alternative::two_sided;
  result.statistic = m / (sd / std::sqrt(n));
  result.df = n - 1.0;
  result.p_value = t_p_value(result.statistic, result.df, Alternative::two_sided);
  return result;
}

TestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  detail::require_same_length(a, b);
  detail::require_finite(a, "a");
  detail::require_finite(b, "b");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  if (detail::is_constant(diff, detail::max_abs(a) + detail::max_abs(b))) {
    throw Error(ErrorKind::DegenerateSample, "paired differences are constant");
  }
  return bias_test(diff);
}

double wasserstein1(const EmpiricalDistribution& f, const EmpiricalDistribution& g) {
  if (f.size() != g.size()) {
    throw Error(ErrorKind::LengthMismatch,
                "W1 over order statistics needs equal sample sizes (" +
                    std::to_string(f.size()) + " vs " + std::to_string(g.size()) + ")");
  }
  const auto fv = f.values();
  const auto gv = g.values();
  double total = 0.0;
  for (std::size_t i = 0; i < fv.size(); ++i) total += std::fabs(fv[i] - gv[i]);
  return total / static_cast<double>(fv.size());
}

double wasserstein_to_delta(std::span<const double> residuals) {
  if (residuals.empty()) {
    throw Error(ErrorKind::SampleTooSmall, "need at least one residual");
  }
  const EmpiricalDistribution sample(std::vector<double>(residuals.begin(), residuals.end()));
  const EmpiricalDistribution zeros(std::vector<double>(residuals.size(), 0.0));
  return wasserstein1(sample, zeros);
}

namespace {

// Doubly centred distance matrix, row-major n x n.
std::vector<double> centered_distances(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> d(n * n);
  std::vector<double> row_mean(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dist = std::fabs(x[i] - x[j]);
      d[i * n + j] = dist;
      row_mean[i] += dist;
    }
    grand += row_mean[i];
    row_mean[i] /= static_cast<double>(n);
  }
  grand /= static_cast<double>(n * n);
  // Symmetric, so column means equal row means.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d[i * n + j] += grand - row_mean[i] - row_mean[j];
    }
  }
  return d;
}

// sum_ij A_ij B_{perm(i) perm(j)} / n^2
double permuted_cross_moment(const std::vector<double>& a, const std::vector<double>& b,
                             std::span<const std::size_t> perm) {
  const std::size_t n = perm.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* a_row = &a[i * n];
    const double* b_row = &b[perm[i] * n];
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += a_row[j] * b_row[perm[j]];
    total += row;
  }
  return total / static_cast<double>(n * n);
}

double self_moment(const std::vector<double>& a) {
  double total = 0.0;
  for (double value : a) total += value * value;
  const double n2 = static_cast<double>(a.size());
  return total / n2;
}

struct DcorPrepared {
  std::vector<double> a;
  std::vector<double> b;
  double norm = 0.0;  // sqrt(dVar^2(x) dVar^2(y))
};

DcorPrepared prepare_dcor(std::span<const double> x, std::span<const double> y) {
  detail::require_same_length(x, y);
  detail::require_min_size(x, 4);
  detail::require_finite(x, "x");
  detail::require_finite(y, "y");
  if (detail::is_constant(x) || detail::is_constant(y)) {
    throw Error(ErrorKind::DegenerateSample, "distance correlation of a constant vector");
  }
  DcorPrepared prepared;
  prepared.a = centered_distances(x);
  prepared.b = centered_distances(y);
  prepared.norm = std::sqrt(self_moment(prepared.a) * self_moment(prepared.b));
  return prepared;
}

double dcor_from_moment(double cross, double norm) {
  return std::clamp(std::sqrt(std::max(0.0, cross) / norm), 0.0, 1.0);
}

}  // namespace

double distance_correlation(std::span<const double> x, std::span<const double> y) {
  const DcorPrepared prepared = prepare_dcor(x, y);
  std::vector<std::size_t> identity(x.size());
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  return dcor_from_moment(permuted_cross_moment(prepared.a, prepared.b, identity),
                          prepared.norm);
}

TestResult dcor_perm_test(std::span<const double> x, std::span<const double> y,
                          std::size_t n_perm, std::uint64_t seed) {
  if (n_perm < 99) {
    throw Error(ErrorKind::InvalidArgument, "dcor_perm_test needs at least 99 permutations");
  }
  const DcorPrepared prepared = prepare_dcor(x, y);
  std::vector<std::size_t> perm(x.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const double observed =
      dcor_from_moment(permuted_cross_moment(prepared.a, prepared.b, perm), prepared.norm);

  std::size_t at_least = 0;
  for (std::size_t k = 0; k < n_perm; ++k) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed, k);
    rng.shuffle(std::span<std::size_t>(perm));
    const double permuted =
        dcor_from_moment(permuted_cross_moment(prepared.a, prepared.b, perm), prepared.norm);
    if (permuted >= observed) ++at_least;
  }
  TestResult result;
  result.method = Method::dcor_perm;
  result.alternative = Alternative::greater;
  result.statistic = observed;
  result.df = 0.0;
  result.p_value =
      static_cast<double>(1 + at_least) / static_cast<double>(1 + n_perm);
  return result;
}

TestResult nested_f_test(double rss_small, std::size_t p_small, double rss_big,
                         std::size_t p_big, std::size_t n) {
  if (p_small >= p_big) {
    throw Error(ErrorKind::InvalidNesting, "nested model must have fewer parameters (" +
                                               std::to_string(p_small) +
                                               " >= " + std::to_string(p_big) + ")");
  }
  if (p_big >= n) {
    throw Error(ErrorKind::InvalidNesting, "larger model leaves no residual degrees of freedom");
  }
  if (!std::isfinite(rss_small) || !std::isfinite(rss_big) || !(rss_big > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "residual sums of squares must be finite, rss_big > 0");
  }
  const double tolerance = 1e-10 * std::max(1.0, rss_small);
  if (rss_big > rss_small + tolerance) {
    throw Error(ErrorKind::NegativeImprovement,
                "larger model fits worse than the nested one; check the fitting routine");
  }
  const double df1 = static_cast<double>(p_big - p_small);
  const double df2 = static_cast<double>(n - p_big);
  TestResult result;
  result.method = Method::f_nested;
  result.alternative = Alternative::greater;
  result.statistic = std::max(0.0, (rss_small - rss_big) / df1) / (rss_big / df2);
  result.df = df1;
  result.df2 = df2;
  result.p_value = f_sf(result.statistic, df1, df2);
  return result;
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) {
    throw Error(ErrorKind::SampleTooSmall, "quantile of an empty sample");
  }
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double silverman_bandwidth(std::span<const double> sample) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(detail::sample_variance(sample));
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(sample.size()), -0.2);
}

DensityCurve kde_density(std::span<const double> sample, std::size_t grid_size) {
  detail::require_min_size(sample, 2);
  detail::require_finite(sample, "sample");
  if (detail::is_constant(sample)) {
    throw Error(ErrorKind::DegenerateSample, "KDE of a constant sample");
  }
  if (grid_size < 2) {
    throw Error(ErrorKind::InvalidArgument, "KDE grid needs at least two points");
  }
  DensityCurve curve;
  curve.bandwidth = silverman_bandwidth(sample);
  const auto [lo_it, hi_it] = std::minmax_element(sample.begin(), sample.end());
  const double lo = *lo_it - 3.0 * curve.bandwidth;
  const double hi = *hi_it + 3.0 * curve.bandwidth;
  const double step = (hi - lo) / static_cast<double>(grid_size - 1);
  const double norm = 1.0 / (static_cast<double>(sample.size()) * curve.bandwidth *
                             std::sqrt(2.0 * std::numbers::pi));
  curve.grid.resize(grid_size);
  curve.density.resize(grid_size);
  for (std::size_t g = 0; g < grid_size; ++g) {
    const double at = lo + step * static_cast<double>(g);
    double sum = 0.0;
    for (double value : sample) {
      const double z = (at - value) / curve.bandwidth;
      sum += std::exp(-0.5 * z * z);
    }
    curve.grid[g] = at;
    curve.density[g] = sum * norm;
  }
  return curve;
}

}  // namespace mpvar
