#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpvar/random.hpp"
#include "mpvar/stats_core.hpp"

namespace mpvar {

enum class DistributionFamily { normal, student_t };

/// Zero-mean sampling distribution parameterised by its standard deviation;
/// Student-t draws are rescaled by sqrt((df - 2) / df) so that `sd` is the
/// true standard deviation (requires df > 2).
struct DistributionSpec {
  DistributionFamily family = DistributionFamily::normal;
  double sd = 1.0;
  double df = 3.0;

  [[nodiscard]] double draw(Rng& rng) const;
  void validate() const;
};

/// "normal", "normal:2" (sd 2), "t:3" (df 3, sd 1), "t:3:1.5" (df 3, sd 1.5).
[[nodiscard]] DistributionSpec parse_distribution(std::string_view text);
[[nodiscard]] std::string to_string(const DistributionSpec& spec);

enum class VarianceTest { classic_mp, hc4_mp };

[[nodiscard]] std::string_view to_string(VarianceTest test) noexcept;
[[nodiscard]] VarianceTest parse_variance_test(std::string_view text);
[[nodiscard]] TestResult run_variance_test(VarianceTest test, const PairedSample& sample,
                                           Alternative alternative = Alternative::two_sided);

struct McConfig {
  std::size_t replications = 10000;
  std::size_t sample_size = 1000;
  double alpha = 0.05;
  /// Distribution of the first sample (x) and of the second sample (y).
  DistributionSpec null_generator;
  DistributionSpec alt_generator;
  VarianceTest test = VarianceTest::hc4_mp;
  Alternative alternative = Alternative::two_sided;
  std::uint64_t base_seed = 0;
  bool keep_p_values = false;
  /// Worker threads; results do not depend on this.
  std::size_t workers = 1;

  void validate() const;
};

struct McReport {
  double rejection_rate = 0.0;
  std::size_t replications = 0;
  std::size_t rejections = 0;
  std::size_t failures = 0;
  std::pair<double, double> wilson_interval{0.0, 1.0};
  /// p-values by replication index (NaN for failed replications); only
  /// filled when keep_p_values is set.
  std::vector<double> p_values;
};

/// 95% Wilson score interval for `successes` out of `trials`.
[[nodiscard]] std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials,
                                                        double z = 1.959963984540054);

/// Replication r draws both samples from Rng(base_seed + r) and rejects when
/// p < alpha. Failed replications are counted, never silently dropped.
[[nodiscard]] McReport estimate_rejection_rate(const McConfig& cfg);

/// One estimate per ratio with the second sample's variance multiplied by it.
[[nodiscard]] std::vector<McReport> power_curve(const McConfig& cfg,
                                                std::span<const double> variance_ratios);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against Uniform(0, 1), asymptotic
/// p-value with Stephens' small-sample correction.
[[nodiscard]] KsResult ks_uniform_test(std::span<const double> values);

}  // namespace mpvar
