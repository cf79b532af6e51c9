#include "mpvar/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "mpvar/error.hpp"

namespace mpvar {

double DistributionSpec::draw(Rng& rng) const {
  if (family == DistributionFamily::normal) return sd * rng.normal();
  return sd * std::sqrt((df - 2.0) / df) * rng.student_t(df);
}

void DistributionSpec::validate() const {
  // sd = 0 (a point mass) is allowed; it makes every replication degenerate.
  if (!(sd >= 0.0) || !std::isfinite(sd)) {
    throw Error(ErrorKind::InvalidArgument, "distribution sd must be nonnegative");
  }
  if (family == DistributionFamily::student_t && !(df > 2.0)) {
    throw Error(ErrorKind::InvalidDf, "variance-matched t draws need df > 2");
  }
}

DistributionSpec parse_distribution(std::string_view text) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  parts.push_back(current);
  auto number = [&](const std::string& token) {
    try {
      std::size_t used = 0;
      const double value = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      return value;
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument,
                  "bad number '" + token + "' in distribution '" + std::string(text) + "'");
    }
  };
  DistributionSpec spec;
  if (parts[0] == "normal" && parts.size() <= 2) {
    spec.family = DistributionFamily::normal;
    if (parts.size() == 2) spec.sd = number(parts[1]);
  } else if ((parts[0] == "t" || parts[0] == "student_t") && parts.size() >= 2 &&
             parts.size() <= 3) {
    spec.family = DistributionFamily::student_t;
    spec.df = number(parts[1]);
    if (parts.size() == 3) spec.sd = number(parts[2]);
  } else {
    throw Error(ErrorKind::InvalidArgument,
                "unknown distribution '" + std::string(text) + "' (use normal[:sd] or t:df[:sd])");
  }
  spec.validate();
  return spec;
}

std::string to_string(const DistributionSpec& spec) {
  if (spec.family == DistributionFamily::normal) return fmt::format("normal:{}", spec.sd);
  return fmt::format("t:{}:{}", spec.df, spec.sd);
}

std::string_view to_string(VarianceTest test) noexcept {
  return test == VarianceTest::classic_mp ? "classic" : "hc4";
}

VarianceTest parse_variance_test(std::string_view text) {
  if (text == "classic" || text == "classic_mp") return VarianceTest::classic_mp;
  if (text == "hc4" || text == "hc4_mp") return VarianceTest::hc4_mp;
  throw Error(ErrorKind::InvalidArgument, "unknown variance test '" + std::string(text) + "'");
}

TestResult run_variance_test(VarianceTest test, const PairedSample& sample,
                             Alternative alternative) {
  return test == VarianceTest::classic_mp ? classic_mp_test(sample, alternative)
                                          : mp_hc4_test(sample, alternative);
}

void McConfig::validate() const {
  if (replications < 1) {
    throw Error(ErrorKind::InvalidArgument, "need at least one replication");
  }
  if (sample_size < 3) {
    throw Error(ErrorKind::InvalidArgument, "sample size must be at least 3");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, fmt::format("alpha = {} is not in (0, 1)", alpha));
  }
  null_generator.validate();
  alt_generator.validate();
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

McReport estimate_rejection_rate(const McConfig& cfg) {
  cfg.validate();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> p_values(cfg.replications, nan);

  auto replicate = [&](std::size_t r) {
    Rng rng(cfg.base_seed + r);
    std::vector<double> x(cfg.sample_size);
    std::vector<double> y(cfg.sample_size);
    for (auto& value : x) value = cfg.null_generator.draw(rng);
    for (auto& value : y) value = cfg.alt_generator.draw(rng);
    try {
      p_values[r] =
          run_variance_test(cfg.test, PairedSample(std::move(x), std::move(y)), cfg.alternative)
              .p_value;
    } catch (const Error&) {
      p_values[r] = nan;
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(cfg.workers, 1, cfg.replications);
  if (workers == 1) {
    for (std::size_t r = 0; r < cfg.replications; ++r) replicate(r);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < cfg.replications; r += workers) replicate(r);
      });
    }
  }

  McReport report;
  for (double p : p_values) {
    if (std::isnan(p)) {
      ++report.failures;
    } else {
      ++report.replications;
      if (p < cfg.alpha) ++report.rejections;
    }
  }
  if (report.replications > 0) {
    report.rejection_rate =
        static_cast<double>(report.rejections) / static_cast<double>(report.replications);
  }
  report.wilson_interval = wilson_interval(report.rejections, report.replications);
  if (cfg.keep_p_values) report.p_values = std::move(p_values);
  return report;
}

std::vector<McReport> power_curve(const McConfig& cfg, std::span<const double> variance_ratios) {
  std::vector<McReport> curve;
  for (double ratio : variance_ratios) {
    if (!(ratio > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "variance ratios must be positive");
    }
    McConfig point = cfg;
    point.alt_generator.sd = cfg.alt_generator.sd * std::sqrt(ratio);
    curve.push_back(estimate_rejection_rate(point));
  }
  return curve;
}

KsResult ks_uniform_test(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorKind::SampleTooSmall, "KS test needs at least one value");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double u = std::clamp(sorted[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - u, u - static_cast<double>(i) / n});
  }
  const double root_n = std::sqrt(n);
  const double lambda = (root_n + 0.12 + 0.11 / root_n) * d;
  // Q_KS(lambda) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2)
  double q = 0.0;
  if (lambda < 0.2) {
    q = 1.0;
  } else {
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
      const double term = sign * 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
      q += term;
      if (std::fabs(term) < 1e-16) break;
      sign = -sign;
    }
  }
  return {d, std::clamp(q, 0.0, 1.0)};
}

}  // namespace mpvar
