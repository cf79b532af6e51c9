#include "mpvar/stats_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mpvar/error.hpp"
#include "mpvar/special.hpp"
#include "numeric_checks.hpp"

namespace mpvar {

using detail::is_constant;
using detail::max_abs;

std::string_view to_string(Alternative alternative) noexcept {
  switch (alternative) {
    case Alternative::two_sided: return "two_sided";
    case Alternative::less: return "less";
    case Alternative::greater: return "greater";
  }
  return "two_sided";
}

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::classic_mp: return "classic_mp";
    case Method::hc4_mp: return "hc4_mp";
    case Method::t_bias: return "t_bias";
    case Method::dcor_perm: return "dcor_perm";
    case Method::f_nested: return "f_nested";
  }
  return "classic_mp";
}

Alternative parse_alternative(std::string_view text) {
  if (text == "two_sided" || text == "two-sided") return Alternative::two_sided;
  if (text == "less") return Alternative::less;
  if (text == "greater") return Alternative::greater;
  throw Error(ErrorKind::InvalidArgument, "unknown alternative '" + std::string(text) + "'");
}

double t_p_value(double statistic, double df, Alternative alternative) {
  if (std::isnan(statistic)) return 1.0;
  switch (alternative) {
    case Alternative::greater: return student_t_sf(statistic, df);
    case Alternative::less: return student_t_cdf(statistic, df);
    case Alternative::two_sided: break;
  }
  return std::min(1.0, 2.0 * student_t_sf(std::fabs(statistic), df));
}

PairedSample::PairedSample(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  detail::require_same_length(x_, y_);
  detail::require_min_size(x_, 3);
  detail::require_finite(x_, "x");
  detail::require_finite(y_, "y");
}

double pearson_corr(std::span<const double> x, std::span<const double> y) {
  detail::require_same_length(x, y);
  detail::require_min_size(x, 3);
  detail::require_finite(x, "x");
  detail::require_finite(y, "y");
  if (is_constant(x) || is_constant(y)) {
    throw Error(ErrorKind::DegenerateSample, "correlation of a constant vector is undefined");
  }
  const double mx = detail::mean(x);
  const double my = detail::mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

UvPair uv_transform(const PairedSample& sample) {
  UvPair uv;
  const auto x = sample.x();
  const auto y = sample.y();
  uv.u.resize(x.size());
  uv.v.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    uv.u[i] = x[i] + y[i];
    uv.v[i] = x[i] - y[i];
  }
  return uv;
}

double mp_statistic(double rho_hat, std::size_t n) {
  if (n < 3) {
    throw Error(ErrorKind::SampleTooSmall, "Morgan-Pitman statistic needs n >= 3");
  }
  if (!(std::fabs(rho_hat) < 1.0)) {
    throw Error(ErrorKind::DegenerateCorrelation, "|rho| = 1 leaves no residual variation");
  }
  return rho_hat * std::sqrt(static_cast<double>(n - 2) / (1.0 - rho_hat * rho_hat));
}

namespace {

// Scale of the original residuals, used to decide when U or V is constant
// up to rounding of x +/- y.
double uv_scale(const PairedSample& sample) {
  return max_abs(sample.x()) + max_abs(sample.y());
}

}  // namespace

TestResult classic_mp_test(const PairedSample& sample, Alternative alternative) {
  const UvPair uv = uv_transform(sample);
  const double scale = uv_scale(sample);
  if (is_constant(uv.u, scale)) {
    throw Error(ErrorKind::DegenerateSample, "U = x + y is constant");
  }
  if (is_constant(uv.v, scale)) {
    throw Error(ErrorKind::DegenerateSample, "V = x - y is constant");
  }
  const double rho = pearson_corr(uv.u, uv.v);
  TestResult result;
  result.method = Method::classic_mp;
  result.alternative = alternative;
  result.statistic = mp_statistic(rho, sample.size());
  result.df = static_cast<double>(sample.size() - 2);
  result.p_value = t_p_value(result.statistic, result.df, alternative);
  return result;
}

namespace {

struct CenteredDesign {
  double n = 0.0;
  double u_mean = 0.0;
  double sxx = 0.0;  // sum (u_i - u_mean)^2
};

CenteredDesign centered_design(std::span<const double> u) {
  if (u.size() < 3) {
    throw Error(ErrorKind::SampleTooSmall, "regression needs n >= 3");
  }
  if (std::all_of(u.begin(), u.end(), [&](double value) { return value == u[0]; })) {
    throw Error(ErrorKind::SingularDesign, "regressor is constant");
  }
  CenteredDesign design;
  design.n = static_cast<double>(u.size());
  design.u_mean = detail::mean(u);
  for (double value : u) design.sxx += (value - design.u_mean) * (value - design.u_mean);
  // det(M^t M) = n * Sxx
  if (!(design.n * design.sxx > 1e-300)) {
    throw Error(ErrorKind::SingularDesign, "M^t M is numerically singular");
  }
  return design;
}

}  // namespace

OlsFit ols_fit(std::span<const double> u, std::span<const double> v) {
  detail::require_same_length(u, v);
  detail::require_finite(u, "u");
  detail::require_finite(v, "v");
  const CenteredDesign design = centered_design(u);
  const double v_mean = detail::mean(v);
  double sxy = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) sxy += (u[i] - design.u_mean) * (v[i] - v_mean);

  OlsFit fit;
  const double slope = sxy / design.sxx;
  fit.beta_hat = {v_mean - slope * design.u_mean, slope};
  fit.residuals.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    fit.residuals[i] = (v[i] - v_mean) - slope * (u[i] - design.u_mean);
  }
  // Closed-form (M^t M)^-1 written in centered sums.
  const double inv_sxx = 1.0 / design.sxx;
  fit.c_matrix.a00 = 1.0 / design.n + design.u_mean * design.u_mean * inv_sxx;
  fit.c_matrix.a01 = -design.u_mean * inv_sxx;
  fit.c_matrix.a10 = fit.c_matrix.a01;
  fit.c_matrix.a11 = inv_sxx;
  return fit;
}

Matrix2 sandwich_covariance(std::span<const double> u, std::span<const double> residuals,
                            std::span<const double> leverages,
                            std::span<const double> discounts) {
  const CenteredDesign design = centered_design(u);
  // Column i of C M^t is r_i = (1/n - u_mean (u_i - u_mean)/Sxx, (u_i - u_mean)/Sxx),
  // so S = sum_i omega_i r_i r_i^t.
  Matrix2 s;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double centered = (u[i] - design.u_mean) / design.sxx;
    const double r0 = 1.0 / design.n - design.u_mean * centered;
    const double r1 = centered;
    const double omega =
        residuals[i] * residuals[i] * std::pow(1.0 - leverages[i], -discounts[i]);
    s.a00 += omega * r0 * r0;
    s.a01 += omega * r0 * r1;
    s.a11 += omega * r1 * r1;
  }
  s.a10 = s.a01;
  return s;
}

Hc4Fit hc4_covariance(std::span<const double> u, std::span<const double> v) {
  OlsFit ols = ols_fit(u, v);
  const CenteredDesign design = centered_design(u);

  Hc4Fit fit;
  fit.beta_hat = ols.beta_hat;
  fit.residuals = std::move(ols.residuals);
  fit.leverages.resize(u.size());
  double leverage_sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double centered = u[i] - design.u_mean;
    const double h = 1.0 / design.n + centered * centered / design.sxx;
    if (h >= 1.0 - 1e-12) {
      throw Error(ErrorKind::LeverageOne,
                  "observation " + std::to_string(i) + " has leverage " + std::to_string(h));
    }
    fit.leverages[i] = h;
    leverage_sum += h;
  }
  fit.mean_leverage = leverage_sum / design.n;
  fit.discounts.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    fit.discounts[i] = std::min(4.0, fit.leverages[i] / fit.mean_leverage);
  }
  fit.s_matrix = sandwich_covariance(u, fit.residuals, fit.leverages, fit.discounts);
  return fit;
}

TestResult mp_hc4_test(const PairedSample& sample, Alternative alternative) {
  const UvPair uv = uv_transform(sample);
  const double scale = uv_scale(sample);
  TestResult result;
  result.method = Method::hc4_mp;
  result.alternative = alternative;
  result.df = static_cast<double>(sample.size() - 2);
  if (is_constant(uv.u, scale)) {
    throw Error(ErrorKind::SingularDesign, "U = x + y is constant");
  }
  if (is_constant(uv.v, scale)) {
    result.statistic = 0.0;
    result.p_value = 1.0;
    result.degenerate = true;
    return result;
  }
  const Hc4Fit fit = hc4_covariance(uv.u, uv.v);
  const double slope = fit.beta_hat[1];
  const double se2 = fit.s_matrix.a11;
  if (se2 > 0.0) {
    result.statistic = slope / std::sqrt(se2);
  } else if (slope == 0.0) {
    result.statistic = 0.0;
  } else {
    // V exactly linear in U: infinite evidence in the direction of the slope.
    result.statistic = std::copysign(std::numeric_limits<double>::infinity(), slope);
  }
  result.p_value = t_p_value(result.statistic, result.df, alternative);
  return result;
}

}  // namespace mpvar
