#include "mpvar/special.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mpvar/error.hpp"

namespace mpvar {
namespace {

constexpr int kMaxIterations = 20000;
constexpr double kEpsilon = 1e-16;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a,b) (Numerical Recipes betacf, modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEpsilon) return h;
  }
  return h;
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

void check_df(double df, const char* name) {
  if (!(df > 0.0) || !std::isfinite(df)) {
    throw Error(ErrorKind::InvalidDf, std::string(name) + " must be positive and finite");
  }
}

}  // namespace

double incomplete_beta(double a, double b, double x, double y) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "incomplete_beta requires a > 0 and b > 0");
  }
  if (std::isnan(x) || x < 0.0 || x > 1.0) {
    throw Error(ErrorKind::InvalidArgument, "incomplete_beta requires x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log(y) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, y) / b;
}

double incomplete_beta(double a, double b, double x) {
  return incomplete_beta(a, b, x, 1.0 - x);
}

double student_t_sf(double t, double df) {
  check_df(df, "df");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double t2 = t * t;
  // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2)
  const double x = df / (df + t2);
  const double y = t2 / (df + t2);
  const double two_tail = incomplete_beta(0.5 * df, 0.5, x, y);
  return t > 0 ? 0.5 * two_tail : 1.0 - 0.5 * two_tail;
}

double student_t_cdf(double t, double df) {
  check_df(df, "df");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  return student_t_sf(-t, df);
}

double f_sf(double f, double d1, double d2) {
  check_df(d1, "numerator df");
  check_df(d2, "denominator df");
  if (std::isnan(f)) return std::numeric_limits<double>::quiet_NaN();
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  const double denom = d2 + d1 * f;
  return incomplete_beta(0.5 * d2, 0.5 * d1, d2 / denom, d1 * f / denom);
}

double f_cdf(double f, double d1, double d2) {
  check_df(d1, "numerator df");
  check_df(d2, "denominator df");
  if (std::isnan(f)) return std::numeric_limits<double>::quiet_NaN();
  if (f <= 0.0) return 0.0;
  if (std::isinf(f)) return 1.0;
  const double denom = d2 + d1 * f;
  return incomplete_beta(0.5 * d1, 0.5 * d2, d1 * f / denom, d2 / denom);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace mpvar
