#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mpvar {

enum class Alternative { two_sided, less, greater };
enum class Method { classic_mp, hc4_mp, t_bias, dcor_perm, f_nested };

[[nodiscard]] std::string_view to_string(Alternative alternative) noexcept;
[[nodiscard]] std::string_view to_string(Method method) noexcept;
[[nodiscard]] Alternative parse_alternative(std::string_view text);

/// Outcome of any hypothesis test in the library.
struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  /// Denominator degrees of freedom, set only for F tests.
  std::optional<double> df2;
  double p_value = 1.0;
  Alternative alternative = Alternative::two_sided;
  Method method = Method::classic_mp;
  /// Set when the sample trivially satisfies the null (e.g. identical
  /// residual vectors) and the p-value was assigned rather than computed.
  bool degenerate = false;
};

/// p-value for a statistic whose null distribution is Student-t with `df`
/// degrees of freedom. `greater` rejects for large positive statistics.
[[nodiscard]] double t_p_value(double statistic, double df, Alternative alternative);

/// Residuals of two models on the same n test points.
/// Invariants: equal length, n >= 3, every entry finite.
class PairedSample {
 public:
  PairedSample(std::vector<double> x, std::vector<double> y);

  [[nodiscard]] std::span<const double> x() const noexcept { return x_; }
  [[nodiscard]] std::span<const double> y() const noexcept { return y_; }
  [[nodiscard]] std::size_t size() const noexcept { return x_.size(); }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
};

struct UvPair {
  std::vector<double> u;  // x + y
  std::vector<double> v;  // x - y
};

/// Closed-form 2x2 matrix; the Morgan-Pitman regression always has exactly
/// two parameters (intercept, slope).
struct Matrix2 {
  double a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;

  [[nodiscard]] double det() const noexcept { return a00 * a11 - a01 * a10; }
};

struct OlsFit {
  std::array<double, 2> beta_hat{};  // (intercept, slope)
  std::vector<double> residuals;
  Matrix2 c_matrix;                  // (M^t M)^-1, M = [1 | u]
};

struct Hc4Fit {
  std::array<double, 2> beta_hat{};
  std::vector<double> residuals;
  std::vector<double> leverages;
  double mean_leverage = 0.0;
  std::vector<double> discounts;
  Matrix2 s_matrix;  // HC4 covariance of beta_hat
};

/// Empirical Pearson correlation (two-pass). Requires n >= 3 and both inputs
/// non-constant.
[[nodiscard]] double pearson_corr(std::span<const double> x, std::span<const double> y);

[[nodiscard]] UvPair uv_transform(const PairedSample& sample);

/// T = rho * sqrt((n - 2) / (1 - rho^2)).
[[nodiscard]] double mp_statistic(double rho_hat, std::size_t n);

/// Classic Morgan-Pitman test; t reference with n - 2 df. `greater` is the
/// alternative var(x) > var(y).
[[nodiscard]] TestResult classic_mp_test(const PairedSample& sample,
                                         Alternative alternative = Alternative::two_sided);

/// OLS regression of v on [1 | u].
[[nodiscard]] OlsFit ols_fit(std::span<const double> u, std::span<const double> v);

/// OLS fit of v on u plus the HC4 sandwich covariance
///   S = C M^t diag(e_i^2 (1 - h_i)^-d_i) M C,   d_i = min(4, h_i / mean(h)).
/// Throws LeverageOne when some h_i >= 1 - 1e-12.
[[nodiscard]] Hc4Fit hc4_covariance(std::span<const double> u, std::span<const double> v);

/// Sandwich covariance with caller-supplied discount exponents. Zero
/// exponents give White's HC0 estimator.
[[nodiscard]] Matrix2 sandwich_covariance(std::span<const double> u,
                                          std::span<const double> residuals,
                                          std::span<const double> leverages,
                                          std::span<const double> discounts);

/// HC4-robust Morgan-Pitman test: t = beta_1 / sqrt(S_22) with n - 2 df.
/// A constant V (identical residuals up to a shift) yields p = 1 and
/// `degenerate = true` instead of an error.
[[nodiscard]] TestResult mp_hc4_test(const PairedSample& sample,
                                     Alternative alternative = Alternative::two_sided);

}  // namespace mpvar
