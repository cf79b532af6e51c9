#pragma once

namespace mpvar {

/// Regularized incomplete beta I_x(a, b), evaluated by the modified Lentz
/// continued fraction on whichever side of the mode converges fastest.
/// `y` must equal 1 - x; passing it separately avoids cancellation when the
/// caller can form it exactly (t and F tails do).
[[nodiscard]] double incomplete_beta(double a, double b, double x, double y);
[[nodiscard]] double incomplete_beta(double a, double b, double x);

/// Student-t CDF P(T_df <= t). Throws InvalidDf for df <= 0.
[[nodiscard]] double student_t_cdf(double t, double df);
/// Upper tail P(T_df > t), accurate deep into the tail.
[[nodiscard]] double student_t_sf(double t, double df);

/// Snedecor F CDF and upper tail with (d1, d2) degrees of freedom.
[[nodiscard]] double f_cdf(double f, double d1, double d2);
[[nodiscard]] double f_sf(double f, double d1, double d2);

[[nodiscard]] double normal_cdf(double z);

}  // namespace mpvar
