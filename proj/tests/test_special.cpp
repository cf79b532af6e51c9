#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "mpvar/error.hpp"
#include "mpvar/special.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("t cdf reference values") {
  CHECK(mpvar::student_t_cdf(0.0, 5.0) == 0.5);
  // Cauchy: 1/2 + arctan(1)/pi.
  CHECK_THAT(mpvar::student_t_cdf(1.0, 1.0), WithinAbs(0.75, 1e-14));
  CHECK_THAT(mpvar::student_t_cdf(1.96, 10000.0), WithinAbs(mpvar::normal_cdf(1.96), 1e-4));
  CHECK_THAT(mpvar::student_t_cdf(1.96, 10000.0), WithinAbs(0.975, 1e-3));
}

TEST_CASE("t cdf matches the df = 2 closed form") {
  for (double t : {-30.0, -3.0, -0.4, 0.0, 0.7, 2.5, 12.0}) {
    const double exact = 0.5 + t / (2.0 * std::sqrt(2.0 + t * t));
    CHECK_THAT(mpvar::student_t_cdf(t, 2.0), WithinAbs(exact, 1e-14));
  }
}

TEST_CASE("t cdf agrees with Boost.Math") {
  for (double df : {1.0, 2.5, 7.0, 30.0, 998.0, 1e4}) {
    const boost::math::students_t_distribution<double> dist(df);
    for (double t : {-8.0, -2.0, -0.5, 0.1, 1.0, 3.3, 6.0}) {
      CHECK_THAT(mpvar::student_t_cdf(t, df), WithinAbs(boost::math::cdf(dist, t), 1e-12));
      const double tail = boost::math::cdf(boost::math::complement(dist, t));
      CHECK_THAT(mpvar::student_t_sf(t, df), WithinRel(tail, 1e-9));
    }
  }
}

TEST_CASE("far tail keeps relative accuracy") {
  const boost::math::students_t_distribution<double> dist(998.0);
  const double tail = boost::math::cdf(boost::math::complement(dist, 12.0));
  CHECK(tail < 1e-29);
  CHECK_THAT(mpvar::student_t_sf(12.0, 998.0), WithinRel(tail, 1e-8));
}

TEST_CASE("t cdf symmetry and monotonicity") {
  for (double df : {1.0, 3.0, 50.0}) {
    double previous = 0.0;
    for (double t = -10.0; t <= 10.0; t += 0.37) {
      const double c = mpvar::student_t_cdf(t, df);
      CHECK_THAT(c + mpvar::student_t_cdf(-t, df), WithinAbs(1.0, 1e-12));
      CHECK(c >= previous);
      previous = c;
    }
  }
}

TEST_CASE("incomplete beta agrees with Boost.Math") {
  for (double a : {0.5, 1.0, 3.0, 40.0}) {
    for (double b : {0.5, 2.0, 15.0}) {
      for (double x : {0.0, 0.01, 0.3, 0.5, 0.9, 1.0}) {
        CHECK_THAT(mpvar::incomplete_beta(a, b, x), WithinAbs(boost::math::ibeta(a, b, x), 1e-13));
      }
    }
  }
}

TEST_CASE("F distribution agrees with Boost.Math") {
  for (auto [d1, d2] : {std::pair{1.0, 100.0}, {3.0, 994.0}, {4.0, 7.0}}) {
    const boost::math::fisher_f_distribution<double> dist(d1, d2);
    for (double f : {0.0, 0.2, 1.0, 2.5, 9.0, 100.0}) {
      CHECK_THAT(mpvar::f_cdf(f, d1, d2), WithinAbs(boost::math::cdf(dist, f), 1e-12));
    }
  }
}

TEST_CASE("invalid degrees of freedom") {
  CHECK_THROWS_AS(mpvar::student_t_cdf(1.0, 0.0), mpvar::Error);
  CHECK_THROWS_AS(mpvar::student_t_cdf(1.0, -2.0), mpvar::Error);
  CHECK_THROWS_AS(mpvar::f_sf(1.0, 0.0, 3.0), mpvar::Error);
}
