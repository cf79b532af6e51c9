#include <catch_amalgamated.hpp>

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "mpvar/montecarlo.hpp"
#include "mpvar/stats_core.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mpvar;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using support::normals;
using support::thrown_kind;

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TEST_CASE("pearson_corr examples") {
  const std::vector<double> a{1, 2, 3};
  CHECK_THAT(pearson_corr(a, a), WithinAbs(1.0, 1e-15));
  CHECK_THAT(pearson_corr(a, std::vector<double>{3, 2, 1}), WithinAbs(-1.0, 1e-15));
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 5};
  CHECK_THAT(pearson_corr(x, y), WithinAbs(0.8315218406, 1e-9));
  CHECK_THAT(pearson_corr(x, y), WithinAbs(oracle::pearson_one_pass(x, y), 1e-14));
}

TEST_CASE("pearson_corr errors") {
  const std::vector<double> a{1, 2, 3};
  CHECK(thrown_kind([&] { (void)pearson_corr(a, std::vector<double>{1, 1, 1}); }) ==
        ErrorKind::DegenerateSample);
  CHECK(thrown_kind([&] { (void)pearson_corr(a, std::vector<double>{1, 2}); }) ==
        ErrorKind::LengthMismatch);
  CHECK(thrown_kind([&] { (void)pearson_corr(a, std::vector<double>{1, NAN, 2}); }) ==
        ErrorKind::NonFinite);
}

TEST_CASE("pearson_corr matches the one-pass oracle on random data") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = normals(50, seed);
    const auto y = normals(50, seed + 100);
    CHECK_THAT(pearson_corr(x, y), WithinAbs(oracle::pearson_one_pass(x, y), 1e-12));
  }
}

TEST_CASE("PairedSample validates its invariants") {
  CHECK(thrown_kind([] { PairedSample({1, 2, 3}, {1, 2}); }) == ErrorKind::LengthMismatch);
  CHECK(thrown_kind([] { PairedSample({1, 2}, {1, 2}); }) == ErrorKind::SampleTooSmall);
  CHECK(thrown_kind([] { PairedSample({1, INFINITY, 3}, {1, 2, 3}); }) == ErrorKind::NonFinite);
}

TEST_CASE("uv_transform examples") {
  auto uv = uv_transform(PairedSample({3, -1, 2}, {1, 1, 1}));
  CHECK(uv.u == std::vector<double>{4, 0, 3});
  CHECK(uv.v == std::vector<double>{2, -2, 1});
  uv = uv_transform(PairedSample({1, 2, 5}, {1, 2, 5}));
  CHECK(uv.v == std::vector<double>{0, 0, 0});
  CHECK(uv.u == std::vector<double>{2, 4, 10});
}

TEST_CASE("uv identity holds elementwise") {
  const auto x = normals(100, 1), y = normals(100, 2);
  const auto uv = uv_transform(PairedSample(x, y));
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK_THAT(uv.u[i] + uv.v[i], WithinAbs(2 * x[i], 1e-14));
    CHECK_THAT(uv.u[i] - uv.v[i], WithinAbs(2 * y[i], 1e-14));
  }
}

TEST_CASE("mp_statistic examples") {
  CHECK(mp_statistic(0.0, 10) == 0.0);
  CHECK_THAT(mp_statistic(0.5, 102), WithinAbs(0.5 * std::sqrt(100 / 0.75), 1e-12));
  CHECK_THAT(mp_statistic(0.5, 102), WithinAbs(5.7735, 1e-4));
  CHECK(thrown_kind([] { (void)mp_statistic(1.0, 50); }) == ErrorKind::DegenerateCorrelation);
  CHECK(thrown_kind([] { (void)mp_statistic(0.2, 2); }) == ErrorKind::SampleTooSmall);
}

TEST_CASE("classic test against an independent t reference") {
  const auto x = normals(60, 3), y = normals(60, 4, 1.3);
  const PairedSample s(x, y);
  const auto uv = uv_transform(s);
  const double r = oracle::pearson_one_pass(uv.u, uv.v);
  const double t = r * std::sqrt(58.0 / (1 - r * r));
  const boost::math::students_t_distribution<double> dist(58.0);
  const auto res = classic_mp_test(s);
  CHECK(res.df == 58.0);
  CHECK(res.method == Method::classic_mp);
  CHECK_THAT(res.statistic, WithinRel(t, 1e-12));
  CHECK_THAT(res.p_value,
             WithinRel(2 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 1e-9));
  // y has the larger variance, so rho < 0 and `less` is the favoured side.
  CHECK(res.statistic < 0);
  CHECK(classic_mp_test(s, Alternative::less).p_value < classic_mp_test(s, Alternative::greater).p_value);
}

TEST_CASE("classic test rejects a constant V") {
  std::vector<double> y = normals(20, 5), x = y;
  for (auto& v : x) v += 1.0;
  CHECK(thrown_kind([&] { (void)classic_mp_test(PairedSample(x, y)); }) ==
        ErrorKind::DegenerateSample);
}

TEST_CASE("classic test detects a fourfold variance with alternative less") {
  int rejected = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto res = classic_mp_test(PairedSample(normals(1000, seed), normals(1000, seed + 5000, 2.0)),
                                     Alternative::less);
    rejected += res.p_value < 0.01;
  }
  CHECK(rejected > 198);
}

TEST_CASE("classic test p-values are uniform under the null") {
  std::vector<double> p;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    p.push_back(classic_mp_test(PairedSample(normals(1000, seed), normals(1000, seed + 9000))).p_value);
  }
  CHECK(ks_uniform_test(p).p_value > 0.01);
}

TEST_CASE("ols_fit examples") {
  const std::vector<double> u{-2, 0.5, 1, 4};
  std::vector<double> v;
  for (double x : u) v.push_back(2 + 3 * x);
  auto fit = ols_fit(u, v);
  CHECK_THAT(fit.beta_hat[0], WithinAbs(2.0, 1e-12));
  CHECK_THAT(fit.beta_hat[1], WithinAbs(3.0, 1e-12));
  for (double e : fit.residuals) CHECK(std::abs(e) < 1e-12);

  fit = ols_fit(std::vector<double>{-1, 1, 0}, std::vector<double>{0, 0, 3});
  CHECK_THAT(fit.beta_hat[0], WithinAbs(1.0, 1e-14));
  CHECK_THAT(fit.beta_hat[1], WithinAbs(0.0, 1e-14));

  CHECK(thrown_kind([] { (void)ols_fit(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}); }) ==
        ErrorKind::SingularDesign);
}

TEST_CASE("ols residuals are orthogonal to the design") {
  const auto u = normals(200, 8), v = normals(200, 9);
  const auto fit = ols_fit(u, v);
  double s0 = 0, s1 = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s0 += fit.residuals[i];
    s1 += fit.residuals[i] * u[i];
  }
  CHECK(std::abs(s0) < 1e-8 * 200);
  CHECK(std::abs(s1) < 1e-8 * 200);
}

TEST_CASE("hc4 leverages for a symmetric design") {
  const auto fit = hc4_covariance(std::vector<double>{-3, -1, 1, 3}, std::vector<double>{1, -2, 0.5, 2});
  const std::vector<double> h{0.7, 0.3, 0.3, 0.7}, d{1.4, 0.6, 0.6, 1.4};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK_THAT(fit.leverages[i], WithinAbs(h[i], 1e-14));
    CHECK_THAT(fit.discounts[i], WithinAbs(d[i], 1e-14));
  }
  CHECK_THAT(fit.mean_leverage, WithinAbs(0.5, 1e-15));
}

TEST_CASE("hc4 fit invariants and oracle agreement") {
  mpvar::Rng rng(11);
  for (std::size_t n : {5, 25, 200}) {
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> u(n), v(n);
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = rng.normal() * (1 + rep);
        v[i] = 0.3 * u[i] + rng.normal() * (1 + std::abs(u[i]));
      }
      const Hc4Fit fit = hc4_covariance(u, v);
      const auto naive = oracle::naive_hc4(u, v);
      double trace = 0;
      for (std::size_t i = 0; i < n; ++i) {
        REQUIRE(fit.leverages[i] > 0);
        REQUIRE(fit.leverages[i] < 1);
        REQUIRE(fit.discounts[i] > 0);
        REQUIRE(fit.discounts[i] <= 4);
        CHECK_THAT(fit.discounts[i],
                   WithinAbs(std::min(4.0, fit.leverages[i] / fit.mean_leverage), 1e-15));
        CHECK(rel_err(fit.leverages[i], naive.leverages(static_cast<Eigen::Index>(i))) < 1e-10);
        trace += fit.leverages[i];
      }
      CHECK_THAT(trace, WithinAbs(2.0, 1e-12));
      CHECK_THAT(fit.mean_leverage, WithinAbs(2.0 / static_cast<double>(n), 1e-14));
      CHECK(fit.s_matrix.a01 == fit.s_matrix.a10);
      CHECK(fit.s_matrix.a00 >= 0);
      CHECK(fit.s_matrix.a11 >= 0);
      CHECK(rel_err(fit.s_matrix.a00, naive.s(0, 0)) < 1e-10);
      CHECK(rel_err(fit.s_matrix.a01, naive.s(0, 1)) < 1e-10);
      CHECK(rel_err(fit.s_matrix.a11, naive.s(1, 1)) < 1e-10);
      CHECK(rel_err(fit.beta_hat[1], naive.beta(1)) < 1e-10);
    }
  }
}

TEST_CASE("zero discounts reduce the sandwich to HC0") {
  const auto u = normals(40, 12), v = normals(40, 13);
  const auto ols = ols_fit(u, v);
  const Hc4Fit fit = hc4_covariance(u, v);
  const std::vector<double> zeros(u.size(), 0.0);
  const Matrix2 hc0 = sandwich_covariance(u, ols.residuals, fit.leverages, zeros);
  const auto naive = oracle::naive_hc4(u, v, true);
  CHECK(rel_err(hc0.a00, naive.s(0, 0)) < 1e-10);
  CHECK(rel_err(hc0.a01, naive.s(0, 1)) < 1e-10);
  CHECK(rel_err(hc0.a11, naive.s(1, 1)) < 1e-10);
}

TEST_CASE("hc4 guards") {
  CHECK(thrown_kind([] { (void)hc4_covariance(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}); }) ==
        ErrorKind::SingularDesign);
  // One point far from the others pushes its leverage to 1 in floating point.
  CHECK(thrown_kind([] {
          (void)hc4_covariance(std::vector<double>{0, 0, 0, 1e9}, std::vector<double>{1, 2, 3, 4});
        }) == ErrorKind::LeverageOne);
}

TEST_CASE("hc4 test on identical residuals is degenerate with p = 1") {
  const auto x = normals(30, 14);
  const auto res = mp_hc4_test(PairedSample(x, x));
  CHECK(res.degenerate);
  CHECK(res.p_value == 1.0);
  CHECK(res.statistic == 0.0);
  CHECK(res.method == Method::hc4_mp);
  CHECK(res.df == 28.0);
}

TEST_CASE("hc4 statistic matches beta1 / sqrt(S22) from the oracle") {
  const auto x = normals(80, 15), y = normals(80, 16, 1.4);
  const PairedSample s(x, y);
  const auto uv = uv_transform(s);
  const auto naive = oracle::naive_hc4(uv.u, uv.v);
  const double t = naive.beta(1) / std::sqrt(naive.s(1, 1));
  const auto res = mp_hc4_test(s);
  CHECK(rel_err(res.statistic, t) < 1e-10);
  const boost::math::students_t_distribution<double> dist(78.0);
  CHECK_THAT(res.p_value,
             WithinRel(2 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 1e-8));
  CHECK_THAT(mp_hc4_test(s, Alternative::less).p_value,
             WithinRel(boost::math::cdf(dist, t), 1e-8));
}

TEST_CASE("sign of rho follows the sample variance difference") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto x = normals(25, seed), y = normals(25, seed + 77, 1.1);
    const auto uv = uv_transform(PairedSample(x, y));
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= 25;
    my /= 25;
    double vx = 0, vy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      vx += (x[i] - mx) * (x[i] - mx);
      vy += (y[i] - my) * (y[i] - my);
    }
    CHECK((pearson_corr(uv.u, uv.v) > 0) == (vx > vy));
  }
}

TEST_CASE("exchange symmetry and scale equivariance") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = normals(50, seed), y = normals(50, seed + 300, 1.2);
    const auto xy = mp_hc4_test(PairedSample(x, y));
    const auto yx = mp_hc4_test(PairedSample(y, x));
    CHECK_THAT(xy.p_value, WithinRel(yx.p_value, 1e-10));
    CHECK_THAT(xy.statistic, WithinRel(-yx.statistic, 1e-10));

    std::vector<double> xs = x, ys = y;
    for (auto& v : xs) v *= -3.7;
    for (auto& v : ys) v *= -3.7;
    CHECK(rel_err(mp_hc4_test(PairedSample(xs, ys)).statistic, xy.statistic) < 1e-10);
    CHECK(rel_err(classic_mp_test(PairedSample(xs, ys)).statistic,
                  classic_mp_test(PairedSample(x, y)).statistic) < 1e-10);
  }
}

TEST_CASE("two-sided p-value is twice the smaller tail") {
  for (double t : {-3.1, -0.2, 0.0, 0.9, 4.0}) {
    const double lo = t_p_value(t, 17, Alternative::less);
    const double hi = t_p_value(t, 17, Alternative::greater);
    CHECK_THAT(lo + hi, WithinAbs(1.0, 1e-12));
    CHECK_THAT(t_p_value(t, 17, Alternative::two_sided), WithinAbs(std::min(1.0, 2 * std::min(lo, hi)), 1e-12));
  }
}

TEST_CASE("enum text round trips") {
  for (auto a : {Alternative::two_sided, Alternative::less, Alternative::greater}) {
    CHECK(parse_alternative(to_string(a)) == a);
  }
  CHECK(parse_alternative("two-sided") == Alternative::two_sided);
  CHECK(thrown_kind([] { (void)parse_alternative("sideways"); }) == ErrorKind::InvalidArgument);
}
