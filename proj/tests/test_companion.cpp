#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "mpvar/companion.hpp"
#include "mpvar/montecarlo.hpp"
#include "mpvar/special.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mpvar;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using support::normals;
using support::thrown_kind;

namespace {

double w1(std::vector<double> a, std::vector<double> b) {
  return wasserstein1(EmpiricalDistribution(std::move(a)), EmpiricalDistribution(std::move(b)));
}

double trapezoid(const DensityCurve& c) {
  double area = 0;
  for (std::size_t i = 1; i < c.grid.size(); ++i) {
    area += 0.5 * (c.density[i] + c.density[i - 1]) * (c.grid[i] - c.grid[i - 1]);
  }
  return area;
}

}  // namespace

TEST_CASE("bias_test examples") {
  auto res = bias_test(std::vector<double>{-1, 0, 1});
  CHECK(res.statistic == 0.0);
  CHECK_THAT(res.p_value, WithinAbs(1.0, 1e-15));
  CHECK(res.method == Method::t_bias);

  res = bias_test(std::vector<double>{1, 2, 3});
  CHECK_THAT(res.statistic, WithinAbs(2 * std::sqrt(3.0), 1e-12));
  CHECK(res.df == 2.0);
  // df = 2 closed form: P(|T| > t) = 1 - t / sqrt(2 + t^2).
  const double t = 2 * std::sqrt(3.0);
  CHECK_THAT(res.p_value, WithinAbs(1 - t / std::sqrt(2 + t * t), 1e-13));
  CHECK_THAT(res.p_value, WithinAbs(0.0742, 1e-4));

  CHECK(thrown_kind([] { (void)bias_test(std::vector<double>{0, 0, 0}); }) ==
        ErrorKind::DegenerateSample);
}

TEST_CASE("bias_test on centred symmetric samples gives p = 1") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto half = normals(50, seed);
    std::vector<double> sym = half;
    for (double v : half) sym.push_back(-v);
    CHECK_THAT(bias_test(sym).p_value, WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("paired_t_test examples") {
  const std::vector<double> a{1, 2, 3, 4}, b{0, 2, 2, 5};
  const auto res = paired_t_test(a, b);
  const double t = 0.25 / (0.9574271077563381 / 2.0);
  CHECK_THAT(res.statistic, WithinAbs(t, 1e-12));
  CHECK(res.p_value > 0.5);
  CHECK(thrown_kind([&] { (void)paired_t_test(a, a); }) == ErrorKind::DegenerateSample);
  const std::vector<double> shifted{3, 4, 5, 6};
  CHECK(thrown_kind([&] { (void)paired_t_test(shifted, a); }) == ErrorKind::DegenerateSample);
  CHECK(thrown_kind([&] { (void)paired_t_test(a, std::vector<double>{1, 2}); }) ==
        ErrorKind::LengthMismatch);
}

TEST_CASE("wasserstein examples") {
  const std::vector<double> f{3, -1, 2};
  CHECK(w1(f, f) == 0.0);
  CHECK_THAT(w1({-1, 0, 1}, {0, 0, 0}), WithinAbs(2.0 / 3.0, 1e-15));
  CHECK_THAT(w1({1, 2}, {3, 4}), WithinAbs(2.0, 1e-15));
  CHECK(thrown_kind([] { (void)w1({1, 2}, {1, 2, 3}); }) == ErrorKind::LengthMismatch);
  CHECK(thrown_kind([] { (void)EmpiricalDistribution({}); }) == ErrorKind::SampleTooSmall);
}

TEST_CASE("wasserstein to the point mass at zero") {
  CHECK(wasserstein_to_delta(std::vector<double>{0, 0, 0}) == 0.0);
  CHECK_THAT(wasserstein_to_delta(std::vector<double>{-1, 0, 1}), WithinAbs(2.0 / 3.0, 1e-15));
  CHECK_THAT(wasserstein_to_delta(std::vector<double>{2, -2, 4, -4}), WithinAbs(3.0, 1e-15));
  const auto r = normals(101, 4);
  CHECK(wasserstein_to_delta(r) == w1(r, std::vector<double>(r.size(), 0.0)));
}

TEST_CASE("wasserstein metric properties on random triples") {
  mpvar::Rng rng(21);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t n = 1 + rng.index(40);
    std::vector<double> a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal();
      b[i] = 2 * rng.normal() + 1;
      c[i] = rng.student_t(3);
    }
    const double ab = w1(a, b), bc = w1(b, c), ac = w1(a, c);
    REQUIRE(ab >= 0);
    REQUIRE(w1(a, a) == 0.0);
    REQUIRE(ab == w1(b, a));
    REQUIRE(ac <= ab + bc + 1e-12);
  }
}

TEST_CASE("distance correlation examples") {
  const auto x = normals(60, 30);
  std::vector<double> affine;
  for (double v : x) affine.push_back(2 * v + 3);
  CHECK_THAT(distance_correlation(x, x), WithinAbs(1.0, 1e-12));
  CHECK_THAT(distance_correlation(x, affine), WithinAbs(1.0, 1e-12));
  CHECK(thrown_kind([] {
          (void)distance_correlation(std::vector<double>{1, 1, 1, 1}, std::vector<double>{1, 2, 3, 4});
        }) == ErrorKind::DegenerateSample);
  CHECK(thrown_kind([] {
          (void)distance_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3});
        }) == ErrorKind::SampleTooSmall);
}

TEST_CASE("distance correlation matches the matrix oracle and is affine invariant") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = normals(70, seed);
    auto y = normals(70, seed + 40);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += 0.5 * x[i] * x[i];
    const double d = distance_correlation(x, y);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK_THAT(d, WithinRel(oracle::naive_dcor(x, y), 1e-10));
    std::vector<double> xs = x, ys = y;
    for (auto& v : xs) v = 4.5 * v - 7;
    for (auto& v : ys) v = 0.01 * v + 100;
    CHECK_THAT(distance_correlation(xs, ys), WithinRel(d, 1e-10));
  }
}

// P(dCor > 0.15) is about 0.2% per seed at n = 500, so the bound is a
// Monte Carlo statement about these particular 100 seeds.
TEST_CASE("distance correlation is small for independent samples") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    mpvar::Rng rng(seed);
    std::vector<double> x(500), y(500);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    CHECK(distance_correlation(x, y) < 0.15);
  }
}

TEST_CASE("dcor permutation test of a sample with itself") {
  const auto x = normals(40, 0);
  const auto res = dcor_perm_test(x, x, 199, 0);
  CHECK_THAT(res.p_value, WithinAbs(1.0 / 200.0, 1e-15));
  CHECK(res.method == Method::dcor_perm);
  CHECK(thrown_kind([&] { (void)dcor_perm_test(x, x, 50, 0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("dcor permutation test is deterministic") {
  const auto x = normals(50, 3), y = normals(50, 4);
  const auto a = dcor_perm_test(x, y, 199, 9), b = dcor_perm_test(x, y, 199, 9);
  CHECK(a.p_value == b.p_value);
  CHECK(a.statistic == b.statistic);
}

TEST_CASE("dcor permutation test detects y = x^2") {
  int rejected = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto x = normals(300, seed);
    std::vector<double> y;
    for (double v : x) y.push_back(v * v);
    rejected += dcor_perm_test(x, y, 99, seed).p_value <= 0.01;
  }
  CHECK(rejected >= 48);
}

TEST_CASE("dcor permutation p-values are uniform under independence") {
  std::vector<double> p;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    p.push_back(dcor_perm_test(normals(30, seed), normals(30, seed + 500), 99, seed).p_value);
  }
  const auto ks = ks_uniform_test(p);
  CHECK(ks.statistic < 0.12);
}

TEST_CASE("nested F test examples") {
  auto res = nested_f_test(10, 2, 10, 3, 103);
  CHECK(res.statistic == 0.0);
  CHECK_THAT(res.p_value, WithinAbs(1.0, 1e-15));

  res = nested_f_test(10, 2, 5, 3, 103);
  CHECK_THAT(res.statistic, WithinAbs(100.0, 1e-10));
  CHECK(res.p_value < 1e-3);
  CHECK(res.df == 1.0);
  REQUIRE(res.df2.has_value());
  CHECK(*res.df2 == 100.0);
  CHECK(res.method == Method::f_nested);

  CHECK(thrown_kind([] { (void)nested_f_test(10, 3, 5, 3, 103); }) == ErrorKind::InvalidNesting);
  CHECK(thrown_kind([] { (void)nested_f_test(10, 4, 5, 3, 103); }) == ErrorKind::InvalidNesting);
  CHECK(thrown_kind([] { (void)nested_f_test(5, 2, 10, 3, 103); }) ==
        ErrorKind::NegativeImprovement);
}

TEST_CASE("nested F test on a linear dataset matches the direct formula") {
  // y = 1 + 2 x + noise; small model: intercept only, big model: line.
  const auto x = normals(100, 0), e = normals(100, 1);
  double mx = 0, my = 0;
  std::vector<double> y;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y.push_back(1 + 0.2 * x[i] + e[i]);
    mx += x[i];
    my += y.back();
  }
  mx /= 100;
  my /= 100;
  double sxx = 0, sxy = 0, rss_small = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    rss_small += (y[i] - my) * (y[i] - my);
  }
  const double rss_big = rss_small - sxy * sxy / sxx;
  const double f = (rss_small - rss_big) / (rss_big / 98.0);
  // F(1, 98) is the square of t(98).
  const double p = 2 * student_t_sf(std::sqrt(f), 98.0);
  const auto res = nested_f_test(rss_small, 1, rss_big, 2, 100);
  CHECK_THAT(res.statistic, WithinRel(f, 1e-12));
  CHECK_THAT(res.p_value, WithinAbs(p, 1e-10));
}

TEST_CASE("kde density examples") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = normals(1000, seed);
    const auto curve = kde_density(s, 512);
    REQUIRE(curve.grid.size() == 512);
    std::size_t nearest = 0;
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      if (std::abs(curve.grid[i]) < std::abs(curve.grid[nearest])) nearest = i;
    }
    CHECK(curve.density[nearest] > 0.33);
    CHECK(curve.density[nearest] < 0.47);
    const double area = trapezoid(curve);
    CHECK(area >= 0.97);
    CHECK(area <= 1.0 + 1e-9);
    for (std::size_t i = 1; i < curve.grid.size(); ++i) REQUIRE(curve.grid[i] > curve.grid[i - 1]);
    for (double d : curve.density) REQUIRE(d >= 0);
  }
  CHECK(thrown_kind([] { (void)kde_density(std::vector<double>{2, 2, 2}); }) ==
        ErrorKind::DegenerateSample);
}

TEST_CASE("kde grid and bandwidth conventions") {
  const std::vector<double> s{0, 1, 2, 3, 10};
  const auto curve = kde_density(s, 64);
  const double bw = silverman_bandwidth(s);
  CHECK(curve.bandwidth == bw);
  CHECK_THAT(curve.grid.front(), WithinAbs(-3 * bw, 1e-12));
  CHECK_THAT(curve.grid.back(), WithinAbs(10 + 3 * bw, 1e-12));
  // sd = 3.9370, IQR = 2 -> 0.9 * min(3.937, 2 / 1.34) * 5^(-1/5).
  CHECK_THAT(bw, WithinRel(0.9 * (2.0 / 1.34) * std::pow(5.0, -0.2), 1e-12));
}

TEST_CASE("type-7 quantiles") {
  const std::vector<double> s{1, 2, 3, 4, 100};
  CHECK(quantile_sorted(s, 0.0) == 1.0);
  CHECK(quantile_sorted(s, 0.25) == 2.0);
  CHECK(quantile_sorted(s, 0.5) == 3.0);
  CHECK(quantile_sorted(s, 1.0) == 100.0);
  CHECK_THAT(quantile_sorted(std::vector<double>{1, 2, 3, 4}, 0.25), WithinAbs(1.75, 1e-15));
}
