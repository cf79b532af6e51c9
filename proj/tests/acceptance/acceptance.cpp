// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fmt/core.h>

#include "cli.hpp"
#include "mpvar/companion.hpp"
#include "mpvar/datagen.hpp"
#include "mpvar/experiment.hpp"
#include "mpvar/models.hpp"
#include "mpvar/montecarlo.hpp"
#include "mpvar/random.hpp"
#include "mpvar/resample.hpp"
#include "mpvar/stats_core.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace mpvar;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::size_t workers() { return std::max(1U, std::thread::hardware_concurrency()); }

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

std::vector<double> normals(std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (double& v : out) v = rng.normal();
  return out;
}

Verdict type_one_error() {
  McConfig cfg;
  cfg.replications = 10000;
  cfg.sample_size = 1000;
  cfg.alpha = 0.05;
  cfg.test = VarianceTest::hc4_mp;
  cfg.workers = workers();
  const McReport r = estimate_rejection_rate(cfg);
  return {r.rejection_rate >= 0.040 && r.rejection_rate <= 0.065,
          fmt::format("hc4 rejection rate {:.4f} in [0.040, 0.065], {} failures", r.rejection_rate,
                      r.failures)};
}

Verdict hc4_oracle() {
  const std::size_t sizes[] = {5, 25, 200};
  double worst = 0;
  for (std::size_t k = 0; k < 100; ++k) {
    const std::size_t n = sizes[k % 3];
    Rng rng(k, 77);
    std::vector<double> u(n), v(n);
    const double spread = std::exp(2.0 * rng.normal());
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = spread * rng.normal() + rng.normal();
      v[i] = 0.3 * u[i] + (1.0 + std::abs(u[i])) * rng.normal();
    }
    const Hc4Fit fit = hc4_covariance(u, v);
    const oracle::NaiveHc4 naive = oracle::naive_hc4(u, v);
    worst = std::max({worst, rel_err(fit.s_matrix.a00, naive.s(0, 0)),
                      rel_err(fit.s_matrix.a01, naive.s(0, 1)),
                      rel_err(fit.s_matrix.a10, naive.s(1, 0)),
                      rel_err(fit.s_matrix.a11, naive.s(1, 1))});
  }
  return {worst <= 1e-10, fmt::format("max relative error of S over 100 instances {:.3e} <= 1e-10", worst)};
}

Verdict simdata3_agreement() {
  ExperimentOptions opt;
  opt.name = "simdata3";
  opt.seed = 0;
  opt.sample_size = 1000;
  opt.runs = 50;
  const ExperimentResult r = run_experiment(opt);
  const PairRow* low = nullptr;
  const PairRow* high = nullptr;
  for (const PairRow& p : r.pairs) {
    if (p.model_a == "deg1" && p.model_b == "deg2") low = &p;
    if (p.model_a == "deg2" && p.model_b == "deg3") high = &p;
  }
  if (low == nullptr || high == nullptr || !low->f_p_mean || !high->f_p_mean) {
    return {false, "missing model pairs"};
  }
  const bool pass = low->hc4_p_mean < 1e-3 && *low->f_p_mean < 1e-3 && high->hc4_p_mean > 0.05 &&
                    *high->f_p_mean > 0.05;
  return {pass, fmt::format("50 runs: deg1/deg2 hc4 {:.3e} F {:.3e} (< 1e-3); deg2/deg3 hc4 {:.4f} "
                            "F {:.4f} (> 0.05)",
                            low->hc4_p_mean, *low->f_p_mean, high->hc4_p_mean, *high->f_p_mean)};
}

Verdict nesting() {
  int violations = 0;
  double worst = -1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset d = simdata3(1000, seed);
    double previous = 0;
    for (int degree = 1; degree <= 3; ++degree) {
      const TrainedModel m = fit_poly(d.features, d.target, PolySpec{degree, true});
      const double rss = (d.target - predict(m, d.features)).squaredNorm();
      if (degree > 1) {
        worst = std::max(worst, (rss - previous) / previous);
        if (rss > previous) ++violations;
      }
      previous = rss;
    }
  }
  return {violations == 0,
          fmt::format("seeds 0..19: {} increases, max relative change {:.3e}", violations, worst)};
}

double batch_mse(const NetSpec& spec, const Vector& params, const Matrix& x, const Vector& y) {
  const Matrix out = net_forward_batch(spec, params, x);
  return (out.col(0) - y).squaredNorm() / static_cast<double>(y.size());
}

Verdict gradient_check() {
  NetSpec spec;
  spec.layer_sizes = {4, 3, 1};
  spec.init_seed = 0;
  const TrainedModel model{spec, glorot_normal_init(spec), {}};
  Rng rng(0);
  Matrix x(8, 4);
  Vector y(8);
  for (Eigen::Index i = 0; i < 8; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = rng.normal();
    y(i) = rng.normal();
  }
  const Vector g = net_gradients(model, x, y);
  const Vector fd = oracle::central_difference(
      [&](const Eigen::VectorXd& p) { return batch_mse(spec, p, x, y); }, model.parameters, 1e-5);
  double worst = 0;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const double scale = std::max({std::abs(g(k)), std::abs(fd(k)), 1e-7});
    worst = std::max(worst, std::abs(g(k) - fd(k)) / scale);
  }
  return {worst <= 1e-4, fmt::format("max relative component error {:.3e} over {} parameters <= 1e-4",
                                     worst, g.size())};
}

Verdict null_uniformity() {
  McConfig cfg;
  cfg.replications = 2000;
  cfg.sample_size = 1000;
  cfg.keep_p_values = true;
  cfg.workers = workers();
  cfg.test = VarianceTest::classic_mp;
  const KsResult classic = ks_uniform_test(estimate_rejection_rate(cfg).p_values);
  cfg.test = VarianceTest::hc4_mp;
  const KsResult hc4 = ks_uniform_test(estimate_rejection_rate(cfg).p_values);
  return {classic.p_value > 0.01 && hc4.p_value > 0.01,
          fmt::format("KS p classic {:.4f}, hc4 {:.4f} (> 0.01)", classic.p_value, hc4.p_value)};
}

Verdict companion_properties() {
  std::vector<std::string> failures;
  Rng rng(7);
  int w1_bad = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng.index(60);
    auto draw = [&] {
      const double shift = 3.0 * rng.normal();
      const double scale = std::exp(rng.normal());
      std::vector<double> s(n);
      for (double& v : s) v = shift + scale * (rng.uniform() < 0.2 ? rng.student_t(3) : rng.normal());
      return EmpiricalDistribution(std::move(s));
    };
    const auto f = draw(), g = draw(), h = draw();
    const double fg = wasserstein1(f, g), gf = wasserstein1(g, f);
    const double gh = wasserstein1(g, h), fh = wasserstein1(f, h);
    const bool ok = wasserstein1(f, f) == 0.0 && fg == gf && fg >= 0 &&
                    fh <= fg + gh + 1e-12 * (1.0 + fg + gh);
    if (!ok) ++w1_bad;
  }
  if (w1_bad > 0) failures.push_back(fmt::format("{} W1 triples", w1_bad));

  double affine_worst = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng r(seed, 3);
    const std::vector<double> x = normals(80, r);
    std::vector<double> y(80);
    for (std::size_t i = 0; i < 80; ++i) y[i] = x[i] * x[i] + 0.5 * r.normal();
    const double base = distance_correlation(x, y);
    const double a = (r.uniform() < 0.5 ? -1.0 : 1.0) * std::exp(2.0 * r.normal());
    const double c = (r.uniform() < 0.5 ? -1.0 : 1.0) * std::exp(2.0 * r.normal());
    const double b = 10.0 * r.normal(), e = 10.0 * r.normal();
    std::vector<double> xa(80), ya(80);
    for (std::size_t i = 0; i < 80; ++i) {
      xa[i] = a * x[i] + b;
      ya[i] = c * y[i] + e;
    }
    affine_worst = std::max(affine_worst, std::abs(distance_correlation(xa, ya) - base));
  }
  if (affine_worst > 1e-10) failures.push_back(fmt::format("affine change {:.3e}", affine_worst));

  std::vector<double> perm_p;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng r(seed, 11);
    const std::vector<double> x = normals(60, r);
    const std::vector<double> y = normals(60, r);
    perm_p.push_back(dcor_perm_test(x, y, 199, seed).p_value);
  }
  const double perm_ks = ks_uniform_test(perm_p).p_value;
  if (perm_ks <= 0.01) failures.push_back(fmt::format("dcor permutation KS p {:.4f}", perm_ks));

  double bias_worst = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r(seed, 5);
    std::vector<double> sym;
    for (double v : normals(40, r)) {
      sym.push_back(v);
      sym.push_back(-v);
    }
    bias_worst = std::max(bias_worst, std::abs(1.0 - bias_test(sym).p_value));
  }
  if (bias_worst > 1e-12) failures.push_back(fmt::format("bias p off by {:.3e}", bias_worst));

  return {failures.empty(),
          fmt::format("W1 500 triples ok={}, dCor affine max change {:.3e}, dcor perm KS p {:.4f}, "
                      "bias p max |1 - p| {:.1e}",
                      w1_bad == 0, affine_worst, perm_ks, bias_worst)};
}

Verdict heavy_tails() {
  McConfig cfg;
  cfg.replications = 2000;
  cfg.sample_size = 1000;
  cfg.null_generator = parse_distribution("t:3");
  cfg.alt_generator = parse_distribution("t:3");
  cfg.test = VarianceTest::hc4_mp;
  cfg.workers = workers();
  const McReport r = estimate_rejection_rate(cfg);
  return {r.rejection_rate >= 0.03 && r.rejection_rate <= 0.08,
          fmt::format("t3 hc4 rejection rate {:.4f} in [0.03, 0.08]", r.rejection_rate)};
}

Verdict oob_evenness() {
  std::size_t worst = 0;
  for (std::size_t n : {50, 200}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Dataset d = simdata3(n, seed);
      const ResidualSet r =
          oob_bootstrap_residuals(d.features, d.target, PolySpec{1, true}, n, seed);
      worst = std::max(worst, r.coverage_spread());
    }
  }
  return {worst <= 1, fmt::format("max coverage spread {} <= 1 over 20 seeds, n in {{50, 200}}", worst)};
}

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    files[std::filesystem::relative(entry.path(), dir).string()] =
        std::string(std::istreambuf_iterator<char>(in), {});
  }
  return files;
}

Verdict determinism() {
  support::TempDir dir("acceptance");
  for (const char* sub : {"first", "second"}) {
    std::ostringstream out, err;
    const int code = cli::run({"experiment", "simdata3", "--seed", "0", "--out", (dir / sub).string()},
                              out, err);
    if (code != 0) return {false, fmt::format("experiment exited {}: {}", code, err.str())};
  }
  const auto a = snapshot(dir / "first");
  const auto b = snapshot(dir / "second");
  return {!a.empty() && a == b, fmt::format("{} files compared byte-wise, identical={}", a.size(), a == b)};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, type_one_error},  {2, hc4_oracle},          {3, simdata3_agreement}, {4, nesting},
      {5, gradient_check},  {6, null_uniformity},     {7, companion_properties},
      {8, heavy_tails},     {9, oob_evenness},        {10, determinism},
  };
  int failed = 0;
  for (const auto& [number, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what())};
    }
    if (!v.pass) ++failed;
    fmt::print("{} criterion {}: {}\n", v.pass ? "PASS" : "FAIL", number, v.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed),
             criteria.size());
  return failed == 0 ? 0 : 1;
}
