#include "mpvar/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "mpvar/datagen.hpp"
#include "mpvar/error.hpp"
#include "mpvar/serialize.hpp"
#include "mpvar/stats_core.hpp"

namespace mpvar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kRejectAlpha = 0.05;
constexpr std::size_t kFullRuns = 500;
constexpr std::size_t kFullEpochs = 200;
constexpr std::size_t kFullPermutations = 999;
constexpr std::size_t kMinPermutations = 99;

std::size_t scaled(std::size_t full, double scale, std::size_t floor) {
  const auto value = static_cast<std::size_t>(std::llround(static_cast<double>(full) * scale));
  return std::max(value, floor);
}

struct Candidate {
  std::string label;
  ModelSpec spec;
  std::vector<std::size_t> kept;  // feature columns fed to the model
};

struct Recipe {
  std::string reference;
  std::vector<Candidate> candidates;
  std::vector<std::pair<std::string, std::string>> pairs;
};

std::vector<std::size_t> all_columns(std::size_t d) {
  std::vector<std::size_t> kept(d);
  for (std::size_t j = 0; j < d; ++j) kept[j] = j;
  return kept;
}

NetSpec relu_net(std::vector<std::size_t> layers, std::uint64_t init_seed, std::size_t epochs) {
  NetSpec spec;
  spec.layer_sizes = std::move(layers);
  spec.init_seed = init_seed;
  spec.epochs = epochs;
  return spec;
}

// Feature-ablation recipe: the full network and three nested variants with
// input columns removed.
Recipe ablation_recipe(std::vector<std::size_t> layers, const ExperimentOptions& opt) {
  const NetSpec base = relu_net(std::move(layers), opt.seed, opt.effective_epochs());
  const std::vector<std::pair<std::string, std::vector<std::size_t>>> subsets{
      {"all", all_columns(8)},
      {"op", {0, 1, 2, 3}},
      {"nop", {4, 5, 6, 7}},
      {"3op-3nop", {0, 1, 2, 5, 6, 7}}};
  Recipe recipe;
  recipe.reference = "all";
  for (const auto& [label, kept] : subsets) {
    recipe.candidates.push_back({label, drop_features(base, kept), kept});
    if (label != "all") recipe.pairs.emplace_back("all", label);
  }
  return recipe;
}

Recipe poly_recipe() {
  Recipe recipe;
  recipe.reference = "deg1";
  for (int degree = 1; degree <= 3; ++degree) {
    recipe.candidates.push_back(
        {fmt::format("deg{}", degree), PolySpec{degree, true}, all_columns(2)});
  }
  recipe.pairs = {{"deg1", "deg2"}, {"deg1", "deg3"}, {"deg2", "deg3"}};
  return recipe;
}

Recipe depth_recipe(const ExperimentOptions& opt) {
  const std::uint64_t init = opt.seed + 1;
  const std::size_t epochs = opt.effective_epochs();
  Recipe recipe;
  recipe.reference = "1-layer";
  recipe.candidates = {{"neuron", relu_net({10, 1}, init, epochs), all_columns(10)},
                       {"1-layer", relu_net({10, 8, 1}, init, epochs), all_columns(10)},
                       {"2-layers", relu_net({10, 8, 8, 1}, init, epochs), all_columns(10)},
                       {"3-layers", relu_net({10, 8, 8, 8, 1}, init, epochs), all_columns(10)}};
  recipe.pairs = {{"neuron", "1-layer"},
                  {"1-layer", "2-layers"},
                  {"1-layer", "3-layers"},
                  {"2-layers", "3-layers"}};
  return recipe;
}

Recipe make_recipe(const ExperimentOptions& opt) {
  if (opt.name == "simdata1") return ablation_recipe({8, 3, 7, 1}, opt);
  if (opt.name == "simdata2") return ablation_recipe({8, 2, 6, 1}, opt);
  if (opt.name == "simdata3") return poly_recipe();
  if (opt.name == "simdata4") return depth_recipe(opt);
  throw Error(ErrorKind::InvalidArgument, "unknown experiment '" + opt.name + "'");
}

Matrix columns_of(const Matrix& x, const std::vector<std::size_t>& kept) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(kept[j]));
  }
  return out;
}

double in_sample_rss(const Matrix& x, const Vector& y, const ModelSpec& spec) {
  const TrainedModel model = fit_model(x, y, spec);
  return (y - predict(model, x)).squaredNorm();
}

std::size_t parameter_count(const ModelSpec& spec, std::size_t d) {
  if (const auto* poly = std::get_if<PolySpec>(&spec)) return poly_basis_size(d, *poly);
  return net_parameter_count(std::get<NetSpec>(spec));
}

double population_variance(std::span<const double> r) {
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(r.size());
}

template <typename F>
std::optional<double> optional_p(F&& test) {
  try {
    return test().p_value;
  } catch (const Error&) {
    return std::nullopt;
  }
}

ModelRow summarize(const Candidate& candidate, ResidualSet residuals,
                   const ExperimentOptions& opt) {
  ModelRow row;
  row.label = candidate.label;
  row.model_id = residuals.model_id;
  const std::span<const double> r = residuals.residuals;
  double ss = 0.0;
  for (double v : r) ss += v * v;
  row.mse = ss / static_cast<double>(r.size());
  row.w1_delta = wasserstein_to_delta(r);
  row.variance = population_variance(r);
  row.bias_p = optional_p([&] { return bias_test(r); });
  row.independence_p = optional_p([&] {
    return dcor_perm_test(r, residuals.predictions, opt.effective_permutations(), opt.seed);
  });
  row.density = kde_density(r, opt.kde_grid);
  row.residuals = std::move(residuals);
  return row;
}

json optional_json(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

std::string optional_text(const std::optional<double>& value) {
  return value ? format_double(*value) : std::string("NA");
}

std::string short_text(const std::optional<double>& value) {
  return value ? fmt::format("{:.4g}", *value) : std::string("NA");
}

}  // namespace

void ExperimentOptions::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::InvalidArgument, "scale must be a positive finite number");
  }
  if (runs && *runs == 0) throw Error(ErrorKind::InvalidArgument, "runs must be positive");
  if (sample_size < 4) throw Error(ErrorKind::InvalidArgument, "sample size must be at least 4");
  if (folds < 2 || folds > sample_size) {
    throw Error(ErrorKind::InvalidArgument, "folds must lie in [2, n]");
  }
  if (kde_grid < 2) throw Error(ErrorKind::InvalidArgument, "KDE grid needs at least 2 points");
}

std::size_t ExperimentOptions::effective_runs() const {
  return runs ? *runs : scaled(kFullRuns, scale, 1);
}

std::size_t ExperimentOptions::effective_epochs() const {
  return scaled(kFullEpochs, scale, 1);
}

std::size_t ExperimentOptions::effective_permutations() const {
  return scaled(kFullPermutations, scale, kMinPermutations);
}

std::vector<std::string> experiment_names() {
  return {"simdata1", "simdata2", "simdata3", "simdata4"};
}

ExperimentResult run_experiment(const ExperimentOptions& opt) {
  opt.validate();
  const Recipe recipe = make_recipe(opt);
  // Only the polynomial recipe is cheap enough to repeat over many datasets.
  const bool repeated = opt.name == "simdata3";
  const std::size_t runs = repeated ? opt.effective_runs() : 1;

  ExperimentResult result;
  result.name = opt.name;
  result.reference_model = recipe.reference;
  result.parameters = {{"experiment", opt.name},
                       {"seed", opt.seed},
                       {"n", opt.sample_size},
                       {"scale", opt.scale},
                       {"runs", runs},
                       {"folds", opt.folds},
                       {"epochs", opt.effective_epochs()},
                       {"permutations", opt.effective_permutations()},
                       {"kde_grid", opt.kde_grid}};

  std::map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < recipe.candidates.size(); ++c) {
    position[recipe.candidates[c].label] = c;
  }
  std::vector<PairRow> pairs;
  for (const auto& [a, b] : recipe.pairs) {
    PairRow row;
    row.model_a = a;
    row.model_b = b;
    row.runs = runs;
    if (repeated) {
      row.f_p_mean = 0.0;
      row.f_reject_rate = 0.0;
    }
    pairs.push_back(std::move(row));
  }

  for (std::size_t run = 0; run < runs; ++run) {
    const std::uint64_t run_seed = opt.seed + run;
    const Dataset data = generate_dataset(opt.name, opt.sample_size, run_seed);
    std::vector<ResidualSet> residuals;
    std::vector<double> rss;
    for (const auto& candidate : recipe.candidates) {
      const Matrix x = columns_of(data.features, candidate.kept);
      residuals.push_back(kfold_residuals(x, data.target, candidate.spec, opt.folds, run_seed));
      if (repeated) rss.push_back(in_sample_rss(x, data.target, candidate.spec));
    }
    for (auto& pair : pairs) {
      const std::size_t a = position.at(pair.model_a);
      const std::size_t b = position.at(pair.model_b);
      const TestResult hc4 =
          mp_hc4_test(PairedSample(residuals[a].residuals, residuals[b].residuals));
      pair.hc4_p_mean += hc4.p_value / static_cast<double>(runs);
      if (hc4.p_value < kRejectAlpha) pair.hc4_reject_rate += 1.0 / static_cast<double>(runs);
      if (hc4.degenerate) ++pair.degenerate_runs;
      if (repeated) {
        const auto& small = recipe.candidates[a];
        const auto& big = recipe.candidates[b];
        const TestResult f = nested_f_test(rss[a], parameter_count(small.spec, small.kept.size()),
                                           rss[b], parameter_count(big.spec, big.kept.size()),
                                           opt.sample_size);
        *pair.f_p_mean += f.p_value / static_cast<double>(runs);
        if (f.p_value < kRejectAlpha) *pair.f_reject_rate += 1.0 / static_cast<double>(runs);
      }
    }
    if (run == 0) {
      for (std::size_t c = 0; c < recipe.candidates.size(); ++c) {
        result.models.push_back(summarize(recipe.candidates[c], residuals[c], opt));
      }
      const auto& reference = residuals[position.at(recipe.reference)].residuals;
      const EmpiricalDistribution reference_dist(reference);
      for (auto& row : result.models) {
        row.w1_reference =
            wasserstein1(EmpiricalDistribution(row.residuals.residuals), reference_dist);
      }
    }
  }
  result.pairs = std::move(pairs);
  return result;
}

std::vector<fs::path> write_experiment(const ExperimentResult& result, const json& manifest,
                                       const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + out_dir.string() + "'");
  std::vector<fs::path> written;

  json models = json::array();
  for (const auto& row : result.models) {
    const std::string residual_file = "residuals_" + row.label + ".csv";
    const std::string kde_file = "kde_" + row.label + ".csv";
    write_residuals(out_dir / residual_file, row.residuals,
                    {{"experiment", result.name}, {"label", row.label}});
    write_density(out_dir / kde_file, row.density);
    written.push_back(out_dir / residual_file);
    written.push_back(out_dir / kde_file);
    models.push_back({{"label", row.label},
                      {"model_id", row.model_id},
                      {"mse", row.mse},
                      {"w1_delta", row.w1_delta},
                      {"variance", row.variance},
                      {"w1_reference", optional_json(row.w1_reference)},
                      {"bias_p", optional_json(row.bias_p)},
                      {"independence_p", optional_json(row.independence_p)},
                      {"kde_bandwidth", row.density.bandwidth},
                      {"residuals_csv", residual_file},
                      {"kde_csv", kde_file}});
  }
  json pairs = json::array();
  for (const auto& pair : result.pairs) {
    pairs.push_back({{"model_a", pair.model_a},
                     {"model_b", pair.model_b},
                     {"runs", pair.runs},
                     {"hc4_p_mean", pair.hc4_p_mean},
                     {"hc4_reject_rate", pair.hc4_reject_rate},
                     {"degenerate_runs", pair.degenerate_runs},
                     {"f_p_mean", optional_json(pair.f_p_mean)},
                     {"f_reject_rate", optional_json(pair.f_reject_rate)}});
  }
  const json report = {{"manifest", manifest},
                       {"experiment", result.name},
                       {"reference_model", result.reference_model},
                       {"parameters", result.parameters},
                       {"models", models},
                       {"variance_tests", pairs}};
  write_json(out_dir / "report.json", report);
  written.push_back(out_dir / "report.json");

  {
    std::ofstream out(out_dir / "models.csv", std::ios::binary | std::ios::trunc);
    out << "model,model_id,mse,w1_delta,variance,w1_reference,bias_p,independence_p\n";
    for (const auto& row : result.models) {
      out << fmt::format("{},{},{},{},{},{},{},{}\n", row.label, row.model_id,
                         format_double(row.mse), format_double(row.w1_delta),
                         format_double(row.variance), optional_text(row.w1_reference),
                         optional_text(row.bias_p), optional_text(row.independence_p));
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing models.csv");
    written.push_back(out_dir / "models.csv");
  }
  {
    std::ofstream out(out_dir / "variance_tests.csv", std::ios::binary | std::ios::trunc);
    out << "model_a,model_b,runs,hc4_p_mean,hc4_reject_rate,f_p_mean,f_reject_rate\n";
    for (const auto& pair : result.pairs) {
      out << fmt::format("{},{},{},{},{},{},{}\n", pair.model_a, pair.model_b, pair.runs,
                         format_double(pair.hc4_p_mean), format_double(pair.hc4_reject_rate),
                         optional_text(pair.f_p_mean), optional_text(pair.f_reject_rate));
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing variance_tests.csv");
    written.push_back(out_dir / "variance_tests.csv");
  }
  {
    std::ofstream out(out_dir / "report.txt", std::ios::binary | std::ios::trunc);
    out << fmt::format("experiment {}  (seed {}, runs {}, scale {})\n\n", result.name,
                       result.parameters.at("seed").get<std::uint64_t>(),
                       result.parameters.at("runs").get<std::size_t>(),
                       result.parameters.at("scale").get<double>());
    out << fmt::format("{:<10} {:>12} {:>12} {:>12} {:>12} {:>10} {:>10}\n", "model", "MSE",
                       "W1(R,delta)", "variance", "W1(R,ref)", "bias p", "indep p");
    for (const auto& row : result.models) {
      out << fmt::format("{:<10} {:>12.5g} {:>12.5g} {:>12.5g} {:>12} {:>10} {:>10}\n", row.label,
                         row.mse, row.w1_delta, row.variance, short_text(row.w1_reference),
                         short_text(row.bias_p), short_text(row.independence_p));
    }
    out << fmt::format("\n{:<22} {:>12} {:>10} {:>12} {:>10}\n", "pair", "hc4 mean p",
                       "hc4 rej", "F mean p", "F rej");
    for (const auto& pair : result.pairs) {
      out << fmt::format("{:<22} {:>12.4g} {:>10.3f} {:>12} {:>10}\n",
                         pair.model_a + " vs " + pair.model_b, pair.hc4_p_mean,
                         pair.hc4_reject_rate, short_text(pair.f_p_mean),
                         short_text(pair.f_reject_rate));
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing report.txt");
    written.push_back(out_dir / "report.txt");
  }
  return written;
}

}  // namespace mpvar
