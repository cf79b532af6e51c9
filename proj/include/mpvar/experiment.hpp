#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpvar/companion.hpp"
#include "mpvar/models.hpp"
#include "mpvar/resample.hpp"

namespace mpvar {

struct ExperimentOptions {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t sample_size = 1000;
  /// Shrinks epochs, Monte Carlo runs and permutation counts.
  double scale = 1.0;
  /// Monte Carlo runs for simdata3; defaults to round(500 * scale).
  std::optional<std::size_t> runs;
  std::size_t folds = 10;
  std::size_t kde_grid = 512;

  void validate() const;
  [[nodiscard]] std::size_t effective_runs() const;
  [[nodiscard]] std::size_t effective_epochs() const;
  [[nodiscard]] std::size_t effective_permutations() const;
};

/// One row of the per-model table.
struct ModelRow {
  std::string label;
  std::string model_id;
  double mse = 0.0;
  double w1_delta = 0.0;
  /// Population variance of the residuals.
  double variance = 0.0;
  /// W1 between this model's residuals and the reference model's.
  std::optional<double> w1_reference;
  std::optional<double> bias_p;
  std::optional<double> independence_p;
  ResidualSet residuals;
  DensityCurve density;
};

/// One pairwise comparison, averaged over Monte Carlo runs when there are
/// several.
struct PairRow {
  std::string model_a;
  std::string model_b;
  std::size_t runs = 0;
  double hc4_p_mean = 0.0;
  double hc4_reject_rate = 0.0;
  std::size_t degenerate_runs = 0;
  std::optional<double> f_p_mean;
  std::optional<double> f_reject_rate;
};

struct ExperimentResult {
  std::string name;
  std::string reference_model;
  std::vector<ModelRow> models;
  std::vector<PairRow> pairs;
  nlohmann::json parameters;
};

/// Runs a named recipe (simdata1 .. simdata4). Throws InvalidArgument on an
/// unknown name.
[[nodiscard]] ExperimentResult run_experiment(const ExperimentOptions& options);

/// Writes report.json (with `manifest` embedded), report.txt, models.csv,
/// variance_tests.csv and per-model residual and KDE CSVs into `out_dir`.
/// Returns the written paths.
std::vector<std::filesystem::path> write_experiment(const ExperimentResult& result,
                                                    const nlohmann::json& manifest,
                                                    const std::filesystem::path& out_dir);

[[nodiscard]] std::vector<std::string> experiment_names();

}  // namespace mpvar
