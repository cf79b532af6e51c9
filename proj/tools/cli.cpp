#include "cli.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "mpvar/datagen.hpp"
#include "mpvar/error.hpp"
#include "mpvar/experiment.hpp"
#include "mpvar/montecarlo.hpp"
#include "mpvar/serialize.hpp"

namespace mpvar::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kGenerators{"simdata1", "simdata2", "simdata3", "simdata4"};
const std::vector<std::string> kDiagnostics{"all", "bias", "paired", "dcor", "w1", "kde"};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
      return kIo;
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidDf:
    case ErrorKind::InvalidCorrelation:
    case ErrorKind::InvalidNesting:
      return kUsage;
    case ErrorKind::SingularBasis:
    case ErrorKind::NonFiniteLoss:
    case ErrorKind::EmptyOutOfBag:
    case ErrorKind::ModelFitFailed:
      return kModelFailure;
    default:
      return kDataContract;
  }
}

// Conditions where the sample itself is uninformative; reported, not fatal.
bool is_degenerate_kind(ErrorKind kind) {
  return kind == ErrorKind::DegenerateSample || kind == ErrorKind::DegenerateCorrelation ||
         kind == ErrorKind::SingularDesign || kind == ErrorKind::LeverageOne;
}

std::string hex(const unsigned char* bytes, unsigned length) {
  std::string text;
  for (unsigned i = 0; i < length; ++i) text += fmt::format("{:02x}", bytes[i]);
  return text;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw Error(ErrorKind::Io, "SHA-256 unavailable");
    }
  }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  ~Sha256() { EVP_MD_CTX_free(ctx_); }

  void update(const char* data, std::size_t size) { EVP_DigestUpdate(ctx_, data, size); }

  std::string finish() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned length = 0;
    EVP_DigestFinal_ex(ctx_, digest.data(), &length);
    return hex(digest.data(), length);
  }

 private:
  EVP_MD_CTX* ctx_;
};

json timestamp() {
  // Left null unless pinned, so reruns stay byte-identical.
  const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
  if (epoch == nullptr || *epoch == '\0') return nullptr;
  char* end = nullptr;
  const long long seconds = std::strtoll(epoch, &end, 10);
  if (*end != '\0') return nullptr;
  const std::time_t t = static_cast<std::time_t>(seconds);
  std::tm utc{};
  gmtime_r(&t, &utc);
  std::array<char, 32> text{};
  std::strftime(text.data(), text.size(), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return std::string(text.data());
}

// Output locations are excluded so that reruns into a different directory
// produce identical reports.
bool is_recorded_parameter(const std::string& name) {
  return name != "help" && name != "config" && name != "out" && name != "kde-dir" &&
         name != "p-values" && name != "workers";
}

json make_manifest(const CLI::App& sub, const json& seeds, const std::vector<fs::path>& inputs) {
  json parameters = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    std::string name = opt->get_single_name();
    if (!is_recorded_parameter(name)) continue;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      parameters[name] = results.size() == 1 ? json(results.front()) : json(results);
    } else {
      parameters[name] = opt->get_default_str();
    }
  }
  json digests = json::object();
  for (const auto& input : inputs) {
    digests[input.filename().string()] = sha256_file(input);
  }
  return {{"command", sub.get_name()},
          {"parameters", parameters},
          {"seeds", seeds},
          {"library_version", MPVAR_VERSION},
          {"input_digests", digests},
          {"timestamp", timestamp()}};
}

// ---- shared option groups ----

struct DataFlags {
  std::string path;
  std::string target_column = "target";
  std::vector<std::string> features;

  void add(CLI::App* sub) {
    sub->add_option("--data", path, "Dataset CSV")->required();
    sub->add_option("--target-column", target_column, "Name of the target column");
    sub->add_option("--features", features, "Feature columns to keep (default: all)")
        ->delimiter(',');
  }

  [[nodiscard]] Dataset load() const {
    Dataset data = read_dataset(path, target_column);
    if (features.empty()) return data;
    std::vector<std::size_t> kept;
    for (const auto& name : features) {
      const auto it = std::find(data.names.begin(), data.names.end(), name);
      if (it == data.names.end()) {
        throw Error(ErrorKind::UnknownColumn, "no feature column named '" + name + "'");
      }
      kept.push_back(static_cast<std::size_t>(it - data.names.begin()));
    }
    return select_features(data, kept);
  }
};

struct ModelFlags {
  std::string family = "poly";
  int degree = 1;
  bool no_interactions = false;
  std::vector<std::size_t> hidden;
  std::string activation = "relu";
  std::uint64_t init_seed = 0;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double learning_rate = 0.001;
  std::string model_file;

  void add(CLI::App* sub) {
    sub->add_option("--family", family, "Model family")
        ->check(CLI::IsMember({"poly", "net"}));
    sub->add_option("--degree", degree, "Polynomial degree")->check(CLI::Range(1, 20));
    sub->add_flag("--no-interactions", no_interactions, "Pure powers only (no cross terms)");
    sub->add_option("--hidden", hidden, "Hidden layer widths, e.g. 3,7")->delimiter(',');
    sub->add_option("--activation", activation, "Hidden activation")
        ->check(CLI::IsMember({"relu", "tanh", "logistic", "linear"}));
    sub->add_option("--init-seed", init_seed, "Weight initialization seed");
    sub->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
    sub->add_option("--batch-size", batch_size, "Minibatch size")->check(CLI::PositiveNumber);
    sub->add_option("--learning-rate", learning_rate, "Adam step size")
        ->check(CLI::PositiveNumber);
    sub->add_option("--model-file", model_file,
                    "Model JSON (trained model or bare spec); overrides the flags above");
  }

  [[nodiscard]] ModelSpec resolve(std::size_t input_dim) const {
    if (!model_file.empty()) {
      const json doc = read_json(model_file);
      ModelSpec spec = doc.contains("format") ? trained_model_from_json(doc).spec
                                              : model_spec_from_json(doc);
      if (const auto* net = std::get_if<NetSpec>(&spec)) {
        if (net->layer_sizes.front() != input_dim) {
          throw Error(ErrorKind::DimensionMismatch,
                      fmt::format("model expects {} inputs, data has {}",
                                  net->layer_sizes.front(), input_dim));
        }
      }
      return spec;
    }
    if (family == "poly") return PolySpec{degree, !no_interactions};
    NetSpec net;
    net.layer_sizes.assign({input_dim});
    net.layer_sizes.insert(net.layer_sizes.end(), hidden.begin(), hidden.end());
    net.layer_sizes.push_back(1);
    net.activations.assign(hidden.size(), parse_activation(activation));
    net.init_seed = init_seed;
    net.epochs = epochs;
    net.batch_size = batch_size;
    net.learning_rate = learning_rate;
    net.validate();
    return net;
  }
};

void emit_json(const json& doc, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << doc.dump(2) << '\n';
  } else {
    write_json(out_path, doc);
  }
}

// ---- subcommands ----

struct GenerateCmd {
  std::string generator;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("generate", "Generate a synthetic dataset");
    sub->add_option("generator", generator, "Generator name")
        ->required()
        ->check(CLI::IsMember(kGenerators));
    sub->add_option("--n", n, "Number of rows")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Random seed")->envname("MPVAR_SEED");
    sub->add_option("--out", out, "Output CSV (a .json sidecar is written next to it)")
        ->required();
    sub->callback([this, sub] {
      Dataset data = generate_dataset(generator, n, seed);
      data.meta["manifest"] = make_manifest(*sub, {{"seed", seed}}, {});
      write_dataset(out, data);
    });
  }
};

struct PreprocessCmd {
  DataFlags data;
  std::vector<std::string> drop;
  bool log_target = false;
  std::size_t tukey_max_outliers = 0;
  std::string out;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("preprocess", "Drop columns, log target, Tukey outlier filter");
    data.add(sub);
    sub->add_option("--drop", drop, "Columns to remove")->delimiter(',');
    sub->add_flag("--log-target", log_target, "Replace the target by its natural log");
    sub->add_option("--tukey-max-outliers", tukey_max_outliers,
                    "Drop rows with at least this many features outside the Tukey fences "
                    "(0 keeps every row)");
    sub->add_option("--out", out, "Output CSV")->required();
    sub->callback([this, sub] {
      Dataset cleaned = preprocess_tabular(data.load(), drop, log_target, tukey_max_outliers);
      cleaned.meta["manifest"] = make_manifest(*sub, json::object(), {data.path});
      write_dataset(out, cleaned);
    });
  }
};

struct TrainCmd {
  DataFlags data;
  ModelFlags model;
  std::string out;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("train", "Fit a model on a whole dataset");
    data.add(sub);
    model.add(sub);
    sub->add_option("--out", out, "Output model JSON")->required();
    sub->callback([this, sub] {
      const Dataset d = data.load();
      const ModelSpec spec = model.resolve(d.cols());
      json doc = to_json(fit_model(d.features, d.target, spec));
      doc["model_id"] = model_id(spec);
      doc["feature_names"] = d.names;
      doc["manifest"] = make_manifest(*sub, {{"init_seed", model.init_seed}}, {data.path});
      write_json(out, doc);
    });
  }
};

struct ResidualsCmd {
  DataFlags data;
  ModelFlags model;
  std::string scheme = "kfold";
  std::size_t k = 10;
  std::size_t rounds = 0;
  std::size_t max_rounds = 100000;
  std::uint64_t seed = 0;
  std::string out;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("residuals", "Out-of-sample residuals by k-fold or OOB");
    data.add(sub);
    model.add(sub);
    sub->add_option("--scheme", scheme, "Residual scheme")
        ->check(CLI::IsMember({"kfold", "oob", "oob_bootstrap"}));
    sub->add_option("--k", k, "Number of folds")->check(CLI::Range(2, 1 << 30));
    sub->add_option("--rounds", rounds, "Bootstrap rounds (0 means n)");
    sub->add_option("--max-rounds", max_rounds, "Refuse bootstrap runs longer than this");
    sub->add_option("--seed", seed, "Random seed")->envname("MPVAR_SEED");
    sub->add_option("--out", out, "Output CSV (index,residual)")->required();
    sub->callback([this, sub] {
      const Dataset d = data.load();
      const ModelSpec spec = model.resolve(d.cols());
      const ResidualScheme which = parse_residual_scheme(scheme);
      const std::size_t oob_rounds = rounds == 0 ? d.rows() : rounds;
      if (which == ResidualScheme::oob_bootstrap && oob_rounds > max_rounds) {
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("{} bootstrap rounds exceed --max-rounds {}", oob_rounds,
                                max_rounds));
      }
      const ResidualSet set =
          which == ResidualScheme::kfold
              ? kfold_residuals(d.features, d.target, spec, k, seed)
              : oob_bootstrap_residuals(d.features, d.target, spec, oob_rounds, seed);
      const json spec_doc = to_json(spec);
      write_residuals(out, set,
                      {{"model_spec", spec_doc},
                       {"model_digest", sha256_text(spec_doc.dump())},
                       {"manifest", make_manifest(*sub, {{"seed", seed}}, {data.path})}});
    });
  }
};

struct TestCmd {
  std::string path_a;
  std::string path_b;
  std::string method = "hc4";
  std::string alternative = "two-sided";
  std::vector<std::string> diagnostics;
  std::size_t permutations = 999;
  std::uint64_t seed = 0;
  std::string independence_mode = "fitted";
  std::string data_path;
  std::string target_column = "target";
  std::string kde_dir;
  std::string out;
  std::ostream* stdout_stream = nullptr;

  void add(CLI::App& app, std::ostream& out_stream) {
    stdout_stream = &out_stream;
    auto* sub = app.add_subcommand("test", "Residual variance equality test with diagnostics");
    sub->add_option("residuals_a", path_a, "Residual CSV of model A")->required();
    sub->add_option("residuals_b", path_b, "Residual CSV of model B")->required();
    sub->add_option("--method", method, "Variance test")
        ->check(CLI::IsMember({"classic", "hc4"}));
    sub->add_option("--alternative", alternative, "two-sided, less (var A < var B) or greater")
        ->check(CLI::IsMember({"two-sided", "two_sided", "less", "greater"}));
    sub->add_option("--diagnostics", diagnostics, "Extra outputs: all,bias,paired,dcor,w1,kde")
        ->delimiter(',')
        ->check(CLI::IsMember(kDiagnostics));
    sub->add_option("--permutations", permutations, "Permutations for the dCor test")
        ->check(CLI::Range(99, 1 << 30));
    sub->add_option("--seed", seed, "Permutation seed")->envname("MPVAR_SEED");
    sub->add_option("--independence", independence_mode,
                    "What the dcor diagnostic pairs residuals with: fitted values, each "
                    "feature column, or the lag-1 residuals")
        ->check(CLI::IsMember({"fitted", "features", "lag1"}));
    sub->add_option("--data", data_path,
                    "Dataset the residuals came from (needed by the fitted and features modes)");
    sub->add_option("--target-column", target_column, "Target column of --data");
    sub->add_option("--kde-dir", kde_dir, "Directory for KDE CSVs (default: next to --out)");
    sub->add_option("--out", out, "Report JSON (default: standard output)");
    sub->callback([this, sub] { execute(*sub); });
  }

  [[nodiscard]] bool wants(const std::string& name) const {
    return std::find(diagnostics.begin(), diagnostics.end(), name) != diagnostics.end() ||
           std::find(diagnostics.begin(), diagnostics.end(), "all") != diagnostics.end();
  }

  void execute(const CLI::App& sub) {
    const ResidualSet a = read_residuals(path_a);
    const ResidualSet b = read_residuals(path_b);
    if (a.residuals.size() != b.residuals.size()) {
      throw Error(ErrorKind::LengthMismatch,
                  fmt::format("residual files have {} and {} rows", a.residuals.size(),
                              b.residuals.size()));
    }
    if (wants("dcor") && independence_mode != "lag1" && data_path.empty()) {
      throw Error(ErrorKind::InvalidArgument,
                  "the dcor diagnostic in " + independence_mode + " mode needs --data");
    }
    const Alternative alt = parse_alternative(alternative);
    const VarianceTest test = parse_variance_test(method);

    std::vector<fs::path> inputs{path_a, path_b};
    if (!data_path.empty()) inputs.emplace_back(data_path);
    json report = {{"manifest", make_manifest(sub, {{"seed", seed}}, inputs)},
                   {"n", a.residuals.size()},
                   {"indices_aligned", a.indices == b.indices}};
    report["variance_test"] = guarded(
        [&] { return run_variance_test(test, PairedSample(a.residuals, b.residuals), alt); },
        method == "hc4" ? Method::hc4_mp : Method::classic_mp, alt);

    json diag = json::object();
    if (wants("bias")) {
      diag["bias_a"] = guarded([&] { return bias_test(a.residuals); }, Method::t_bias,
                               Alternative::two_sided);
      diag["bias_b"] = guarded([&] { return bias_test(b.residuals); }, Method::t_bias,
                               Alternative::two_sided);
    }
    if (wants("paired")) {
      diag["paired_t"] = guarded([&] { return paired_t_test(a.residuals, b.residuals); },
                                 Method::t_bias, Alternative::two_sided);
    }
    if (wants("w1")) {
      diag["w1_ab"] = wasserstein1(EmpiricalDistribution(a.residuals),
                                   EmpiricalDistribution(b.residuals));
      diag["w1_delta_a"] = wasserstein_to_delta(a.residuals);
      diag["w1_delta_b"] = wasserstein_to_delta(b.residuals);
    }
    if (wants("dcor")) {
      const Dataset d = data_path.empty() ? Dataset{} : read_dataset(data_path, target_column);
      diag["independence_mode"] = independence_mode;
      diag["independence_a"] = independence(a, d);
      diag["independence_b"] = independence(b, d);
    }
    if (wants("kde")) {
      fs::path dir = kde_dir.empty() ? fs::path(out).parent_path() : fs::path(kde_dir);
      if (dir.empty()) dir = ".";
      const fs::path file_a = dir / (fs::path(path_a).stem().string() + "_kde.csv");
      const fs::path file_b = dir / (fs::path(path_b).stem().string() + "_kde.csv");
      write_density(file_a, kde_density(a.residuals));
      write_density(file_b, kde_density(b.residuals));
      diag["kde_a"] = file_a.filename().string();
      diag["kde_b"] = file_b.filename().string();
    }
    if (!diag.empty()) report["diagnostics"] = diag;
    emit_json(report, out, *stdout_stream);
  }

  template <typename F>
  static json guarded(F&& test, Method method, Alternative alt) {
    try {
      return to_json(test());
    } catch (const Error& e) {
      if (!is_degenerate_kind(e.kind())) throw;
      return {{"method", std::string(to_string(method))},
              {"alternative", std::string(to_string(alt))},
              {"statistic", nullptr},
              {"p_value", nullptr},
              {"degenerate", true},
              {"error", e.what()}};
    }
  }

  [[nodiscard]] json dcor(std::span<const double> x, std::span<const double> y) const {
    return guarded([&] { return dcor_perm_test(x, y, permutations, seed); }, Method::dcor_perm,
                   Alternative::greater);
  }

  [[nodiscard]] json independence(const ResidualSet& set, const Dataset& d) const {
    const std::vector<double>& r = set.residuals;
    if (independence_mode == "lag1") {
      if (r.size() < 5) throw Error(ErrorKind::SampleTooSmall, "lag-1 mode needs 5 residuals");
      return dcor(std::span(r).subspan(1), std::span(r).first(r.size() - 1));
    }
    for (std::size_t index : set.indices) {
      if (index >= d.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "residual index beyond the dataset");
      }
    }
    const auto row = [&](std::size_t k) { return static_cast<Eigen::Index>(set.indices[k]); };
    if (independence_mode == "fitted") {
      std::vector<double> fitted;
      for (std::size_t k = 0; k < r.size(); ++k) fitted.push_back(d.target[row(k)] - r[k]);
      return dcor(r, fitted);
    }
    json per_feature = json::object();
    for (std::size_t j = 0; j < d.cols(); ++j) {
      std::vector<double> feature;
      for (std::size_t k = 0; k < r.size(); ++k) {
        feature.push_back(d.features(row(k), static_cast<Eigen::Index>(j)));
      }
      per_feature[d.names[j]] = dcor(r, feature);
    }
    return per_feature;
  }
};

struct ExperimentCmd {
  ExperimentOptions options;
  std::optional<std::size_t> runs;
  std::string out;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("experiment", "Reproduce a simulated experiment");
    sub->add_option("name", options.name, "Experiment name")
        ->required()
        ->check(CLI::IsMember(experiment_names()));
    sub->add_option("--seed", options.seed, "Base seed")->envname("MPVAR_SEED");
    sub->add_option("--scale", options.scale, "Shrink runs, epochs and permutations")
        ->check(CLI::PositiveNumber);
    sub->add_option("--runs", runs, "Monte Carlo runs (simdata3; default 500 x scale)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--n", options.sample_size, "Rows per dataset")->check(CLI::Range(4, 1 << 30));
    sub->add_option("--folds", options.folds, "Cross-validation folds")
        ->check(CLI::Range(2, 1 << 30));
    sub->add_option("--out", out, "Output directory")->required();
    sub->callback([this, sub] {
      options.runs = runs;
      const ExperimentResult result = run_experiment(options);
      const json manifest = make_manifest(*sub, {{"seed", options.seed}}, {});
      write_experiment(result, manifest, out);
    });
  }
};

struct MonteCarloCmd {
  McConfig cfg;
  std::string test = "hc4";
  std::string alternative = "two-sided";
  std::string x_dist = "normal";
  std::string y_dist = "normal";
  std::vector<double> ratios;
  std::string p_values;
  std::string out;
  std::ostream* stdout_stream = nullptr;

  void add(CLI::App& app, std::ostream& out_stream) {
    stdout_stream = &out_stream;
    cfg.workers = std::max(1U, std::thread::hardware_concurrency());
    auto* sub = app.add_subcommand("montecarlo", "Rejection rate of a variance test by simulation");
    sub->add_option("--reps", cfg.replications, "Replications")->check(CLI::PositiveNumber);
    sub->add_option("--n", cfg.sample_size, "Sample size per replication")
        ->check(CLI::Range(3, 1 << 30));
    sub->add_option("--alpha", cfg.alpha, "Significance level");
    sub->add_option("--test", test, "Variance test")->check(CLI::IsMember({"classic", "hc4"}));
    sub->add_option("--alternative", alternative, "two-sided, less or greater")
        ->check(CLI::IsMember({"two-sided", "two_sided", "less", "greater"}));
    sub->add_option("--x-dist", x_dist, "Distribution of x: normal[:sd] or t:df[:sd]");
    sub->add_option("--y-dist", y_dist, "Distribution of y: normal[:sd] or t:df[:sd]");
    sub->add_option("--seed", cfg.base_seed, "Base seed")->envname("MPVAR_SEED");
    sub->add_option("--workers", cfg.workers, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--ratios", ratios,
                    "Also trace a power curve: y variance multiplied by each ratio")
        ->delimiter(',');
    sub->add_option("--p-values", p_values, "Also write per-replication p-values to this CSV");
    sub->add_option("--out", out, "Report JSON (default: standard output)");
    sub->callback([this, sub] {
      cfg.test = parse_variance_test(test);
      cfg.alternative = parse_alternative(alternative);
      cfg.null_generator = parse_distribution(x_dist);
      cfg.alt_generator = parse_distribution(y_dist);
      cfg.keep_p_values = !p_values.empty();
      cfg.validate();
      const McReport report = estimate_rejection_rate(cfg);
      if (!p_values.empty()) write_p_values(p_values, report);
      json doc = {{"manifest", make_manifest(*sub, {{"base_seed", cfg.base_seed}}, {})},
                  {"config", to_json(cfg)},
                  {"report", to_json(report)}};
      if (!ratios.empty()) {
        McConfig curve_cfg = cfg;
        curve_cfg.keep_p_values = false;
        const auto curve = power_curve(curve_cfg, ratios);
        json points = json::array();
        for (std::size_t i = 0; i < curve.size(); ++i) {
          json point = to_json(curve[i]);
          point["variance_ratio"] = ratios[i];
          points.push_back(point);
        }
        doc["power_curve"] = points;
      }
      emit_json(doc, out, *stdout_stream);
    });
  }
};

bool given_on_command_line(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  return std::any_of(args.begin(), args.end(), [&](const std::string& arg) {
    return arg == flag || arg.rfind(flag + "=", 0) == 0;
  });
}

// Splices `--key=value` for every config entry not already given as a flag,
// right after the subcommand name.
std::vector<std::string> expand_config(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (config_path.empty()) return args;
  std::ifstream in(config_path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config file '" + config_path + "'");

  std::vector<std::string> injected;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidArgument,
                  fmt::format("{}:{}: expected key = value", config_path, line_number));
    }
    const auto strip = [](std::string text) {
      const auto b = text.find_first_not_of(" \t\r\"");
      const auto e = text.find_last_not_of(" \t\r\"");
      return b == std::string::npos ? std::string() : text.substr(b, e - b + 1);
    };
    std::string key = strip(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    if (!given_on_command_line(args, key)) {
      injected.push_back("--" + key + "=" + strip(line.substr(eq + 1)));
    }
  }
  const auto sub = std::find_if(args.begin(), args.end(),
                                [](const std::string& arg) { return arg.rfind('-', 0) != 0; });
  const auto insert_at = sub == args.end() ? args.end() : sub + 1;
  args.insert(insert_at, injected.begin(), injected.end());
  return args;
}

}  // namespace

std::string sha256_text(const std::string& text) {
  Sha256 hash;
  hash.update(text.data(), text.size());
  return hash.finish();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  Sha256 hash;
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    hash.update(buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  return hash.finish();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Residual variance equality testing for model comparison", "mpvar"};
  app.set_version_flag("--version", MPVAR_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  GenerateCmd generate;
  PreprocessCmd preprocess;
  TrainCmd train;
  ResidualsCmd residuals;
  TestCmd test;
  ExperimentCmd experiment;
  MonteCarloCmd montecarlo;
  generate.add(app);
  preprocess.add(app);
  train.add(app);
  residuals.add(app);
  test.add(app, out);
  experiment.add(app);
  montecarlo.add(app, out);
  for (CLI::App* sub : app.get_subcommands({})) {
    // Consumed by expand_config before parsing; declared for --help.
    sub->add_option("--config", "Flat key = value file mirroring the flags; flags win");
  }

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    return kOk;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::FileError& e) {
    err << e.what() << '\n';
    return kIo;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"mpvar"};
  for (const auto& arg : args) argv.push_back(arg.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mpvar::cli
