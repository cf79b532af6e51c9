#include "mpvar/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "mpvar/companion.hpp"
#include "mpvar/error.hpp"
#include "mpvar/random.hpp"

namespace mpvar {

namespace {

constexpr std::uint64_t kFeatureStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

std::vector<std::string> indexed_names(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back(fmt::format("x{}", j));
  return names;
}

Vector t_noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed, kNoiseStream);
  Vector noise(static_cast<Eigen::Index>(n));
  for (auto& value : noise) value = rng.student_t(3.0);
  return noise;
}

Matrix standard_normal_matrix(std::size_t n, std::size_t d, Rng& rng) {
  Matrix z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  // Row by row so prefixes of a longer sample agree with shorter ones.
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
  }
  return z;
}

Dataset logistic_cosine_dataset(std::size_t n, std::uint64_t seed, double rho,
                                const char* generator) {
  Dataset data;
  data.features = sample_equicorrelated_gaussian(n, 8, rho, seed);
  data.target = logistic_cosine_response(data.features) + t_noise(n, seed);
  data.names = indexed_names(8);
  data.meta = {{"generator", generator}, {"n", n},           {"seed", seed},
               {"rho", rho},             {"noise", "t3"},    {"features", 8}};
  return data;
}

}  // namespace

void Dataset::validate() const {
  if (features.rows() != target.size()) {
    throw Error(ErrorKind::DimensionMismatch, "feature rows and target length differ");
  }
  if (static_cast<std::size_t>(features.cols()) != names.size()) {
    throw Error(ErrorKind::DimensionMismatch, "column names do not match feature count");
  }
  if (!features.allFinite() || !target.allFinite()) {
    throw Error(ErrorKind::NonFinite, "dataset contains NaN or Inf");
  }
}

Matrix equicorrelation_cholesky(std::size_t d, double rho) {
  if (d == 0) {
    throw Error(ErrorKind::InvalidArgument, "dimension must be positive");
  }
  const double lower = d > 1 ? -1.0 / static_cast<double>(d - 1) : -1.0;
  if (!(rho > lower && rho < 1.0)) {
    throw Error(ErrorKind::InvalidCorrelation,
                fmt::format("rho = {} outside the positive-definite range ({}, 1) for d = {}",
                            rho, lower, d));
  }
  const auto dim = static_cast<Eigen::Index>(d);
  Matrix sigma = Matrix::Constant(dim, dim, rho);
  sigma.diagonal().setOnes();
  const Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidCorrelation, "equicorrelation matrix is not positive definite");
  }
  return llt.matrixL();
}

Matrix sample_equicorrelated_gaussian(std::size_t n, std::size_t d, double rho,
                                      std::uint64_t seed) {
  const Matrix l = equicorrelation_cholesky(d, rho);
  Rng rng(seed, kFeatureStream);
  return standard_normal_matrix(n, d, rng) * l.transpose();
}

std::vector<double> sample_t(double df, std::size_t n, std::uint64_t seed) {
  if (!(df > 0.0)) {
    throw Error(ErrorKind::InvalidDf, "t degrees of freedom must be positive");
  }
  Rng rng(seed);
  std::vector<double> draws(n);
  for (auto& value : draws) value = rng.student_t(df);
  return draws;
}

Vector logistic_cosine_response(const Matrix& x) {
  if (x.cols() < 4) {
    throw Error(ErrorKind::DimensionMismatch, "response needs at least four features");
  }
  const auto x1 = x.col(0).array();
  const auto x2 = x.col(1).array();
  const auto x3 = x.col(2).array();
  const auto x4 = x.col(3).array();
  const Eigen::ArrayXd first = 2.0 * x1 + 4.0 * x2 + 3.0 * x3 + 3.0 * x4;
  const Eigen::ArrayXd second = 2.0 * x1 + 4.0 * x2 - 3.0 * x3 - 3.0 * x4;
  return (3.0 / (1.0 + (-first).exp()) + 3.0 * second.cos()).matrix();
}

Vector quadratic_response(const Matrix& x) {
  if (x.cols() != 2) {
    throw Error(ErrorKind::DimensionMismatch, "quadratic response needs two features");
  }
  const auto x0 = x.col(0).array();
  const auto x1 = x.col(1).array();
  return (1.0 + x0 + x1 + x0 * x0 + x0 * x1 + x1 * x1).matrix();
}

Dataset simdata1(std::size_t n, std::uint64_t seed) {
  return logistic_cosine_dataset(n, seed, 0.5, "simdata1");
}

Dataset simdata2(std::size_t n, std::uint64_t seed) {
  return logistic_cosine_dataset(n, seed, 0.0, "simdata2");
}

Dataset simdata3(std::size_t n, std::uint64_t seed) {
  Dataset data;
  Rng rng(seed, kFeatureStream);
  data.features = standard_normal_matrix(n, 2, rng);
  data.target = quadratic_response(data.features) + t_noise(n, seed);
  data.names = indexed_names(2);
  data.meta = {{"generator", "simdata3"}, {"n", n}, {"seed", seed}, {"noise", "t3"},
               {"features", 2}};
  return data;
}

NetSpec simdata4_generator_spec() {
  NetSpec spec;
  spec.layer_sizes = {10, 8, 8, 1};
  spec.activations = {Activation::relu, Activation::relu};
  spec.init_seed = 0;
  return spec;
}

Dataset simdata4(std::size_t n, std::uint64_t seed, const NetSpec& generator_spec) {
  if (generator_spec.layer_sizes.front() != 10 || generator_spec.layer_sizes.back() != 1) {
    throw Error(ErrorKind::DimensionMismatch, "generator network must map 10 inputs to 1 output");
  }
  if (n < 2) {
    throw Error(ErrorKind::SampleTooSmall, "simdata4 needs n >= 2 to estimate s_y");
  }
  return simdata4_with_parameters(n, seed, generator_spec, glorot_normal_init(generator_spec));
}

Dataset simdata4_with_parameters(std::size_t n, std::uint64_t seed, const NetSpec& generator_spec,
                                 const Vector& parameters) {
  Dataset data;
  Rng rng(seed, kFeatureStream);
  data.features = standard_normal_matrix(n, 10, rng);
  const Vector signal = net_forward_batch(generator_spec, parameters, data.features).col(0);
  const double mean = signal.mean();
  const double s_y = std::sqrt((signal.array() - mean).square().sum() /
                               static_cast<double>(signal.size() - 1));
  if (!(s_y > 0.0)) {
    throw Error(ErrorKind::DegenerateGenerator, "generator network output is constant");
  }
  Rng noise_rng(seed, kNoiseStream);
  data.target = signal;
  for (auto& value : data.target) value += 0.05 * s_y * noise_rng.normal();
  data.names = indexed_names(10);
  data.meta = {{"generator", "simdata4"},
               {"n", n},
               {"seed", seed},
               {"generator_layers", generator_spec.layer_sizes},
               {"generator_init_seed", generator_spec.init_seed},
               {"noise", "normal"},
               {"noise_sd", 0.05 * s_y},
               {"s_y", s_y},
               {"features", 10}};
  return data;
}

Dataset generate_dataset(const std::string& name, std::size_t n, std::uint64_t seed) {
  if (name == "simdata1") return simdata1(n, seed);
  if (name == "simdata2") return simdata2(n, seed);
  if (name == "simdata3") return simdata3(n, seed);
  if (name == "simdata4") return simdata4(n, seed);
  throw Error(ErrorKind::InvalidArgument, "unknown generator '" + name + "'");
}

Dataset select_features(const Dataset& data, std::span<const std::size_t> kept) {
  if (kept.empty()) {
    throw Error(ErrorKind::EmptyFeatureSet, "at least one feature must be kept");
  }
  Dataset out;
  out.target = data.target;
  out.meta = data.meta;
  out.features.resize(data.features.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (kept[k] >= data.cols()) {
      throw Error(ErrorKind::InvalidArgument, fmt::format("feature index {} out of range", kept[k]));
    }
    out.features.col(static_cast<Eigen::Index>(k)) =
        data.features.col(static_cast<Eigen::Index>(kept[k]));
    out.names.push_back(data.names[kept[k]]);
  }
  out.meta["kept_features"] = std::vector<std::size_t>(kept.begin(), kept.end());
  return out;
}

TukeyFence tukey_fence(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = quantile_sorted(sorted, 0.25);
  const double q3 = quantile_sorted(sorted, 0.75);
  const double iqr = q3 - q1;
  return {q1 - 1.5 * iqr, q3 + 1.5 * iqr};
}

Dataset preprocess_tabular(const Dataset& raw, const std::vector<std::string>& drop_columns,
                           bool log_target, std::size_t tukey_max_outliers) {
  raw.validate();
  const std::set<std::string> dropped(drop_columns.begin(), drop_columns.end());
  for (const auto& name : dropped) {
    if (std::find(raw.names.begin(), raw.names.end(), name) == raw.names.end()) {
      throw Error(ErrorKind::UnknownColumn, "no column named '" + name + "'");
    }
  }
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < raw.cols(); ++j) {
    if (!dropped.contains(raw.names[j])) kept.push_back(j);
  }
  Dataset data = select_features(raw, kept);
  data.meta.erase("kept_features");

  if (log_target) {
    if ((data.target.array() <= 0.0).any()) {
      throw Error(ErrorKind::NonPositiveTarget, "log transform needs a strictly positive target");
    }
    data.target = data.target.array().log().matrix();
  }

  std::size_t removed = 0;
  if (tukey_max_outliers > 0 && data.rows() > 0) {
    std::vector<std::size_t> outliers(data.rows(), 0);
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
      const Vector column = data.features.col(j);
      const TukeyFence fence = tukey_fence(std::span<const double>(column.data(), column.size()));
      for (Eigen::Index i = 0; i < column.size(); ++i) {
        if (column[i] < fence.lower || column[i] > fence.upper) ++outliers[i];
      }
    }
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < outliers.size(); ++i) {
      if (outliers[i] < tukey_max_outliers) rows.push_back(static_cast<Eigen::Index>(i));
    }
    removed = data.rows() - rows.size();
    data.features = Matrix(data.features(rows, Eigen::all));
    data.target = Vector(data.target(rows));
  }
  data.meta["preprocess"] = {{"dropped_columns", drop_columns},
                             {"log_target", log_target},
                             {"tukey_max_outliers", tukey_max_outliers},
                             {"rows_removed", removed}};
  return data;
}

}  // namespace mpvar
