#include "mpvar/resample.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "mpvar/error.hpp"
#include "mpvar/random.hpp"

namespace mpvar {

namespace {

constexpr std::uint64_t kFoldStream = 0xF01DULL;
constexpr std::size_t kMaxOobRetries = 100;

Matrix take_rows(const Matrix& x, const std::vector<Eigen::Index>& rows) {
  return x(rows, Eigen::all);
}

Vector take_rows(const Vector& y, const std::vector<Eigen::Index>& rows) { return y(rows); }

void check_shapes(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "features and target row counts differ");
  }
}

// Re-raise a model failure as ModelFitFailed naming the fold or round.
[[noreturn]] void rethrow_fit_failure(const Error& error, std::string_view unit, std::size_t id) {
  throw Error(ErrorKind::ModelFitFailed, fmt::format("{} {}: {}", unit, id, error.what()));
}

}  // namespace

std::string_view to_string(ResidualScheme scheme) noexcept {
  return scheme == ResidualScheme::kfold ? "kfold" : "oob_bootstrap";
}

ResidualScheme parse_residual_scheme(std::string_view text) {
  if (text == "kfold") return ResidualScheme::kfold;
  if (text == "oob" || text == "oob_bootstrap") return ResidualScheme::oob_bootstrap;
  throw Error(ErrorKind::InvalidArgument, "unknown residual scheme '" + std::string(text) + "'");
}

std::size_t ResidualSet::coverage_spread() const {
  if (coverage.empty()) return 0;
  const auto [lo, hi] = std::minmax_element(coverage.begin(), coverage.end());
  return *hi - *lo;
}

std::vector<std::size_t> kfold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw Error(ErrorKind::InvalidArgument,
                fmt::format("k-fold needs 2 <= k <= n (k = {}, n = {})", k, n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, kFoldStream);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> folds(n);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t position = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t s = 0; s < size; ++s) folds[order[position++]] = f;
  }
  return folds;
}

ResidualSet kfold_residuals(const Matrix& x, const Vector& y, const ModelSpec& spec,
                            std::span<const std::size_t> folds, std::size_t k) {
  check_shapes(x, y);
  const auto n = static_cast<std::size_t>(y.size());
  if (folds.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "one fold label per row is required");
  }
  ResidualSet out;
  out.scheme = ResidualScheme::kfold;
  out.model_id = model_id(spec);
  out.residuals.assign(n, 0.0);
  out.predictions.assign(n, 0.0);
  out.indices.resize(n);
  std::iota(out.indices.begin(), out.indices.end(), std::size_t{0});
  out.coverage.assign(n, 0);

  for (std::size_t f = 0; f < k; ++f) {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
    for (std::size_t i = 0; i < n; ++i) {
      (folds[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    }
    if (test.empty()) continue;
    try {
      const TrainedModel model = fit_model(take_rows(x, train), take_rows(y, train), spec);
      const Vector predicted = predict(model, take_rows(x, test));
      for (std::size_t t = 0; t < test.size(); ++t) {
        const auto i = static_cast<std::size_t>(test[t]);
        out.predictions[i] = predicted[static_cast<Eigen::Index>(t)];
        out.residuals[i] = y[test[t]] - out.predictions[i];
        ++out.coverage[i];
      }
    } catch (const Error& error) {
      rethrow_fit_failure(error, "fold", f);
    }
  }
  return out;
}

ResidualSet kfold_residuals(const Matrix& x, const Vector& y, const ModelSpec& spec,
                            std::size_t k, std::uint64_t seed) {
  check_shapes(x, y);
  const auto folds = kfold_assignment(static_cast<std::size_t>(y.size()), k, seed);
  ResidualSet out = kfold_residuals(x, y, spec, folds, k);
  out.seed = seed;
  return out;
}

ResidualSet oob_bootstrap_residuals(const Matrix& x, const Vector& y, const ModelSpec& spec,
                                    std::size_t rounds, std::uint64_t seed) {
  check_shapes(x, y);
  const auto n = static_cast<std::size_t>(y.size());
  if (rounds < 1) {
    throw Error(ErrorKind::InvalidArgument, "need at least one bootstrap round");
  }
  if (n < 2) {
    throw Error(ErrorKind::SampleTooSmall, "bootstrap needs at least two rows");
  }
  ResidualSet out;
  out.scheme = ResidualScheme::oob_bootstrap;
  out.model_id = model_id(spec);
  out.seed = seed;
  out.coverage.assign(n, 0);

  std::vector<Eigen::Index> train(n);
  std::vector<char> in_bag(n);
  std::vector<std::size_t> candidates;
  for (std::size_t round = 0; round < rounds; ++round) {
    Rng rng(seed + round);
    const std::size_t least = *std::min_element(out.coverage.begin(), out.coverage.end());
    candidates.clear();
    for (std::size_t attempt = 0; attempt <= kMaxOobRetries && candidates.empty(); ++attempt) {
      std::fill(in_bag.begin(), in_bag.end(), 0);
      for (auto& row : train) {
        row = static_cast<Eigen::Index>(rng.index(n));
        in_bag[static_cast<std::size_t>(row)] = 1;
      }
      std::vector<std::size_t> out_of_bag;
      for (std::size_t i = 0; i < n; ++i) {
        if (in_bag[i] == 0) out_of_bag.push_back(i);
      }
      for (std::size_t i : out_of_bag) {
        if (out.coverage[i] == least) candidates.push_back(i);
      }
      if (candidates.empty() && !out_of_bag.empty() && attempt == kMaxOobRetries) {
        // Give up on perfect evenness: least-used row among the out-of-bag ones.
        std::size_t best = out.coverage[out_of_bag.front()];
        for (std::size_t i : out_of_bag) best = std::min(best, out.coverage[i]);
        for (std::size_t i : out_of_bag) {
          if (out.coverage[i] == best) candidates.push_back(i);
        }
      }
    }
    if (candidates.empty()) {
      throw Error(ErrorKind::EmptyOutOfBag,
                  fmt::format("round {}: no out-of-bag row after {} redraws", round,
                              kMaxOobRetries));
    }
    const std::size_t test = candidates[rng.index(candidates.size())];
    try {
      const TrainedModel model = fit_model(take_rows(x, train), take_rows(y, train), spec);
      const Matrix row = x.row(static_cast<Eigen::Index>(test));
      const double predicted = predict(model, row)[0];
      out.indices.push_back(test);
      out.predictions.push_back(predicted);
      out.residuals.push_back(y[static_cast<Eigen::Index>(test)] - predicted);
      ++out.coverage[test];
    } catch (const Error& error) {
      rethrow_fit_failure(error, "round", round);
    }
  }
  return out;
}

}  // namespace mpvar
