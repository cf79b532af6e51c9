#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpvar/companion.hpp"
#include "mpvar/datagen.hpp"
#include "mpvar/models.hpp"
#include "mpvar/montecarlo.hpp"
#include "mpvar/resample.hpp"
#include "mpvar/stats_core.hpp"

namespace mpvar {

/// Fixed 17-significant-digit text for every floating-point value written
/// to CSV, so reruns are byte-identical and values round-trip exactly.
[[nodiscard]] std::string format_double(double value);

/// Comma-separated, header-mandatory, dot-decimal numeric table.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a header column; throws UnknownColumn.
  [[nodiscard]] std::size_t column(const std::string& name) const;
};

[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// `data.csv` -> `data.json`.
[[nodiscard]] std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

void write_json(const std::filesystem::path& path, const nlohmann::json& document);
[[nodiscard]] nlohmann::json read_json(const std::filesystem::path& path);

// Dataset: feature columns then "target" last; meta goes to the sidecar.
void write_dataset(const std::filesystem::path& csv_path, const Dataset& data);
/// Reads any numeric CSV; `target_column` is moved out of the features. The
/// sidecar, when present, becomes `meta`.
[[nodiscard]] Dataset read_dataset(const std::filesystem::path& csv_path,
                                   const std::string& target_column = "target");

// ResidualSet: columns index,residual; provenance in the sidecar.
void write_residuals(const std::filesystem::path& csv_path, const ResidualSet& set,
                     const nlohmann::json& extra_meta = nlohmann::json::object());
[[nodiscard]] ResidualSet read_residuals(const std::filesystem::path& csv_path);

// DensityCurve: columns grid,density.
void write_density(const std::filesystem::path& csv_path, const DensityCurve& curve);

[[nodiscard]] nlohmann::json to_json(const TestResult& result);
[[nodiscard]] nlohmann::json to_json(const ModelSpec& spec);
[[nodiscard]] ModelSpec model_spec_from_json(const nlohmann::json& doc);

/// Versioned model document: {"format": "mpvar-model", "version": 1, ...}.
[[nodiscard]] nlohmann::json to_json(const TrainedModel& model);
[[nodiscard]] TrainedModel trained_model_from_json(const nlohmann::json& doc);

[[nodiscard]] nlohmann::json to_json(const McConfig& cfg);
/// McReport without the per-replication p-values (see write_p_values).
[[nodiscard]] nlohmann::json to_json(const McReport& report);
/// Columns replication,p_value.
void write_p_values(const std::filesystem::path& csv_path, const McReport& report);

}  // namespace mpvar
