#include "mpvar/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mpvar/error.hpp"

namespace mpvar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kModelFormatVersion = 1;

std::ofstream open_for_write(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  return out;
}

void finish_write(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

double parse_number(const std::string& token, const fs::path& path, std::size_t line) {
  const std::string text = trim(token);
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::Parse, fmt::format("{}:{}: '{}' is not a number", path.string(), line,
                                              text));
  }
  return value;
}

json double_or_null(double value) {
  return std::isfinite(value) ? json(value) : json(nullptr);
}

}  // namespace

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  throw Error(ErrorKind::UnknownColumn, "no column named '" + name + "'");
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::Parse, path.string() + ": missing header row");
  }
  for (auto& name : split_line(line)) table.header.push_back(trim(name));
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      throw Error(ErrorKind::Parse, fmt::format("{}:{}: expected {} fields, found {}",
                                                path.string(), line_number, table.header.size(),
                                                fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& field : fields) row.push_back(parse_number(field, path, line_number));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_csv(const fs::path& path, const CsvTable& table) {
  auto out = open_for_write(path);
  out << fmt::format("{}\n", fmt::join(table.header, ","));
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
  finish_write(out, path);
}

fs::path sidecar_path(const fs::path& csv_path) {
  fs::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  return sidecar;
}

void write_json(const fs::path& path, const json& document) {
  auto out = open_for_write(path);
  out << document.dump(2) << '\n';
  finish_write(out, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

void write_dataset(const fs::path& csv_path, const Dataset& data) {
  data.validate();
  CsvTable table;
  table.header = data.names;
  table.header.emplace_back("target");
  table.rows.reserve(data.rows());
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    std::vector<double> row(data.features.row(i).begin(), data.features.row(i).end());
    row.push_back(data.target[i]);
    table.rows.push_back(std::move(row));
  }
  write_csv(csv_path, table);
  write_json(sidecar_path(csv_path), data.meta);
}

Dataset read_dataset(const fs::path& csv_path, const std::string& target_column) {
  const CsvTable table = read_csv(csv_path);
  const std::size_t target = table.column(target_column);
  Dataset data;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j != target) data.names.push_back(table.header[j]);
  }
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  data.features.resize(n, static_cast<Eigen::Index>(data.names.size()));
  data.target.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == target) {
        data.target[i] = row[j];
      } else {
        data.features(i, col++) = row[j];
      }
    }
  }
  const fs::path sidecar = sidecar_path(csv_path);
  if (fs::exists(sidecar)) {
    data.meta = read_json(sidecar);
  } else {
    data.meta = {{"source", csv_path.filename().string()}, {"target_column", target_column}};
  }
  data.validate();
  return data;
}

void write_residuals(const fs::path& csv_path, const ResidualSet& set, const json& extra_meta) {
  CsvTable table;
  table.header = {"index", "residual"};
  for (std::size_t r = 0; r < set.residuals.size(); ++r) {
    table.rows.push_back({static_cast<double>(set.indices.at(r)), set.residuals[r]});
  }
  write_csv(csv_path, table);
  json meta = extra_meta;
  meta["scheme"] = std::string(to_string(set.scheme));
  meta["seed"] = set.seed;
  meta["model_id"] = set.model_id;
  meta["count"] = set.residuals.size();
  meta["coverage_spread"] = set.coverage_spread();
  write_json(sidecar_path(csv_path), meta);
}

ResidualSet read_residuals(const fs::path& csv_path) {
  const CsvTable table = read_csv(csv_path);
  const std::size_t index_col = table.column("index");
  const std::size_t residual_col = table.column("residual");
  ResidualSet set;
  for (const auto& row : table.rows) {
    const double index = row[index_col];
    if (!(index >= 0.0) || index != std::floor(index)) {
      throw Error(ErrorKind::Parse, csv_path.string() + ": index column must hold row numbers");
    }
    set.indices.push_back(static_cast<std::size_t>(index));
    set.residuals.push_back(row[residual_col]);
  }
  const fs::path sidecar = sidecar_path(csv_path);
  if (fs::exists(sidecar)) {
    const json meta = read_json(sidecar);
    set.model_id = meta.value("model_id", "");
    set.seed = meta.value("seed", std::uint64_t{0});
    set.scheme = parse_residual_scheme(meta.value("scheme", "kfold"));
  }
  return set;
}

void write_density(const fs::path& csv_path, const DensityCurve& curve) {
  CsvTable table;
  table.header = {"grid", "density"};
  for (std::size_t g = 0; g < curve.grid.size(); ++g) {
    table.rows.push_back({curve.grid[g], curve.density[g]});
  }
  write_csv(csv_path, table);
}

json to_json(const TestResult& result) {
  json doc = {{"method", std::string(to_string(result.method))},
              {"alternative", std::string(to_string(result.alternative))},
              {"statistic", double_or_null(result.statistic)},
              {"df", result.df},
              {"p_value", result.p_value},
              {"degenerate", result.degenerate}};
  if (result.df2) doc["df2"] = *result.df2;
  return doc;
}

json to_json(const ModelSpec& spec) {
  if (const auto* poly = std::get_if<PolySpec>(&spec)) {
    return {{"family", "polynomial"},
            {"degree", poly->degree},
            {"include_interactions", poly->include_interactions}};
  }
  const auto& net = std::get<NetSpec>(spec);
  std::vector<std::string> activations;
  for (auto activation : net.activations) activations.emplace_back(to_string(activation));
  return {{"family", "dense_net"},
          {"layer_sizes", net.layer_sizes},
          {"activations", activations},
          {"init_seed", net.init_seed},
          {"learning_rate", net.learning_rate},
          {"batch_size", net.batch_size},
          {"epochs", net.epochs},
          {"adam_beta1", net.adam_beta1},
          {"adam_beta2", net.adam_beta2},
          {"adam_eps", net.adam_eps}};
}

ModelSpec model_spec_from_json(const json& doc) {
  try {
    const std::string family = doc.at("family").get<std::string>();
    if (family == "polynomial") {
      PolySpec poly;
      poly.degree = doc.at("degree").get<int>();
      poly.include_interactions = doc.value("include_interactions", true);
      return poly;
    }
    if (family == "dense_net") {
      NetSpec net;
      net.layer_sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
      for (const auto& name : doc.value("activations", std::vector<std::string>{})) {
        net.activations.push_back(parse_activation(name));
      }
      net.init_seed = doc.value("init_seed", std::uint64_t{0});
      net.learning_rate = doc.value("learning_rate", 0.001);
      net.batch_size = doc.value("batch_size", std::size_t{32});
      net.epochs = doc.value("epochs", std::size_t{200});
      net.adam_beta1 = doc.value("adam_beta1", 0.9);
      net.adam_beta2 = doc.value("adam_beta2", 0.999);
      net.adam_eps = doc.value("adam_eps", 1e-8);
      net.validate();
      return net;
    }
    throw Error(ErrorKind::Parse, "unknown model family '" + family + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed model spec: ") + e.what());
  }
}

json to_json(const TrainedModel& model) {
  return {{"format", "mpvar-model"},
          {"version", kModelFormatVersion},
          {"spec", to_json(model.spec)},
          {"parameters", std::vector<double>(model.parameters.begin(), model.parameters.end())},
          {"training_loss_history", model.training_loss_history}};
}

TrainedModel trained_model_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "mpvar-model") {
      throw Error(ErrorKind::Parse, "not an mpvar model document");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorKind::Parse, fmt::format("unsupported model format version {}", version));
    }
    TrainedModel model;
    model.spec = model_spec_from_json(doc.at("spec"));
    const auto params = doc.at("parameters").get<std::vector<double>>();
    model.parameters = Eigen::Map<const Vector>(params.data(), static_cast<Eigen::Index>(params.size()));
    model.training_loss_history = doc.value("training_loss_history", std::vector<double>{});
    if (const auto* net = std::get_if<NetSpec>(&model.spec)) {
      if (params.size() != net_parameter_count(*net)) {
        throw Error(ErrorKind::Parse, "parameter count does not match the network spec");
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed model document: ") + e.what());
  }
}

json to_json(const McConfig& cfg) {
  return {{"replications", cfg.replications},
          {"sample_size", cfg.sample_size},
          {"alpha", cfg.alpha},
          {"x_distribution", to_string(cfg.null_generator)},
          {"y_distribution", to_string(cfg.alt_generator)},
          {"test", std::string(to_string(cfg.test))},
          {"alternative", std::string(to_string(cfg.alternative))},
          {"base_seed", cfg.base_seed}};
}

json to_json(const McReport& report) {
  return {{"rejection_rate", report.rejection_rate},
          {"replications", report.replications},
          {"rejections", report.rejections},
          {"failures", report.failures},
          {"wilson_interval", {report.wilson_interval.first, report.wilson_interval.second}}};
}

void write_p_values(const fs::path& csv_path, const McReport& report) {
  auto out = open_for_write(csv_path);
  out << "replication,p_value\n";
  for (std::size_t r = 0; r < report.p_values.size(); ++r) {
    out << r << ',' << (std::isnan(report.p_values[r]) ? "nan" : format_double(report.p_values[r]))
        << '\n';
  }
  finish_write(out, csv_path);
}

}  // namespace mpvar
