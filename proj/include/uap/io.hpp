#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "uap/eval.hpp"
#include "uap/oracle.hpp"
#include "uap/rgf.hpp"

namespace uap {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form of a double (std::to_chars), so emitted
/// files are reproducible byte for byte and parse back exactly.
inline std::string format_double(double value) {
  char buffer[32];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc{}) throw std::runtime_error("double formatting failed");
  return std::string(buffer, end);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

inline double parse_double_field(std::string_view field, std::size_t row) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ParseError("row " + std::to_string(row) + ": bad float '" + std::string(field) + "'");
  return value;
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

}  // namespace detail

/// Reads a dataset CSV: one sample per line, `label,f_1,...,f_d`, no header.
/// class_count defaults to (max label + 1) unless overridden.
inline LabeledDataset load_dataset(const std::filesystem::path& path,
                                   std::optional<int> class_count_override = std::nullopt) {
  std::ifstream in = detail::open_for_read(path);
  std::vector<Sample> samples;
  std::string line;
  std::size_t row = 0;
  std::size_t dimension = 0;
  while (std::getline(in, line)) {
    ++row;
    std::string_view rest = detail::trim(line);
    if (rest.empty()) continue;

    Sample sample;
    std::size_t field_index = 0;
    while (true) {
      const std::size_t comma = rest.find(',');
      const std::string_view field =
          detail::trim(comma == std::string_view::npos ? rest : rest.substr(0, comma));
      if (field_index == 0) {
        int label = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), label);
        if (ec != std::errc{} || ptr != field.data() + field.size() || label < 0)
          throw ParseError("row " + std::to_string(row) + ": bad label '" + std::string(field) +
                           "'");
        sample.label = label;
      } else {
        sample.x.push_back(detail::parse_double_field(field, row));
      }
      ++field_index;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (sample.x.empty()) throw ParseError("row " + std::to_string(row) + ": no features");
    if (dimension == 0) {
      dimension = sample.x.size();
    } else if (sample.x.size() != dimension) {
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(dimension) +
                       " features, got " + std::to_string(sample.x.size()));
    }
    samples.push_back(std::move(sample));
  }
  if (samples.empty()) throw ParseError(path.string() + ": no samples");
  if (class_count_override) {
    try {
      return LabeledDataset(std::move(samples), *class_count_override);
    } catch (const std::invalid_argument& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  return LabeledDataset::infer_classes(std::move(samples));
}

namespace detail {

inline std::vector<FeatureVector> json_matrix(const nlohmann::json& j, const std::string& key,
                                              std::size_t rows, std::size_t cols) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != rows)
    throw SchemaError("'" + key + "' must be an array of " + std::to_string(rows) + " rows");
  std::vector<FeatureVector> out;
  out.reserve(rows);
  for (const auto& row : j.at(key)) {
    if (!row.is_array() || row.size() != cols)
      throw SchemaError("'" + key + "' rows must hold " + std::to_string(cols) + " floats");
    out.push_back(row.get<FeatureVector>());
  }
  return out;
}

inline std::size_t json_dim(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<long long>() < 1)
    throw SchemaError(std::string("'") + key + "' must be a positive integer");
  return j.at(key).get<std::size_t>();
}

}  // namespace detail

/// Loads a model JSON file and builds the oracle its `kind` field names.
inline std::unique_ptr<HardLabelOracle> load_model(const std::filesystem::path& path) {
  std::ifstream in = detail::open_for_read(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  try {
    const std::string kind = j.contains("kind") ? j.at("kind").get<std::string>() : "";
    const std::size_t d = detail::json_dim(j, "d");
    const std::size_t k = detail::json_dim(j, "k");
    if (kind == "linear") {
      auto weights = detail::json_matrix(j, "weights", k, d);
      if (!j.contains("biases") || !j.at("biases").is_array() || j.at("biases").size() != k)
        throw SchemaError("'biases' must hold k floats");
      return std::make_unique<LinearModel>(std::move(weights),
                                           j.at("biases").get<FeatureVector>());
    }
    if (kind == "centroid") {
      return std::make_unique<CentroidModel>(detail::json_matrix(j, "centroids", k, d));
    }
    if (kind == "feedforward") {
      if (!j.contains("layers") || !j.at("layers").is_array() || j.at("layers").empty())
        throw SchemaError("'layers' must be a non-empty array");
      std::vector<DenseLayer> layers;
      std::size_t in_dim = d;
      for (const auto& lj : j.at("layers")) {
        DenseLayer layer;
        if (!lj.contains("bias") || !lj.at("bias").is_array() || lj.at("bias").empty())
          throw SchemaError("layer 'bias' must be a non-empty array");
        layer.bias = lj.at("bias").get<std::vector<double>>();
        layer.rows = layer.bias.size();
        layer.cols = in_dim;
        if (!lj.contains("weights") || !lj.at("weights").is_array())
          throw SchemaError("layer 'weights' must be an array");
        layer.weights = lj.at("weights").get<std::vector<double>>();
        if (layer.weights.size() != layer.rows * layer.cols)
          throw SchemaError("layer 'weights' must hold rows*cols floats (row-major)");
        const std::string act =
            lj.contains("activation") ? lj.at("activation").get<std::string>() : "";
        if (act == "relu")
          layer.activation = Activation::kRelu;
        else if (act == "identity")
          layer.activation = Activation::kIdentity;
        else
          throw SchemaError("layer 'activation' must be 'relu' or 'identity'");
        in_dim = layer.rows;
        layers.push_back(std::move(layer));
      }
      if (in_dim != k) throw SchemaError("layer chain must end at k scores");
      return std::make_unique<FeedForwardModel>(std::move(layers));
    }
    throw SchemaError("unknown model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

inline nlohmann::json model_to_json(const LinearModel& model) {
  return {{"kind", "linear"},
          {"d", model.dimension()},
          {"k", model.class_count()},
          {"weights", model.weights()},
          {"biases", model.biases()}};
}

inline nlohmann::json model_to_json(const CentroidModel& model) {
  return {{"kind", "centroid"},
          {"d", model.dimension()},
          {"k", model.class_count()},
          {"centroids", model.centroids()}};
}

inline nlohmann::json model_to_json(const FeedForwardModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const DenseLayer& l : model.layers())
    layers.push_back({{"weights", l.weights},
                      {"bias", l.bias},
                      {"activation", l.activation == Activation::kRelu ? "relu" : "identity"}});
  return {{"kind", "feedforward"},
          {"d", model.dimension()},
          {"k", model.class_count()},
          {"layers", std::move(layers)}};
}

template <class Model>
void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << model_to_json(model).dump(2) << '\n';
}

/// Perturbation vector file: one float per line, d lines.
inline void write_perturbation_csv(std::ostream& out, std::span<const double> epsilon) {
  for (double v : epsilon) out << format_double(v) << '\n';
}

inline void write_perturbation_csv(const std::filesystem::path& path,
                                   std::span<const double> epsilon) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_perturbation_csv(out, epsilon);
}

inline FeatureVector load_perturbation_csv(const std::filesystem::path& path,
                                           std::size_t expected_dimension) {
  std::ifstream in = detail::open_for_read(path);
  FeatureVector values;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string_view field = detail::trim(line);
    if (field.empty()) continue;
    values.push_back(detail::parse_double_field(field, row));
  }
  if (values.size() != expected_dimension)
    throw ParseError(path.string() + ": expected " + std::to_string(expected_dimension) +
                     " entries, got " + std::to_string(values.size()));
  return values;
}

inline nlohmann::json report_to_json(const AttackReport& report) {
  nlohmann::json trajectory = nlohmann::json::array();
  for (const TrajectoryPoint& point : report.trajectory) {
    nlohmann::json row{{"t", point.iteration}, {"queries", point.queries}};
    if (point.value)
      row["value"] = *point.value;
    else
      row["value"] = nullptr;
    trajectory.push_back(std::move(row));
  }
  nlohmann::json j{{"trajectory", std::move(trajectory)},
                   {"total_queries", report.total_queries},
                   {"status", report.ok() ? "OK" : "FAILED"}};
  if (report.best_value)
    j["best_value"] = *report.best_value;
  else
    j["best_value"] = nullptr;
  return j;
}

inline void write_report_json(const std::filesystem::path& path, const AttackReport& report) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << report_to_json(report).dump(2) << '\n';
}

/// Sweep CSV: `scale,relative_distortion,fooling_rate,queries`, one row per
/// scale, directly loadable by generic plotting tools.
inline void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "scale,relative_distortion,fooling_rate,queries\n";
  for (const SweepRow& row : result.rows)
    out << format_double(row.scale) << ',' << format_double(row.relative_distortion) << ','
        << format_double(row.fooling_rate) << ',' << row.queries << '\n';
}

inline void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_sweep_csv(out, result);
}

}  // namespace uap
