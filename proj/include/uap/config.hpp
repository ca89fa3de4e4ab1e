#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "uap/boundary.hpp"
#include "uap/eval.hpp"
#include "uap/io.hpp"
#include "uap/objectives.hpp"
#include "uap/rgf.hpp"

namespace uap {

/// Everything one attack run needs, loadable from a single JSON file so runs
/// stay archivable and reproducible. Unset numeric fields keep the library
/// defaults.
struct RunConfig {
  std::filesystem::path model_path;
  std::filesystem::path fit_dataset_path;
  std::optional<std::filesystem::path> eval_dataset_path;  // defaults to the fit set
  ObjectiveSpec objective;
  SearchParams search;
  RgfConfig rgf;
  SweepSpec sweep;
  std::optional<std::filesystem::path> output_dir;
};

namespace detail {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(std::string("config field '") + key + "' has the wrong type");
  }
}

inline ObjectiveKind parse_objective_kind(const std::string& name) {
  if (name == "all") return ObjectiveKind::kAll;
  if (name == "norm") return ObjectiveKind::kNorm;
  if (name == "prob") return ObjectiveKind::kProb;
  throw SchemaError("objective kind must be one of 'all', 'norm', 'prob'; got '" + name + "'");
}

}  // namespace detail

inline const char* objective_kind_name(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kAll: return "all";
    case ObjectiveKind::kNorm: return "norm";
    case ObjectiveKind::kProb: return "prob";
  }
  return "?";
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }

  RunConfig config;
  std::string model, fit, eval_ds, out_dir;
  detail::read_field(j, "model_path", model);
  detail::read_field(j, "fit_dataset_path", fit);
  detail::read_field(j, "eval_dataset_path", eval_ds);
  detail::read_field(j, "output_dir", out_dir);
  if (model.empty()) throw SchemaError("config needs 'model_path'");
  if (fit.empty()) throw SchemaError("config needs 'fit_dataset_path'");
  config.model_path = model;
  config.fit_dataset_path = fit;
  if (!eval_ds.empty()) config.eval_dataset_path = eval_ds;
  if (!out_dir.empty()) config.output_dir = out_dir;

  if (j.contains("objective")) {
    const auto& o = j.at("objective");
    std::string kind = "norm";
    detail::read_field(o, "kind", kind);
    config.objective.kind = detail::parse_objective_kind(kind);
    detail::read_field(o, "norm_p", config.objective.norm_p);
    detail::read_field(o, "prob_p", config.objective.prob_p);
    detail::read_field(o, "unreachable_penalty", config.objective.unreachable_penalty);
  }
  if (j.contains("search")) {
    const auto& s = j.at("search");
    detail::read_field(s, "alpha", config.search.alpha);
    detail::read_field(s, "tol", config.search.tol);
    detail::read_field(s, "lambda_max", config.search.lambda_max);
    detail::read_field(s, "grid_steps", config.search.grid_steps);
  }
  if (j.contains("rgf")) {
    const auto& r = j.at("rgf");
    detail::read_field(r, "iterations", config.rgf.iterations);
    detail::read_field(r, "beta", config.rgf.beta);
    detail::read_field(r, "step_size", config.rgf.step_size);
    detail::read_field(r, "step_decay", config.rgf.step_decay);
    detail::read_field(r, "probes_per_iter", config.rgf.probes_per_iter);
    detail::read_field(r, "rng_seed", config.rgf.rng_seed);
    detail::read_field(r, "initial_candidates", config.rgf.initial_candidates);
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    detail::read_field(s, "scales", config.sweep.scales);
    detail::read_field(s, "relative", config.sweep.relative);
  }
  if (config.sweep.scales.empty())
    throw SchemaError("config needs 'sweep.scales' (non-empty ascending list)");

  // Fail fast on anything the run would only trip over later.
  config.objective.validate();
  config.search.validate();
  config.rgf.validate();
  config.sweep.validate();
  if (!std::filesystem::exists(config.model_path))
    throw SchemaError("model file not found: " + config.model_path.string());
  if (!std::filesystem::exists(config.fit_dataset_path))
    throw SchemaError("fit dataset not found: " + config.fit_dataset_path.string());
  if (config.eval_dataset_path && !std::filesystem::exists(*config.eval_dataset_path))
    throw SchemaError("eval dataset not found: " + config.eval_dataset_path->string());
  return config;
}

}  // namespace uap
