// uap: universal perturbation attacks against hard-label black-box models.
//
// Subcommands:
//   attack        run the RGF optimizer from a JSON config, write
//                 report.json / perturbation.csv / sweep.csv
//   eval          sweep a stored perturbation over scales, CSV on stdout
//   fit-centroid  fit a nearest-centroid model to a dataset CSV

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uap/config.hpp"
#include "uap/eval.hpp"
#include "uap/io.hpp"
#include "uap/objectives.hpp"
#include "uap/oracle.hpp"
#include "uap/rgf.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 2;        // bad input, unreadable file, invalid config
constexpr int kExitAttackFailed = 3; // attack ran but found no finite direction

uap::ExecPolicy exec_policy(bool serial) {
  uap::ExecPolicy exec;
  exec.parallel = !serial;
  return exec;
}

void check_oracle_dataset(const uap::HardLabelOracle& oracle, const uap::LabeledDataset& data,
                          const std::string& what) {
  if (oracle.dimension() != data.dimension())
    throw std::invalid_argument(what + ": dataset dimension " +
                                std::to_string(data.dimension()) + " != model dimension " +
                                std::to_string(oracle.dimension()));
  if (data.class_count() > oracle.class_count())
    throw std::invalid_argument(what + ": dataset labels exceed the model's class count");
}

// Output files land under temporary names first and are renamed only after
// every write succeeded, so a failing run never clobbers existing results.
class StagedOutputs {
 public:
  explicit StagedOutputs(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
  }

  ~StagedOutputs() {
    std::error_code ec;
    for (const auto& [tmp, final] : staged_) fs::remove(tmp, ec);
  }

  fs::path stage(const std::string& name) {
    fs::path tmp = dir_ / (name + ".tmp");
    staged_.emplace_back(tmp, dir_ / name);
    return tmp;
  }

  void commit() {
    for (const auto& [tmp, final] : staged_) fs::rename(tmp, final);
    staged_.clear();
  }

 private:
  fs::path dir_;
  std::vector<std::pair<fs::path, fs::path>> staged_;
};

int cmd_attack(const std::string& config_path, const std::string& out_dir, bool serial) {
  const uap::RunConfig config = uap::load_run_config(config_path);

  fs::path out = !out_dir.empty()
                     ? fs::path(out_dir)
                     : config.output_dir.value_or(fs::path());
  if (out.empty())
    throw std::invalid_argument("no output directory: pass --out or set 'output_dir'");

  const auto model = uap::load_model(config.model_path);
  const uap::LabeledDataset fit_set = uap::load_dataset(config.fit_dataset_path);
  check_oracle_dataset(*model, fit_set, "fit dataset");
  std::optional<uap::LabeledDataset> eval_set;
  if (config.eval_dataset_path) {
    eval_set = uap::load_dataset(*config.eval_dataset_path);
    check_oracle_dataset(*model, *eval_set, "eval dataset");
  }

  const uap::ExecPolicy exec = exec_policy(serial);
  const uap::AttackReport report =
      uap::run_attack(*model, fit_set, config.objective, config.search, config.rgf, exec);

  const uap::LabeledDataset& sweep_set = eval_set ? *eval_set : fit_set;
  const uap::SweepResult sweep_result =
      uap::sweep(*model, sweep_set, report.final_perturbation->source_direction, config.sweep,
                 exec);

  StagedOutputs outputs(out);
  uap::write_report_json(outputs.stage("report.json"), report);
  uap::write_perturbation_csv(outputs.stage("perturbation.csv"),
                              report.final_perturbation->epsilon);
  uap::write_sweep_csv(outputs.stage("sweep.csv"), sweep_result);
  outputs.commit();

  if (!report.ok()) {
    std::cerr << "attack FAILED: " << report.diagnostic << "\n";
    return kExitAttackFailed;
  }
  std::cerr << "attack OK: best_value=" << uap::format_double(*report.best_value)
            << " total_queries=" << report.total_queries << " -> " << out.string() << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& perturbation_path, const std::vector<double>& scales,
             bool serial) {
  const auto model = uap::load_model(model_path);
  const uap::LabeledDataset data = uap::load_dataset(data_path);
  check_oracle_dataset(*model, data, "dataset");
  const uap::FeatureVector epsilon =
      uap::load_perturbation_csv(perturbation_path, model->dimension());
  const uap::ExecPolicy exec = exec_policy(serial);

  uap::SweepSpec spec;
  spec.scales = scales;
  spec.validate();

  uap::SweepResult result;
  if (uap::l2_norm(epsilon) > 0.0) {
    result = uap::sweep(*model, data, uap::Direction(epsilon), spec, exec);
  } else {
    // A zero perturbation has no direction; every scaled copy is still zero.
    const std::uint64_t start = model->queries();
    const uap::FeatureVector zero(data.dimension(), 0.0);
    for (double s : spec.scales) {
      const double rate = uap::fooling_rate(*model, data, zero, exec);
      result.rows.push_back({s, 0.0, rate, model->queries() - start});
    }
  }
  uap::write_sweep_csv(std::cout, result);
  return kExitOk;
}

int cmd_fit_centroid(const std::string& data_path, const std::string& out_path) {
  const uap::LabeledDataset data = uap::load_dataset(data_path);
  const uap::CentroidModel model = uap::fit_centroid(data);
  uap::save_model(model, out_path);
  std::cerr << "wrote centroid model (d=" << model.dimension() << ", k=" << model.class_count()
            << ") to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"universal hard-label black-box perturbation toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  bool attack_serial = false;
  CLI::App* attack = app.add_subcommand("attack", "run a configured attack");
  attack->add_option("--config", config_path, "run config JSON")->required();
  attack->add_option("--out", out_dir, "output directory (overrides config output_dir)");
  attack->add_flag("--serial", attack_serial, "force fully serial evaluation");

  std::string model_path, data_path, perturbation_path, scales_arg;
  bool eval_serial = false;
  CLI::App* eval = app.add_subcommand("eval", "sweep a perturbation over scales");
  eval->add_option("--model", model_path, "model JSON")->required();
  eval->add_option("--data", data_path, "dataset CSV")->required();
  eval->add_option("--perturbation", perturbation_path, "perturbation CSV (one float per line)")
      ->required();
  eval->add_option("--scales", scales_arg, "comma-separated ascending scales")->required();
  eval->add_flag("--serial", eval_serial, "force fully serial evaluation");

  std::string fit_data_path, fit_out_path;
  CLI::App* fit = app.add_subcommand("fit-centroid", "fit a nearest-centroid model");
  fit->add_option("--data", fit_data_path, "dataset CSV")->required();
  fit->add_option("--out", fit_out_path, "output model JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (attack->parsed()) return cmd_attack(config_path, out_dir, attack_serial);
    if (eval->parsed()) {
      std::vector<double> scales;
      std::stringstream ss(scales_arg);
      std::string token;
      while (std::getline(ss, token, ',')) {
        try {
          scales.push_back(std::stod(token));
        } catch (const std::exception&) {
          throw std::invalid_argument("bad scale '" + token + "'");
        }
      }
      return cmd_eval(model_path, data_path, perturbation_path, scales, eval_serial);
    }
    if (fit->parsed()) return cmd_fit_centroid(fit_data_path, fit_out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
