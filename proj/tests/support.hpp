// Test-only fixtures and independent oracles. Everything here deliberately
// avoids the library's search code: the closed-form and brute-force routines
// below are the reference answers the implementation is checked against.
#pragma once

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uap/oracle.hpp"

namespace testsupport {

namespace fs = std::filesystem;

// Half plane in R^2: label 0 iff x1 >= 0 (score tie at x1 == 0 goes to 0).
inline uap::LinearModel half_plane_model() {
  return uap::LinearModel({{1.0, 0.0}, {-1.0, 0.0}}, {0.0, 0.0});
}

// Oracle that ignores its input; useful for constant-objective scenarios.
class ConstantModel final : public uap::HardLabelOracle {
 public:
  ConstantModel(std::size_t dimension, int class_count, uap::Label label)
      : dimension_(dimension), class_count_(class_count), label_(label) {}

  std::size_t dimension() const override { return dimension_; }
  int class_count() const override { return class_count_; }

 protected:
  uap::Label classify_impl(std::span<const double>) const override { return label_; }

 private:
  std::size_t dimension_;
  int class_count_;
  uap::Label label_;
};

// Independent argmax over W x + b, written against the raw matrices. Ties
// resolve to the lowest index by scanning with strict improvement.
inline uap::Label reference_linear_classify(const std::vector<uap::FeatureVector>& weights,
                                            const uap::FeatureVector& biases,
                                            const uap::FeatureVector& x) {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < weights.size(); ++k) {
    double score = biases[k];
    for (std::size_t i = 0; i < x.size(); ++i) score += weights[k][i] * x[i];
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }
  return static_cast<uap::Label>(best);
}

// Closed-form boundary distance for a linear model along a unit ray: the
// smallest positive lambda where some class k overtakes y. Score gaps are
// affine in lambda, so the crossing set along the ray is a single right ray
// and the first crossing is the distance. Empty when no crossing exists.
inline std::optional<double> closed_form_crossing(const uap::LinearModel& model,
                                                  const uap::FeatureVector& x, uap::Label y,
                                                  const uap::FeatureVector& unit_direction) {
  const auto& w = model.weights();
  const auto& b = model.biases();
  std::optional<double> best;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (static_cast<uap::Label>(k) == y) continue;
    double gap = b[k] - b[static_cast<std::size_t>(y)];
    double slope = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double dw = w[k][i] - w[static_cast<std::size_t>(y)][i];
      gap += dw * x[i];
      slope += dw * unit_direction[i];
    }
    if (slope <= 0.0) continue;  // class k never overtakes y along this ray
    const double lambda = -gap / slope;
    if (lambda < 0.0) continue;
    if (!best || lambda < *best) best = lambda;
  }
  return best;
}

// Brute-force batch distance: scan lambda = step, 2*step, ... up to
// lambda_max and return the first grid point where every sample is
// misclassified. Uses its own perturb-and-classify loop so it shares no
// search code with the implementation under test.
inline std::optional<double> brute_force_distance_all(const uap::HardLabelOracle& oracle,
                                                      const uap::LabeledDataset& dataset,
                                                      const uap::FeatureVector& unit_direction,
                                                      double step, double lambda_max) {
  uap::FeatureVector moved(dataset.dimension());
  for (long j = 1; j * step <= lambda_max; ++j) {
    const double lambda = j * step;
    bool all_fooled = true;
    for (const uap::Sample& s : dataset) {
      for (std::size_t i = 0; i < moved.size(); ++i)
        moved[i] = s.x[i] + lambda * unit_direction[i];
      if (oracle.classify(moved) == s.label) {
        all_fooled = false;
        break;
      }
    }
    if (all_fooled) return lambda;
  }
  return std::nullopt;
}

// Analytic batch distance for half_plane_model(): fooling needs x1 < 0, so
// a direction with negative first component crosses at x1 * |w| / |w1|.
inline std::optional<double> half_plane_batch_distance(const std::vector<double>& x1s,
                                                       const uap::FeatureVector& direction) {
  const double norm = uap::l2_norm(direction);
  if (!(direction[0] < 0.0)) return std::nullopt;
  double worst = 0.0;
  for (double x1 : x1s) worst = std::max(worst, x1 * norm / -direction[0]);
  return worst;
}

inline uap::LinearModel random_linear_model(std::mt19937_64& rng, std::size_t d, int k) {
  std::normal_distribution<double> weight(0.0, 1.0);
  std::uniform_real_distribution<double> bias(-0.5, 0.5);
  std::vector<uap::FeatureVector> weights(static_cast<std::size_t>(k), uap::FeatureVector(d));
  uap::FeatureVector biases(static_cast<std::size_t>(k));
  for (auto& row : weights)
    for (double& v : row) v = weight(rng);
  for (double& v : biases) v = bias(rng);
  return uap::LinearModel(std::move(weights), std::move(biases));
}

// Points drawn standard normal and labeled by the model itself, so every
// sample is "correctly classified" by construction.
inline uap::LabeledDataset model_labeled_dataset(std::mt19937_64& rng,
                                                 const uap::HardLabelOracle& model,
                                                 std::size_t n) {
  std::normal_distribution<double> coord(0.0, 1.0);
  std::vector<uap::Sample> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    uap::Sample s;
    s.x.resize(model.dimension());
    for (double& v : s.x) v = coord(rng);
    s.label = model.classify(s.x);
    samples.push_back(std::move(s));
  }
  return uap::LabeledDataset(std::move(samples), model.class_count());
}

// Clustered points labeled by the model. A tight cluster keeps "one lambda
// fools everyone" feasible, which batch-distance comparisons need.
inline uap::LabeledDataset clustered_dataset(std::mt19937_64& rng,
                                             const uap::HardLabelOracle& model, std::size_t n,
                                             double spread = 0.3) {
  std::normal_distribution<double> coord(0.0, 1.0);
  uap::FeatureVector center(model.dimension());
  for (double& v : center) v = coord(rng);
  std::vector<uap::Sample> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    uap::Sample s;
    s.x.resize(model.dimension());
    for (std::size_t j = 0; j < s.x.size(); ++j) s.x[j] = center[j] + spread * coord(rng);
    s.label = model.classify(s.x);
    samples.push_back(std::move(s));
  }
  return uap::LabeledDataset(std::move(samples), model.class_count());
}

// Rejection-samples a direction along which, per the closed form, every
// sample crosses a boundary within cap. Costs no oracle queries.
inline std::optional<uap::FeatureVector> feasible_batch_direction(
    std::mt19937_64& rng, const uap::LinearModel& model, const uap::LabeledDataset& dataset,
    double cap, int attempts = 200) {
  std::normal_distribution<double> coord(0.0, 1.0);
  for (int a = 0; a < attempts; ++a) {
    uap::FeatureVector direction(dataset.dimension());
    double norm = 0.0;
    while (norm <= 0.0) {
      for (double& v : direction) v = coord(rng);
      norm = uap::l2_norm(direction);
    }
    uap::FeatureVector unit(direction);
    for (double& v : unit) v /= norm;
    bool feasible = true;
    for (const uap::Sample& s : dataset) {
      const auto crossing = closed_form_crossing(model, s.x, s.label, unit);
      if (!crossing || *crossing >= cap) {
        feasible = false;
        break;
      }
    }
    if (feasible) return direction;
  }
  return std::nullopt;
}

inline uap::FeatureVector random_direction(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> coord(0.0, 1.0);
  uap::FeatureVector v(d);
  double norm = 0.0;
  while (norm <= 0.0) {
    for (double& entry : v) entry = coord(rng);
    norm = uap::l2_norm(v);
  }
  return v;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = fs::temp_directory_path() /
            ("uap_test_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout only
};

// Runs the built CLI binary; stderr goes to the test log, stdout is captured.
inline CliResult run_cli(const std::string& args) {
  const std::string command = std::string(UAP_CLI_PATH) + " " + args;
  CliResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return result;
  char buffer[4096];
  std::size_t n = 0;
  while ((n = fread(buffer, 1, sizeof buffer, pipe)) > 0) result.output.append(buffer, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

}  // namespace testsupport
