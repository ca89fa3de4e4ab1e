#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uap/boundary.hpp"
#include "uap/objectives.hpp"
#include "uap/oracle.hpp"
#include "uap/parallel.hpp"
#include "uap/random.hpp"

namespace uap {

struct RgfConfig {
  int iterations = 200;        // number of descent updates T
  double beta = 0.05;          // Gaussian smoothing radius, fixed over the run
  double step_size = 0.2;      // nu_0
  double step_decay = 0.999;   // nu_t = step_size * step_decay^t
  int probes_per_iter = 1;     // q probes averaged per gradient estimate
  std::uint64_t rng_seed = 0;
  int initial_candidates = 20;

  void validate() const {
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be > 0");
    if (!(step_decay > 0.0 && step_decay <= 1.0))
      throw std::invalid_argument("step_decay must be in (0, 1]");
    if (probes_per_iter < 1) throw std::invalid_argument("probes_per_iter must be >= 1");
    if (initial_candidates < 1) throw std::invalid_argument("initial_candidates must be >= 1");
  }
};

/// Finite-difference directional gradient: mean over q probes of
/// ((h(theta + beta*u) - h(theta)) / beta) * u with u standard Gaussian.
struct GradientEstimate {
  FeatureVector vector;
  // Mean objective value at the probed directions; empty if every probe
  // (after redraws) came back UNREACHABLE.
  std::optional<double> forward_value;
  double base_value = 0.0;
  std::uint64_t queries_used = 0;
};

/// The universal perturbation: epsilon = magnitude * unit(source_direction).
struct Perturbation {
  FeatureVector epsilon;
  Direction source_direction;
  double magnitude = 0.0;
};

struct TrajectoryPoint {
  int iteration = 0;
  std::optional<double> value;  // empty: objective UNREACHABLE at this iterate
  std::uint64_t queries = 0;    // cumulative over the run
};

enum class AttackStatus { kOk, kFailed };

struct AttackReport {
  std::vector<TrajectoryPoint> trajectory;
  std::optional<double> best_value;       // engaged iff status == kOk
  std::optional<Direction> best_direction;
  std::optional<Perturbation> final_perturbation;  // zero magnitude on failure
  std::uint64_t total_queries = 0;
  AttackStatus status = AttackStatus::kFailed;
  std::string diagnostic;

  bool ok() const { return status == AttackStatus::kOk; }
};

// Probes whose objective is UNREACHABLE are redrawn at most this many times;
// a probe that exhausts its redraws contributes a zero vector.
inline constexpr int kMaxProbeRedraws = 5;

/// One RGF gradient estimate at theta. base_value must be the finite
/// objective value at theta; probe evaluations are warm-started from it.
inline GradientEstimate estimate_gradient(const HardLabelOracle& oracle,
                                          const LabeledDataset& dataset, const Direction& theta,
                                          const ObjectiveSpec& spec, const SearchParams& params,
                                          const RgfConfig& config, double base_value, Rng& rng,
                                          const ExecPolicy& exec = {}) {
  config.validate();
  const SearchParams p = resolved(params, dataset);
  const FeatureVector unit = theta.unit();
  const std::size_t d = unit.size();

  GradientEstimate estimate;
  estimate.vector.assign(d, 0.0);
  estimate.base_value = base_value;

  double forward_sum = 0.0;
  int forward_count = 0;
  for (int probe = 0; probe < config.probes_per_iter; ++probe) {
    for (int attempt = 0; attempt <= kMaxProbeRedraws; ++attempt) {
      const FeatureVector u = gaussian_vector(rng, d);
      FeatureVector probe_vec(d);
      for (std::size_t i = 0; i < d; ++i) probe_vec[i] = unit[i] + config.beta * u[i];
      if (l2_norm(probe_vec) <= 0.0) continue;  // degenerate draw, redraw
      const ObjectiveValue forward =
          evaluate(oracle, dataset, Direction(std::move(probe_vec)), spec, p, base_value, exec);
      estimate.queries_used += forward.queries_used;
      if (!forward.value) continue;  // UNREACHABLE probe, redraw
      const double scale = (*forward.value - base_value) / config.beta;
      for (std::size_t i = 0; i < d; ++i) estimate.vector[i] += scale * u[i];
      forward_sum += *forward.value;
      ++forward_count;
      break;
    }
    // A probe exhausting its redraws contributes the zero vector.
  }

  const double inv_q = 1.0 / static_cast<double>(config.probes_per_iter);
  for (double& v : estimate.vector) v *= inv_q;
  if (forward_count > 0) estimate.forward_value = forward_sum / forward_count;
  return estimate;
}

/// Algorithm: pick theta_0 as the best of initial_candidates Gaussian draws,
/// then for T iterations estimate the RGF gradient and descend with
/// nu_t = step_size * step_decay^t, renormalizing theta after each update.
/// The returned perturbation is built from the best direction seen (the last
/// iterate can be worse under noisy estimates), scaled by its objective value.
inline AttackReport run_attack(const HardLabelOracle& oracle, const LabeledDataset& dataset,
                               const ObjectiveSpec& spec, const SearchParams& params,
                               const RgfConfig& config, const ExecPolicy& exec = {}) {
  config.validate();
  spec.validate();
  if (oracle.dimension() != dataset.dimension())
    throw std::invalid_argument("oracle dimension != dataset dimension");
  if (dataset.class_count() > oracle.class_count())
    throw std::invalid_argument("dataset has labels outside the oracle's classes");
  const SearchParams p = resolved(params, dataset);
  Rng rng(config.rng_seed);

  AttackReport report;
  InitialSearchResult init =
      find_initial_direction(oracle, dataset, spec, p, config.initial_candidates, rng, exec);
  report.total_queries = init.queries_used;

  if (!init.value) {
    report.status = AttackStatus::kFailed;
    report.diagnostic = "all " + std::to_string(config.initial_candidates) +
                        " initial candidates were UNREACHABLE within lambda_max " +
                        std::to_string(p.lambda_max);
    report.final_perturbation =
        Perturbation{FeatureVector(dataset.dimension(), 0.0), std::move(init.direction), 0.0};
    return report;
  }

  Direction theta(init.direction.unit());
  double value = *init.value;
  Direction best_direction = theta;
  double best_value = value;
  report.trajectory.push_back({0, value, report.total_queries});

  for (int t = 1; t <= config.iterations; ++t) {
    GradientEstimate gradient =
        estimate_gradient(oracle, dataset, theta, spec, p, config, value, rng, exec);
    report.total_queries += gradient.queries_used;

    const double step = config.step_size * std::pow(config.step_decay, t - 1);
    FeatureVector next = theta.unit();
    for (std::size_t i = 0; i < next.size(); ++i) next[i] -= step * gradient.vector[i];
    const double next_norm = l2_norm(next);
    if (next_norm > 0.0) {
      // theta stays unit-length; h depends only on the direction
      for (double& v : next) v /= next_norm;
      theta = Direction(std::move(next));
    }

    const ObjectiveValue eval = evaluate(oracle, dataset, theta, spec, p, value, exec);
    report.total_queries += eval.queries_used;
    report.trajectory.push_back({t, eval.value, report.total_queries});

    if (eval.value) {
      value = *eval.value;
      if (value < best_value) {
        best_value = value;
        best_direction = theta;
      }
    } else {
      // The iterate left the region where the objective is defined; restart
      // the search from the best direction seen so far.
      theta = best_direction;
      value = best_value;
    }
  }

  const FeatureVector unit = best_direction.unit();
  FeatureVector epsilon(unit.size());
  for (std::size_t i = 0; i < unit.size(); ++i) epsilon[i] = best_value * unit[i];
  report.status = AttackStatus::kOk;
  report.best_value = best_value;
  report.best_direction = best_direction;
  report.final_perturbation =
      Perturbation{std::move(epsilon), std::move(best_direction), best_value};
  return report;
}

}  // namespace uap
