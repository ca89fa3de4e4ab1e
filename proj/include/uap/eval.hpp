#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "uap/boundary.hpp"
#include "uap/oracle.hpp"
#include "uap/parallel.hpp"

namespace uap {

/// Scales at which to evaluate a perturbation direction. In absolute mode
/// each entry is the lambda multiplying the unit direction; in relative mode
/// entries are relative-distortion targets (lambda / mean sample norm).
struct SweepSpec {
  std::vector<double> scales;
  bool relative = false;

  void validate() const {
    if (scales.empty()) throw std::invalid_argument("sweep needs at least one scale");
    double previous = -1.0;
    for (double s : scales) {
      if (!(s >= 0.0)) throw std::invalid_argument("scales must be >= 0");
      if (s < previous) throw std::invalid_argument("scales must be sorted ascending");
      previous = s;
    }
  }
};

struct SweepRow {
  double scale = 0.0;                // absolute lambda applied
  double relative_distortion = 0.0;  // scale / mean sample norm
  double fooling_rate = 0.0;
  std::uint64_t queries = 0;         // cumulative oracle queries for the sweep
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

namespace detail {

inline std::vector<Label> clean_predictions(const HardLabelOracle& oracle,
                                            const LabeledDataset& dataset,
                                            const ExecPolicy& exec) {
  std::vector<Label> predictions(dataset.size());
  parallel_for(dataset.size(), exec,
               [&](std::size_t i) { predictions[i] = oracle.classify(dataset[i].x); });
  return predictions;
}

inline double perturbed_flip_rate(const HardLabelOracle& oracle, const LabeledDataset& dataset,
                                  std::span<const Label> baseline,
                                  std::span<const double> offset, const ExecPolicy& exec) {
  std::vector<unsigned char> flipped(dataset.size(), 0);
  parallel_for(dataset.size(), exec, [&](std::size_t i) {
    FeatureVector moved(dataset.dimension());
    for (std::size_t j = 0; j < moved.size(); ++j) moved[j] = dataset[i].x[j] + offset[j];
    flipped[i] = oracle.classify(moved) != baseline[i] ? 1 : 0;
  });
  std::size_t count = 0;
  for (unsigned char f : flipped) count += f;  // index order, deterministic
  return static_cast<double>(count) / static_cast<double>(dataset.size());
}

}  // namespace detail

/// Fraction of samples whose predicted label changes when epsilon is added.
/// The baseline is the oracle's own prediction on the clean sample, not the
/// dataset label, so mislabeled entries do not distort the metric.
inline double fooling_rate(const HardLabelOracle& oracle, const LabeledDataset& dataset,
                           std::span<const double> epsilon, const ExecPolicy& exec = {}) {
  if (epsilon.size() != dataset.dimension())
    throw std::invalid_argument("perturbation dimension != dataset dimension");
  const std::vector<Label> baseline = detail::clean_predictions(oracle, dataset, exec);
  return detail::perturbed_flip_rate(oracle, dataset, baseline, epsilon, exec);
}

/// Fooling rate of scale * unit(direction) at every configured scale.
/// Clean predictions are classified once and reused across scales.
inline SweepResult sweep(const HardLabelOracle& oracle, const LabeledDataset& dataset,
                         const Direction& direction, const SweepSpec& spec,
                         const ExecPolicy& exec = {}) {
  spec.validate();
  if (direction.dimension() != dataset.dimension())
    throw std::invalid_argument("direction dimension != dataset dimension");

  const FeatureVector unit = direction.unit();
  const double mean_norm = dataset.mean_norm();
  const std::vector<Label> baseline = detail::clean_predictions(oracle, dataset, exec);
  std::uint64_t queries = dataset.size();

  SweepResult result;
  result.rows.reserve(spec.scales.size());
  FeatureVector offset(unit.size());
  for (double s : spec.scales) {
    const double lambda = spec.relative ? s * mean_norm : s;
    for (std::size_t j = 0; j < unit.size(); ++j) offset[j] = lambda * unit[j];
    const double rate = detail::perturbed_flip_rate(oracle, dataset, baseline, offset, exec);
    queries += dataset.size();
    result.rows.push_back({lambda, mean_norm > 0.0 ? lambda / mean_norm : 0.0, rate, queries});
  }
  return result;
}

}  // namespace uap
