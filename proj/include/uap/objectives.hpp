#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "uap/boundary.hpp"
#include "uap/oracle.hpp"
#include "uap/parallel.hpp"

namespace uap {

enum class ObjectiveKind { kAll, kNorm, kProb };

/// Which scalar surrogate to minimize:
///  - kAll:  minimal lambda fooling every sample at once.
///  - kNorm: p-norm of the per-image boundary distances.
///  - kProb: minimal lambda fooling at least prob_p * N samples, computed as
///           the ceil(prob_p * N)-th smallest per-image distance.
struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::kNorm;
  double norm_p = 2.0;   // kNorm only; >= 1, infinity for the max norm
  double prob_p = 0.9;   // kProb only; fraction of samples in (0, 1]
  // kNorm substitutes this for UNREACHABLE per-image distances so the
  // objective keeps a finite slope there; <= 0 resolves to 2 * lambda_max.
  double unreachable_penalty = 0.0;

  void validate() const {
    if (kind == ObjectiveKind::kNorm && !(norm_p >= 1.0))
      throw std::invalid_argument("norm_p must be >= 1 (or infinity)");
    if (kind == ObjectiveKind::kProb && !(prob_p > 0.0 && prob_p <= 1.0))
      throw std::invalid_argument("prob_p must be in (0, 1]");
  }
};

struct ObjectiveValue {
  std::optional<double> value;  // empty: UNREACHABLE under this objective
  // Per-image distances (empty entries are per-image UNREACHABLE); present
  // for kNorm and kProb, absent for kAll.
  std::optional<std::vector<std::optional<double>>> per_image;
  std::uint64_t queries_used = 0;

  bool reachable() const { return value.has_value(); }
};

/// p-norm with p in [1, inf]. Entries are boundary distances, hence >= 0.
inline double p_norm(std::span<const double> values, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  if (p == 1.0) {
    double s = 0.0;
    for (double v : values) s += std::abs(v);
    return s;
  }
  if (p == 2.0) return l2_norm(values);
  double s = 0.0;
  for (double v : values) s += std::pow(std::abs(v), p);
  return std::pow(s, 1.0 / p);
}

/// Number of samples the kProb objective must fool: ceil(prob_p * N),
/// clamped into [1, N].
inline std::size_t prob_quota(double prob_p, std::size_t n) {
  const auto k = static_cast<std::size_t>(std::ceil(prob_p * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

namespace detail {

inline std::vector<DistanceEvaluation> per_image_distances(
    const HardLabelOracle& oracle, const LabeledDataset& dataset, const Direction& direction,
    const SearchParams& params, const ExecPolicy& exec) {
  std::vector<DistanceEvaluation> evals(dataset.size());
  parallel_for(dataset.size(), exec, [&](std::size_t i) {
    evals[i] = distance_single(oracle, dataset[i].x, dataset[i].label, direction, params);
  });
  return evals;
}

}  // namespace detail

/// Evaluates the surrogate objective for one direction.
///
/// warm_start is the previous objective value at a nearby direction and is
/// honored only by kAll (it seeds the local search of distance_all_local);
/// per-image searches always cold-start.
inline ObjectiveValue evaluate(const HardLabelOracle& oracle, const LabeledDataset& dataset,
                               const Direction& direction, const ObjectiveSpec& spec,
                               const SearchParams& params,
                               std::optional<double> warm_start = std::nullopt,
                               const ExecPolicy& exec = {}) {
  spec.validate();
  const SearchParams p = resolved(params, dataset);

  if (spec.kind == ObjectiveKind::kAll) {
    const DistanceEvaluation eval =
        (warm_start && *warm_start > 0.0)
            ? distance_all_local(oracle, dataset, direction, *warm_start, p)
            : distance_all(oracle, dataset, direction, p);
    return {eval.value, std::nullopt, eval.queries_used};
  }

  const std::vector<DistanceEvaluation> evals =
      detail::per_image_distances(oracle, dataset, direction, p, exec);

  ObjectiveValue out;
  out.per_image.emplace();
  out.per_image->reserve(evals.size());
  for (const DistanceEvaluation& e : evals) {  // index order: deterministic reduction
    out.per_image->push_back(e.value);
    out.queries_used += e.queries_used;
  }

  if (spec.kind == ObjectiveKind::kNorm) {
    const double penalty =
        spec.unreachable_penalty > 0.0 ? spec.unreachable_penalty : 2.0 * p.lambda_max;
    std::vector<double> entries;
    entries.reserve(evals.size());
    for (const auto& v : *out.per_image) entries.push_back(v ? *v : penalty);
    out.value = p_norm(entries, spec.norm_p);
    return out;
  }

  // kProb: order statistic of the finite per-image distances.
  std::vector<double> finite;
  finite.reserve(evals.size());
  for (const auto& v : *out.per_image)
    if (v) finite.push_back(*v);
  const std::size_t quota = prob_quota(spec.prob_p, dataset.size());
  if (finite.size() < quota) return out;  // UNREACHABLE: too few images foolable
  std::nth_element(finite.begin(), finite.begin() + static_cast<std::ptrdiff_t>(quota - 1),
                   finite.end());
  out.value = finite[quota - 1];
  return out;
}

/// Concrete overload of the initial-direction search bound to an objective.
inline InitialSearchResult find_initial_direction(const HardLabelOracle& oracle,
                                                  const LabeledDataset& dataset,
                                                  const ObjectiveSpec& spec,
                                                  const SearchParams& params, int candidates,
                                                  Rng& rng, const ExecPolicy& exec = {}) {
  const SearchParams p = resolved(params, dataset);
  return find_initial_direction(dataset.dimension(), candidates, rng,
                                [&](const Direction& candidate) {
                                  return evaluate(oracle, dataset, candidate, spec, p,
                                                  std::nullopt, exec);
                                });
}

}  // namespace uap
