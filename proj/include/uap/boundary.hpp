#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>

#include "uap/oracle.hpp"
#include "uap/random.hpp"

namespace uap {

/// A search direction theta. Stored as given; every consumer works with the
/// unit-normalized vector, so distance values are invariant to scaling.
class Direction {
 public:
  explicit Direction(FeatureVector vector) : vector_(std::move(vector)) {
    for (double v : vector_)
      if (!std::isfinite(v)) throw std::invalid_argument("direction entries must be finite");
    norm_ = l2_norm(vector_);
    if (norm_ <= 0.0) throw std::invalid_argument("direction must have nonzero norm");
  }

  const FeatureVector& raw() const { return vector_; }
  double norm() const { return norm_; }
  std::size_t dimension() const { return vector_.size(); }

  FeatureVector unit() const {
    FeatureVector u(vector_);
    for (double& v : u) v /= norm_;
    return u;
  }

 private:
  FeatureVector vector_;
  double norm_ = 0.0;
};

struct SearchParams {
  double alpha = 0.01;       // expansion/contraction ratio of the local search
  double tol = 1e-5;         // absolute bisection tolerance on lambda
  double lambda_max = 0.0;   // search radius cap; <= 0 means auto-resolve
  int grid_steps = 200;      // cold-start grid resolution over (0, lambda_max]

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0,1)");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    if (grid_steps < 2) throw std::invalid_argument("grid_steps must be >= 2");
  }
};

/// Fills an unset lambda_max with 10x the largest sample norm in the dataset.
inline SearchParams resolved(SearchParams params, const LabeledDataset& dataset) {
  params.validate();
  if (params.lambda_max <= 0.0) params.lambda_max = 10.0 * dataset.max_norm();
  if (!(params.lambda_max > 0.0)) throw std::invalid_argument("lambda_max must be > 0");
  return params;
}

/// A boundary-distance value plus search metadata. An empty value means the
/// fooling condition never held within search_limit (UNREACHABLE); callers
/// must treat that as data, not as a failure.
struct DistanceEvaluation {
  std::optional<double> value;       // final v_right when reachable
  double bracket_low = 0.0;          // final bracket: fooling fails here...
  double bracket_high = 0.0;         // ...and holds here; high - low <= tol
  double initial_bracket_low = 0.0;  // bracket handed to the bisection
  double initial_bracket_high = 0.0;
  double search_limit = 0.0;         // lambda_max in effect (UNREACHABLE provenance)
  std::uint64_t queries_used = 0;
  int grid_points = 0;               // cold-start grid probes
  int expansion_steps = 0;           // local-search window probes
  int bisection_steps = 0;

  bool reachable() const { return value.has_value(); }
};

namespace detail {

// FoolsAt: (double lambda, std::uint64_t& queries) -> bool. The search
// assumes the predicate is monotone in lambda past the bracket; tests bound
// the error of that assumption with a brute-force grid oracle.
template <class FoolsAt>
DistanceEvaluation bisect(FoolsAt&& fools, double v_left, double v_right,
                          const SearchParams& params, DistanceEvaluation eval) {
  eval.initial_bracket_low = v_left;
  eval.initial_bracket_high = v_right;
  while (v_right - v_left > params.tol) {
    const double v_mid = 0.5 * (v_left + v_right);
    if (fools(v_mid, eval.queries_used))
      v_right = v_mid;
    else
      v_left = v_mid;
    ++eval.bisection_steps;
  }
  eval.value = v_right;
  eval.bracket_low = v_left;
  eval.bracket_high = v_right;
  return eval;
}

// Cold start: probe grid_steps uniform points in (0, lambda_max]; the first
// fooling point and its predecessor bracket the boundary. A grid (rather
// than jumping straight to bisection) bounds the error when the fooled set
// along the ray is not a single interval.
template <class FoolsAt>
DistanceEvaluation grid_bracket_search(FoolsAt&& fools, const SearchParams& params) {
  DistanceEvaluation eval;
  eval.search_limit = params.lambda_max;
  const double step = params.lambda_max / params.grid_steps;
  double previous = 0.0;
  for (int j = 1; j <= params.grid_steps; ++j) {
    const double lambda = (j == params.grid_steps) ? params.lambda_max : j * step;
    ++eval.grid_points;
    if (fools(lambda, eval.queries_used))
      return bisect(fools, previous, lambda, params, std::move(eval));
    previous = lambda;
  }
  return eval;  // never fooled within lambda_max
}

// Warm start around previous_v: widen or shrink the window geometrically by
// alpha until it brackets the boundary, then bisect. Both moving endpoints
// drag the stationary one along, so the bracket entering the bisection has
// width about alpha * previous_v.
template <class FoolsAt>
DistanceEvaluation local_bracket_search(FoolsAt&& fools, double previous_v,
                                        const SearchParams& params) {
  if (!(previous_v > 0.0)) throw std::invalid_argument("previous_v must be > 0");
  DistanceEvaluation eval;
  eval.search_limit = params.lambda_max;

  double v_left = 0.0;
  double v_right = 0.0;
  if (!fools(previous_v, eval.queries_used)) {
    // Some image still correctly classified: expand outward.
    v_left = previous_v;
    v_right = (1.0 + params.alpha) * previous_v;
    for (;;) {
      if (v_right > params.lambda_max) return eval;  // UNREACHABLE
      ++eval.expansion_steps;
      if (fools(v_right, eval.queries_used)) break;
      v_left = v_right;
      v_right *= 1.0 + params.alpha;
    }
  } else {
    // Already fooling: contract toward zero.
    v_right = previous_v;
    v_left = (1.0 - params.alpha) * previous_v;
    for (;;) {
      ++eval.expansion_steps;
      if (!fools(v_left, eval.queries_used)) break;
      v_right = v_left;
      v_left *= 1.0 - params.alpha;
      if (v_left < params.tol) {  // boundary is indistinguishable from zero
        v_left = 0.0;
        break;
      }
    }
  }
  return bisect(fools, v_left, v_right, params, std::move(eval));
}

inline bool misclassifies_all_unit(const HardLabelOracle& oracle, const LabeledDataset& dataset,
                                   std::span<const double> unit_direction, double lambda,
                                   std::uint64_t& queries, FeatureVector& scratch) {
  const std::size_t d = dataset.dimension();
  scratch.resize(d);
  for (const Sample& s : dataset) {
    for (std::size_t i = 0; i < d; ++i) scratch[i] = s.x[i] + lambda * unit_direction[i];
    ++queries;
    if (oracle.classify(scratch) == s.label) return false;  // short-circuit
  }
  return true;
}

inline bool misclassifies_single_unit(const HardLabelOracle& oracle, std::span<const double> x,
                                      Label y, std::span<const double> unit_direction,
                                      double lambda, std::uint64_t& queries,
                                      FeatureVector& scratch) {
  scratch.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) scratch[i] = x[i] + lambda * unit_direction[i];
  ++queries;
  return oracle.classify(scratch) != y;
}

}  // namespace detail

/// True iff every sample in the dataset is misclassified after moving
/// lambda along the unit direction. Short-circuits on the first sample the
/// oracle still gets right, so it consumes at most N queries.
inline bool misclassifies_all(const HardLabelOracle& oracle, const LabeledDataset& dataset,
                              const Direction& direction, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (direction.dimension() != dataset.dimension())
    throw std::invalid_argument("direction dimension != dataset dimension");
  std::uint64_t queries = 0;
  FeatureVector scratch;
  return detail::misclassifies_all_unit(oracle, dataset, direction.unit(), lambda, queries,
                                        scratch);
}

/// Batch boundary distance: the minimal lambda (to within tol) at which all
/// N samples are misclassified along the direction. Cold start: grid scan,
/// then bisection.
inline DistanceEvaluation distance_all(const HardLabelOracle& oracle,
                                       const LabeledDataset& dataset,
                                       const Direction& direction, const SearchParams& params) {
  if (direction.dimension() != dataset.dimension())
    throw std::invalid_argument("direction dimension != dataset dimension");
  const SearchParams p = resolved(params, dataset);
  const FeatureVector unit = direction.unit();
  FeatureVector scratch;
  auto fools = [&](double lambda, std::uint64_t& queries) {
    return detail::misclassifies_all_unit(oracle, dataset, unit, lambda, queries, scratch);
  };
  return detail::grid_bracket_search(fools, p);
}

/// Batch boundary distance warm-started from a previous value. When the
/// boundary moved by a factor (1+alpha)^m, costs about
/// N * (m + log2(previous_v * alpha / tol)) queries.
inline DistanceEvaluation distance_all_local(const HardLabelOracle& oracle,
                                             const LabeledDataset& dataset,
                                             const Direction& direction, double previous_v,
                                             const SearchParams& params) {
  if (direction.dimension() != dataset.dimension())
    throw std::invalid_argument("direction dimension != dataset dimension");
  const SearchParams p = resolved(params, dataset);
  const FeatureVector unit = direction.unit();
  FeatureVector scratch;
  auto fools = [&](double lambda, std::uint64_t& queries) {
    return detail::misclassifies_all_unit(oracle, dataset, unit, lambda, queries, scratch);
  };
  return detail::local_bracket_search(fools, previous_v, p);
}

/// Per-image boundary distance for one (x, y) pair. lambda_max must already
/// be resolved (callers with a dataset in hand use resolved()).
inline DistanceEvaluation distance_single(const HardLabelOracle& oracle,
                                          std::span<const double> x, Label y,
                                          const Direction& direction,
                                          const SearchParams& params) {
  params.validate();
  if (!(params.lambda_max > 0.0))
    throw std::invalid_argument("distance_single needs a resolved lambda_max");
  if (direction.dimension() != x.size())
    throw std::invalid_argument("direction dimension != point dimension");
  const FeatureVector unit = direction.unit();
  FeatureVector scratch;
  auto fools = [&](double lambda, std::uint64_t& queries) {
    return detail::misclassifies_single_unit(oracle, x, y, unit, lambda, queries, scratch);
  };
  return detail::grid_bracket_search(fools, params);
}

struct InitialSearchResult {
  Direction direction;
  std::optional<double> value;  // empty iff every candidate was UNREACHABLE
  std::uint64_t queries_used = 0;
};

/// Draws `candidates` standard Gaussian directions and keeps the one with the
/// smallest finite objective value. Finite always beats UNREACHABLE; if no
/// candidate is finite, the last draw is returned with an empty value.
///
/// ObjectiveFn: (const Direction&) -> any type with .value (optional-like)
/// and .queries_used members, e.g. objectives' evaluate() bound to a dataset.
template <class ObjectiveFn>
InitialSearchResult find_initial_direction(std::size_t dimension, int candidates, Rng& rng,
                                           ObjectiveFn&& objective) {
  if (candidates < 1) throw std::invalid_argument("candidates must be >= 1");
  std::optional<Direction> best;
  std::optional<double> best_value;
  std::optional<Direction> last;
  std::uint64_t queries = 0;
  for (int c = 0; c < candidates; ++c) {
    FeatureVector draw = gaussian_vector(rng, dimension);
    while (l2_norm(draw) <= 0.0) draw = gaussian_vector(rng, dimension);
    Direction candidate(std::move(draw));
    auto result = objective(candidate);
    queries += result.queries_used;
    if (result.value && (!best_value || *result.value < *best_value)) {
      best_value = *result.value;
      best = candidate;
    }
    last = std::move(candidate);
  }
  if (best) return {std::move(*best), best_value, queries};
  return {std::move(*last), std::nullopt, queries};
}

}  // namespace uap
