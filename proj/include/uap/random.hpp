#pragma once

#include <cstdint>
#include <random>

#include "uap/oracle.hpp"

namespace uap {

using Rng = std::mt19937_64;

/// Draws a standard Gaussian d-vector. A fresh distribution per call makes
/// the output a pure function of the engine state, so any segment of a
/// seeded run can be replayed from the same engine.
inline FeatureVector gaussian_vector(Rng& rng, std::size_t dimension) {
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureVector v(dimension);
  for (double& entry : v) entry = normal(rng);
  return v;
}

}  // namespace uap
