#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support.hpp"
#include "uap/objectives.hpp"

using namespace uap;
using testsupport::half_plane_model;

namespace {

SearchParams test_params(double lambda_max = 30.0) {
  SearchParams p;
  p.lambda_max = lambda_max;
  return p;
}

ObjectiveSpec spec_of(ObjectiveKind kind) {
  ObjectiveSpec s;
  s.kind = kind;
  return s;
}

}  // namespace

TEST_CASE("norm objective is the p-norm of per-image distances") {
  // points (1,0) and (3,0) against the half plane: distances 1 and 3
  LinearModel model = half_plane_model();
  LabeledDataset data({{{1.0, 0.0}, 0}, {{3.0, 0.0}, 0}}, 2);
  ObjectiveSpec spec = spec_of(ObjectiveKind::kNorm);
  ObjectiveValue v =
      evaluate(model, data, Direction(FeatureVector{-1.0, 0.0}), spec, test_params());
  REQUIRE(v.reachable());
  CHECK(*v.value == Catch::Approx(std::sqrt(10.0)).margin(1e-4));  // ~3.16228
  REQUIRE(v.per_image.has_value());
  REQUIRE(v.per_image->size() == 2);
  CHECK(*(*v.per_image)[0] == Catch::Approx(1.0).margin(1e-4));
  CHECK(*(*v.per_image)[1] == Catch::Approx(3.0).margin(1e-4));
}

TEST_CASE("prob objective is an order statistic") {
  LinearModel model = half_plane_model();
  LabeledDataset data({{{1.0, 0.0}, 0}, {{3.0, 0.0}, 0}}, 2);
  ObjectiveSpec spec = spec_of(ObjectiveKind::kProb);
  spec.prob_p = 0.5;  // quota ceil(0.5 * 2) = 1
  ObjectiveValue v =
      evaluate(model, data, Direction(FeatureVector{-1.0, 0.0}), spec, test_params());
  REQUIRE(v.reachable());
  CHECK(*v.value == Catch::Approx(1.0).margin(1e-4));
}

TEST_CASE("all objective equals the max per-image distance on a monotone model") {
  LinearModel model = half_plane_model();
  LabeledDataset data({{{1.0, 0.0}, 0}, {{3.0, 0.0}, 0}}, 2);
  SearchParams p = test_params();
  Direction direction(FeatureVector{-1.0, 0.0});

  ObjectiveValue all = evaluate(model, data, direction, spec_of(ObjectiveKind::kAll), p);
  REQUIRE(all.reachable());
  CHECK(*all.value == Catch::Approx(3.0).margin(2e-5));

  // cross-check against the per-image route
  double max_single = 0.0;
  for (const Sample& s : data) {
    DistanceEvaluation e = distance_single(model, s.x, s.label, direction, p);
    REQUIRE(e.reachable());
    max_single = std::max(max_single, *e.value);
  }
  CHECK(std::abs(*all.value - max_single) <= 2.0 * p.tol);
}

TEST_CASE("norm objective substitutes the penalty for UNREACHABLE images") {
  // (1,0) labeled 0 crosses at 1; (-3,0) labeled 1 moves deeper into class 1
  LinearModel model = half_plane_model();
  LabeledDataset data({{{1.0, 0.0}, 0}, {{-3.0, 0.0}, 1}}, 2);
  ObjectiveSpec spec = spec_of(ObjectiveKind::kNorm);
  spec.norm_p = std::numeric_limits<double>::infinity();
  spec.unreachable_penalty = 20.0;
  ObjectiveValue v =
      evaluate(model, data, Direction(FeatureVector{-1.0, 0.0}), spec, test_params(10.0));
  REQUIRE(v.reachable());
  CHECK(*v.value == 20.0);
  REQUIRE(v.per_image.has_value());
  CHECK_FALSE((*v.per_image)[1].has_value());  // raw UNREACHABLE preserved
}

TEST_CASE("prob objective goes UNREACHABLE when too few images are foolable") {
  LinearModel model = half_plane_model();
  LabeledDataset data({{{1.0, 0.0}, 0}, {{-3.0, 0.0}, 1}}, 2);
  ObjectiveSpec spec = spec_of(ObjectiveKind::kProb);
  spec.prob_p = 1.0;  // quota 2, only 1 reachable
  ObjectiveValue v =
      evaluate(model, data, Direction(FeatureVector{-1.0, 0.0}), spec, test_params(10.0));
  CHECK_FALSE(v.reachable());
  CHECK(v.per_image.has_value());
}

TEST_CASE("norm chain inequality holds on the per-image vector") {
  std::mt19937_64 rng(6021);
  for (int trial = 0; trial < 10; ++trial) {
    LinearModel model = testsupport::random_linear_model(rng, 3, 3);
    LabeledDataset data = testsupport::model_labeled_dataset(rng, model, 6);
    Direction direction(testsupport::random_direction(rng, 3));
    SearchParams p = resolved(test_params(0.0), data);
    ObjectiveSpec spec = spec_of(ObjectiveKind::kNorm);
    ObjectiveValue v = evaluate(model, data, direction, spec, p);
    REQUIRE(v.per_image.has_value());
    std::vector<double> entries;
    for (const auto& e : *v.per_image) entries.push_back(e ? *e : 2.0 * p.lambda_max);
    const double inf_norm = p_norm(entries, std::numeric_limits<double>::infinity());
    const double two_norm = p_norm(entries, 2.0);
    const double one_norm = p_norm(entries, 1.0);
    CHECK(inf_norm <= two_norm + 1e-12);
    CHECK(two_norm <= one_norm + 1e-12);
  }
}

TEST_CASE("prob at p=1 equals the max per-image distance and tracks ALL") {
  std::mt19937_64 rng(40925);
  for (int trial = 0; trial < 10; ++trial) {
    LinearModel model = testsupport::random_linear_model(rng, 2, 3);
    LabeledDataset data = testsupport::model_labeled_dataset(rng, model, 8);
    Direction direction(testsupport::random_direction(rng, 2));
    SearchParams p = resolved(test_params(0.0), data);

    ObjectiveSpec prob = spec_of(ObjectiveKind::kProb);
    prob.prob_p = 1.0;
    ObjectiveValue pv = evaluate(model, data, direction, prob, p);
    if (!pv.reachable()) continue;

    double max_single = 0.0;
    for (const auto& e : *pv.per_image) max_single = std::max(max_single, *e);
    CHECK(*pv.value == max_single);

    // linear rays are monotone, so ALL agrees within tolerance
    ObjectiveValue av = evaluate(model, data, direction, spec_of(ObjectiveKind::kAll), p);
    REQUIRE(av.reachable());
    CHECK(std::abs(*av.value - *pv.value) <= 2.0 * p.tol);
  }
}

TEST_CASE("fooling guarantees hold at value plus tol") {
  std::mt19937_64 rng(88311);
  LinearModel model = testsupport::random_linear_model(rng, 3, 4);
  LabeledDataset data = testsupport::model_labeled_dataset(rng, model, 12);
  SearchParams p = resolved(test_params(0.0), data);

  for (int trial = 0; trial < 20; ++trial) {
    Direction direction(testsupport::random_direction(rng, 3));
    const FeatureVector unit = direction.unit();

    ObjectiveSpec prob = spec_of(ObjectiveKind::kProb);
    ObjectiveValue pv = evaluate(model, data, direction, prob, p);
    if (pv.reachable()) {
      const double scale = *pv.value + p.tol;
      std::size_t fooled = 0;
      for (const Sample& s : data) {
        FeatureVector moved(s.x);
        for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += scale * unit[i];
        if (model.classify(moved) != s.label) ++fooled;
      }
      CHECK(fooled >= prob_quota(prob.prob_p, data.size()));
    }

    ObjectiveValue av = evaluate(model, data, direction, spec_of(ObjectiveKind::kAll), p);
    if (av.reachable()) {
      CHECK(misclassifies_all(model, data, direction, *av.value + p.tol));
    }
  }
}

TEST_CASE("parallel evaluation is bit-identical to serial") {
  std::mt19937_64 rng(112358);
  LinearModel model = testsupport::random_linear_model(rng, 4, 4);
  LabeledDataset data = testsupport::model_labeled_dataset(rng, model, 24);
  SearchParams p = resolved(test_params(0.0), data);
  ExecPolicy parallel;
  parallel.parallel = true;
  parallel.threads = 4;

  for (ObjectiveKind kind : {ObjectiveKind::kNorm, ObjectiveKind::kProb}) {
    Direction direction(testsupport::random_direction(rng, 4));
    ObjectiveSpec spec = spec_of(kind);
    ObjectiveValue serial = evaluate(model, data, direction, spec, p);
    ObjectiveValue threaded = evaluate(model, data, direction, spec, p, std::nullopt, parallel);
    CHECK(serial.value == threaded.value);
    CHECK(serial.per_image == threaded.per_image);
    CHECK(serial.queries_used == threaded.queries_used);
  }
}

TEST_CASE("objective spec validation") {
  ObjectiveSpec bad = spec_of(ObjectiveKind::kNorm);
  bad.norm_p = 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = spec_of(ObjectiveKind::kProb);
  bad.prob_p = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(prob_quota(0.9, 15) == 14);
  CHECK(prob_quota(1.0, 7) == 7);
  CHECK(prob_quota(0.01, 3) == 1);
}
