#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace uap {

using FeatureVector = std::vector<double>;
using Label = int;

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> v) {
  return std::sqrt(dot(v, v));
}

/// Exact count of oracle invocations. Increments are atomic so concurrent
/// classification keeps the ledger exact; copying snapshots the value.
class QueryCounter {
 public:
  QueryCounter() = default;
  QueryCounter(const QueryCounter& other) : count_(other.total()) {}
  QueryCounter& operator=(const QueryCounter& other) {
    count_.store(other.total(), std::memory_order_relaxed);
    return *this;
  }

  void increment() noexcept { count_.fetch_add(1, std::memory_order_relaxed); }
  std::uint64_t total() const noexcept { return count_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> count_{0};
};

struct Sample {
  FeatureVector x;
  Label label = 0;
};

/// The N labeled points an attack is fit on. Validated on construction:
/// non-empty, one shared dimension, labels in [0, class_count).
class LabeledDataset {
 public:
  LabeledDataset(std::vector<Sample> samples, int class_count)
      : samples_(std::move(samples)), class_count_(class_count) {
    if (samples_.empty()) throw std::invalid_argument("dataset must be non-empty");
    if (class_count_ < 1) throw std::invalid_argument("class_count must be >= 1");
    dimension_ = samples_.front().x.size();
    if (dimension_ == 0) throw std::invalid_argument("samples must have dimension >= 1");
    double sum_norm = 0.0;
    for (const Sample& s : samples_) {
      if (s.x.size() != dimension_)
        throw std::invalid_argument("all samples must share one dimension");
      if (s.label < 0 || s.label >= class_count_)
        throw std::invalid_argument("label " + std::to_string(s.label) +
                                    " outside [0, " + std::to_string(class_count_) + ")");
      for (double v : s.x)
        if (!std::isfinite(v)) throw std::invalid_argument("sample entries must be finite");
      const double n = l2_norm(s.x);
      max_norm_ = std::max(max_norm_, n);
      sum_norm += n;
    }
    mean_norm_ = sum_norm / static_cast<double>(samples_.size());
  }

  /// Builds with class_count inferred as (max label + 1).
  static LabeledDataset infer_classes(std::vector<Sample> samples) {
    int max_label = 0;
    for (const Sample& s : samples) max_label = std::max(max_label, s.label);
    return LabeledDataset(std::move(samples), max_label + 1);
  }

  std::size_t size() const { return samples_.size(); }
  std::size_t dimension() const { return dimension_; }
  int class_count() const { return class_count_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  double max_norm() const { return max_norm_; }
  double mean_norm() const { return mean_norm_; }

 private:
  std::vector<Sample> samples_;
  std::size_t dimension_ = 0;
  int class_count_ = 0;
  double max_norm_ = 0.0;
  double mean_norm_ = 0.0;
};

/// Hard-label black-box classifier: maps a d-vector to a class index in
/// [0, class_count) and reveals nothing else. Implementations are immutable
/// after construction and safe to query concurrently; every classify call
/// bumps the query counter by exactly one.
class HardLabelOracle {
 public:
  virtual ~HardLabelOracle() = default;

  virtual std::size_t dimension() const = 0;
  virtual int class_count() const = 0;

  Label classify(std::span<const double> x) const {
    if (x.size() != dimension())
      throw std::invalid_argument("input dimension " + std::to_string(x.size()) +
                                  " != oracle dimension " + std::to_string(dimension()));
    for (double v : x)
      if (!std::isfinite(v)) throw std::invalid_argument("input entries must be finite");
    counter_.increment();
    return classify_impl(x);
  }

  std::uint64_t queries() const { return counter_.total(); }

 protected:
  virtual Label classify_impl(std::span<const double> x) const = 0;

 private:
  mutable QueryCounter counter_;
};

// Shared argmax rule: scan ascending, replace only on strict improvement,
// so score ties always resolve to the lowest class index.
inline Label argmax_lowest(std::span<const double> scores) {
  Label best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k)
    if (scores[k] > scores[best]) best = static_cast<Label>(k);
  return best;
}

/// K-class linear scorer: classify(x) = argmax_k (w_k . x + b_k).
class LinearModel final : public HardLabelOracle {
 public:
  LinearModel(std::vector<FeatureVector> weights, FeatureVector biases)
      : weights_(std::move(weights)), biases_(std::move(biases)) {
    if (weights_.empty()) throw std::invalid_argument("linear model needs >= 1 class");
    if (weights_.size() != biases_.size())
      throw std::invalid_argument("weights and biases disagree on class count");
    dimension_ = weights_.front().size();
    if (dimension_ == 0) throw std::invalid_argument("linear model needs dimension >= 1");
    for (const FeatureVector& w : weights_)
      if (w.size() != dimension_)
        throw std::invalid_argument("all weight rows must share one dimension");
  }

  std::size_t dimension() const override { return dimension_; }
  int class_count() const override { return static_cast<int>(weights_.size()); }

  const std::vector<FeatureVector>& weights() const { return weights_; }
  const FeatureVector& biases() const { return biases_; }

 protected:
  Label classify_impl(std::span<const double> x) const override {
    // strict > replacement: score ties resolve to the lowest class index
    Label best = 0;
    double best_score = dot(weights_[0], x) + biases_[0];
    for (std::size_t k = 1; k < weights_.size(); ++k) {
      const double s = dot(weights_[k], x) + biases_[k];
      if (s > best_score) {
        best_score = s;
        best = static_cast<Label>(k);
      }
    }
    return best;
  }

 private:
  std::vector<FeatureVector> weights_;
  FeatureVector biases_;
  std::size_t dimension_ = 0;
};

/// Nearest-centroid classifier under Euclidean distance, ties to lowest index.
class CentroidModel final : public HardLabelOracle {
 public:
  explicit CentroidModel(std::vector<FeatureVector> centroids)
      : centroids_(std::move(centroids)) {
    if (centroids_.empty()) throw std::invalid_argument("centroid model needs >= 1 class");
    dimension_ = centroids_.front().size();
    if (dimension_ == 0) throw std::invalid_argument("centroid model needs dimension >= 1");
    for (const FeatureVector& c : centroids_)
      if (c.size() != dimension_)
        throw std::invalid_argument("all centroids must share one dimension");
  }

  std::size_t dimension() const override { return dimension_; }
  int class_count() const override { return static_cast<int>(centroids_.size()); }

  const std::vector<FeatureVector>& centroids() const { return centroids_; }

 protected:
  Label classify_impl(std::span<const double> x) const override {
    Label best = 0;
    double best_d2 = squared_distance(centroids_[0], x);
    for (std::size_t k = 1; k < centroids_.size(); ++k) {
      const double d2 = squared_distance(centroids_[k], x);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<Label>(k);
      }
    }
    return best;
  }

 private:
  static double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double diff = a[i] - b[i];
      s += diff * diff;
    }
    return s;
  }

  std::vector<FeatureVector> centroids_;
  std::size_t dimension_ = 0;
};

enum class Activation { kRelu, kIdentity };

struct DenseLayer {
  std::size_t rows = 0;            // output dimension
  std::size_t cols = 0;            // input dimension
  std::vector<double> weights;     // row-major, rows x cols
  std::vector<double> bias;        // rows entries
  Activation activation = Activation::kIdentity;
};

/// Dense feed-forward scorer; the final layer's rows are the K class scores.
/// Layer dimensions must chain from the input dimension to class_count.
class FeedForwardModel final : public HardLabelOracle {
 public:
  explicit FeedForwardModel(std::vector<DenseLayer> layers)
      : layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("feedforward model needs >= 1 layer");
    std::size_t in = layers_.front().cols;
    if (in == 0) throw std::invalid_argument("feedforward input dimension must be >= 1");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const DenseLayer& l = layers_[i];
      if (l.rows == 0 || l.cols == 0)
        throw std::invalid_argument("layer " + std::to_string(i) + " has empty shape");
      if (l.cols != in)
        throw std::invalid_argument("layer " + std::to_string(i) +
                                    " input dimension breaks the chain");
      if (l.weights.size() != l.rows * l.cols)
        throw std::invalid_argument("layer " + std::to_string(i) + " weight count != rows*cols");
      if (l.bias.size() != l.rows)
        throw std::invalid_argument("layer " + std::to_string(i) + " bias count != rows");
      in = l.rows;
    }
  }

  std::size_t dimension() const override { return layers_.front().cols; }
  int class_count() const override { return static_cast<int>(layers_.back().rows); }

  const std::vector<DenseLayer>& layers() const { return layers_; }

 protected:
  Label classify_impl(std::span<const double> x) const override {
    FeatureVector current(x.begin(), x.end());
    FeatureVector next;
    for (const DenseLayer& l : layers_) {
      next.assign(l.rows, 0.0);
      for (std::size_t r = 0; r < l.rows; ++r) {
        double s = l.bias[r];
        const double* row = l.weights.data() + r * l.cols;
        for (std::size_t c = 0; c < l.cols; ++c) s += row[c] * current[c];
        next[r] = (l.activation == Activation::kRelu && s < 0.0) ? 0.0 : s;
      }
      current.swap(next);
    }
    return argmax_lowest(current);
  }

 private:
  std::vector<DenseLayer> layers_;
};

/// Fits one centroid per class as the mean of that class's samples.
/// Every class in [0, class_count) must be populated.
inline CentroidModel fit_centroid(const LabeledDataset& dataset) {
  const std::size_t d = dataset.dimension();
  const int k = dataset.class_count();
  std::vector<FeatureVector> sums(static_cast<std::size_t>(k), FeatureVector(d, 0.0));
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (const Sample& s : dataset) {
    auto& sum = sums[static_cast<std::size_t>(s.label)];
    for (std::size_t i = 0; i < d; ++i) sum[i] += s.x[i];
    ++counts[static_cast<std::size_t>(s.label)];
  }
  for (int c = 0; c < k; ++c) {
    const std::size_t n = counts[static_cast<std::size_t>(c)];
    if (n == 0) throw FitError("class " + std::to_string(c) + " has no samples");
    for (double& v : sums[static_cast<std::size_t>(c)]) v /= static_cast<double>(n);
  }
  return CentroidModel(std::move(sums));
}

}  // namespace uap
