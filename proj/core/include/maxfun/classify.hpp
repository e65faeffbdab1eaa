#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maxfun/core.hpp"
#include "maxfun/dataio.hpp"
#include "maxfun/pooling.hpp"

namespace maxfun::classify {

// ---------------------------------------------------------------------------
// Features

struct FilterBank {
  std::vector<Mat> filters;  // square k x k kernels, all the same size
  bool rectify = true;

  std::size_t size() const noexcept { return filters.size(); }
  std::size_t kernel_size() const { return static_cast<std::size_t>(filters.front().rows()); }
  /// Throws InvalidArgument for an empty bank, non-square or mixed-size
  /// kernels, or non-finite entries.
  void validate() const;
};

/// Eight oriented 3x3 central differences (+1 at one neighbour, -1 at the
/// opposite one) followed by eight kernels with entries uniform in [-1, 1].
FilterBank default_filter_bank(std::uint64_t seed);

/// Valid cross-correlation with every kernel, then max(0, .) when rectifying.
/// Output is C x (H-k+1) x (W-k+1).
FeatureTensor extract_features(const Image& img, const FilterBank& bank);

/// Pools every channel with the same grid and concatenates the column-major
/// vectorizations, channel after channel.
std::vector<double> pool_tensor(const FeatureTensor& t, const pool::PoolGrid& grid, pool::Method method,
                                const pool::PoolParams& params);

// ---------------------------------------------------------------------------
// Linear SVM

struct SvmOptions {
  double reg_c = 1.0;
  std::size_t epochs = 40;
  std::uint64_t seed = 0;
};

struct SvmModel {
  std::vector<std::size_t> classes;  // sorted distinct training labels
  std::size_t dim = 0;
  Vec mean;   // per-feature standardization
  Vec scale;
  Mat weights;  // classes x (dim + 1); the last column is the bias
  std::vector<double> objective;  // per class, epochs entries each, row-major
};

/// One-vs-rest hinge loss trained by projected stochastic subgradient steps.
/// Samples are visited in a canonical order (by label, then feature values)
/// reshuffled from `seed` each epoch, so the model does not depend on the
/// order of the rows. The returned weights are the running average of the
/// iterates taken at the epoch where that average had the lowest objective.
SvmModel svm_train(const Mat& features, std::span<const std::size_t> labels, const SvmOptions& opts);

/// classes x n score matrix.
Mat svm_scores(const SvmModel& model, const Mat& features);
/// Highest score wins; ties go to the lowest class.
std::vector<std::size_t> svm_predict(const SvmModel& model, const Mat& features);

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

// ---------------------------------------------------------------------------
// Cross-validation

struct CvPlan {
  std::size_t k = 3;
  std::vector<double> grid;
  std::uint64_t seed = 0;
};

/// Seeded partition of [0, n) into k folds: a shuffled order where item i of
/// the order lands in fold i mod k. Each fold is sorted.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

struct CvResult {
  double best = 0.0;
  std::vector<double> mean_accuracy;  // one per grid value
  std::vector<std::vector<double>> fold_accuracy;
};

/// Maps a grid value to the n x d training feature matrix.
using FeatureFn = std::function<Mat(double)>;

/// Mean validation accuracy across folds for each grid value; the best value
/// wins with ties going to the smallest. A one-value grid is returned as is.
CvResult kfold_select(const CvPlan& plan, std::span<const std::size_t> labels, const FeatureFn& features,
                      const SvmOptions& svm);

// ---------------------------------------------------------------------------
// Pooling comparison

enum class Strategy { average, maximum, mixed, stochastic, maxfun, centered_maxfun };

inline constexpr Strategy kAllStrategies[] = {Strategy::average,    Strategy::maximum, Strategy::mixed,
                                              Strategy::stochastic, Strategy::maxfun,  Strategy::centered_maxfun};

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct Regime {
  std::size_t window = 21;
  std::size_t stride = 21;
  bool operator==(const Regime&) const = default;
};

struct ComparisonConfig {
  std::vector<Regime> regimes{{21, 21}, {21, 11}};
  std::vector<Strategy> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
  std::size_t image_side = 128;
  double test_fraction = 0.4;
  std::uint64_t seed = 0;
  std::size_t folds = 3;
  std::vector<double> alpha_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  /// Empty means {2, ..., b} with b = (window - 1) / 2.
  std::vector<std::size_t> rmin_grid;
  SvmOptions svm;

  /// Throws InvalidArgument on an inconsistent configuration.
  void validate() const;
};

struct Dataset {
  std::vector<FeatureTensor> features;
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;
};

/// Feature tensors for every manifest entry. Entries ending in ".mfpf" are
/// read as precomputed tensors; everything else is loaded, padded, resized to
/// `side` and passed through the filter bank.
Dataset build_dataset(const io::Manifest& manifest, const FilterBank& bank, std::size_t side);

/// Pooled features of one tensor under one regime, cached so every strategy
/// and hyperparameter can be assembled without re-pooling.
class PooledCache {
 public:
  PooledCache(const FeatureTensor& t, const Regime& regime, std::size_t r_lo, std::size_t r_hi);

  /// Equal to pool_tensor with the matching method and parameters.
  std::vector<double> features(Strategy s, double hyperparam) const;
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t channels_;
  std::size_t dim_;
  std::size_t r_lo_;
  std::vector<Image> avg_, max_, stochastic_;
  std::vector<pool::RadiusProfile> centered_, noncentered_;
};

struct ResultRow {
  Strategy strategy = Strategy::average;
  Regime regime;
  std::optional<double> hyperparam;
  double accuracy = 0.0;
  CvResult cv;
};

struct ResultsTable {
  std::vector<Regime> regimes;
  std::vector<ResultRow> rows;  // strategy-major, regimes in config order

  const ResultRow& at(Strategy s, const Regime& r) const;
  /// strategy,window,stride,hyperparam,accuracy
  std::string to_csv() const;
  /// Strategies as rows, one accuracy column per regime.
  std::string to_text() const;
};

/// Hyperparameter grid a strategy is tuned over in `regime`; empty when the
/// strategy has none.
std::vector<double> strategy_grid(Strategy s, const Regime& regime, const ComparisonConfig& cfg);

/// Runs the protocol on pre-built features with a fixed train/test split.
ResultsTable compare_pooling(const Dataset& data, std::span<const std::size_t> train,
                             std::span<const std::size_t> test, const ComparisonConfig& cfg);

/// Splits the manifest, builds features and runs compare_pooling.
ResultsTable run_pooling_comparison(const io::Manifest& manifest, const ComparisonConfig& cfg);

}  // namespace maxfun::classify
