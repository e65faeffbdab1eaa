#include "maxfun/classify.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "maxfun/error.hpp"
#include "maxfun/parallel.hpp"
#include "maxfun/random.hpp"

namespace maxfun::classify {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void append_column_major(std::vector<double>& out, const Image& img) {
  for (std::size_t j = 0; j < img.cols(); ++j) {
    for (std::size_t i = 0; i < img.rows(); ++i) out.push_back(img(i, j));
  }
}

bool is_maxfun(Strategy s) { return s == Strategy::maxfun || s == Strategy::centered_maxfun; }

std::size_t as_radius(double h) {
  if (!(h >= 1.0) || h != std::floor(h)) {
    throw InvalidArgument("maxfun r_min must be a positive integer, got " + shortest(h));
  }
  return static_cast<std::size_t>(h);
}

std::vector<std::size_t> distinct_sorted(std::span<const std::size_t> labels) {
  std::vector<std::size_t> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Mat select_rows(const Mat& m, std::span<const std::size_t> idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(idx[k]));
  return out;
}

std::vector<std::size_t> select(std::span<const std::size_t> v, std::span<const std::size_t> idx) {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (std::size_t k : idx) out.push_back(v[k]);
  return out;
}

// Predictions for a training subset; a subset holding one class predicts it.
std::vector<std::size_t> fit_predict(const Mat& train_x, std::span<const std::size_t> train_y, const Mat& eval_x,
                                     const SvmOptions& svm) {
  const auto classes = distinct_sorted(train_y);
  if (classes.size() == 1) return std::vector<std::size_t>(static_cast<std::size_t>(eval_x.rows()), classes.front());
  return svm_predict(svm_train(train_x, train_y, svm), eval_x);
}

}  // namespace

// ---------------------------------------------------------------------------
// Features

void FilterBank::validate() const {
  if (filters.empty()) throw InvalidArgument("filter bank is empty");
  const Eigen::Index k = filters.front().rows();
  for (std::size_t f = 0; f < filters.size(); ++f) {
    const Mat& kernel = filters[f];
    if (kernel.rows() == 0 || kernel.rows() != kernel.cols() || kernel.rows() != k) {
      throw InvalidArgument("filter " + std::to_string(f) + " is not a " + std::to_string(k) + "x" +
                            std::to_string(k) + " kernel");
    }
    if (!kernel.allFinite()) throw InvalidArgument("filter " + std::to_string(f) + " has non-finite entries");
  }
}

FilterBank default_filter_bank(std::uint64_t seed) {
  FilterBank bank;
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      if (di == 0 && dj == 0) continue;
      Mat k = Mat::Zero(3, 3);
      k(1 + di, 1 + dj) = 1.0;
      k(1 - di, 1 - dj) = -1.0;
      bank.filters.push_back(k);
    }
  }
  Rng rng(seed);
  for (int f = 0; f < 8; ++f) {
    Mat k(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) k(i, j) = rng.uniform(-1.0, 1.0);
    }
    bank.filters.push_back(k);
  }
  return bank;
}

FeatureTensor extract_features(const Image& img, const FilterBank& bank) {
  bank.validate();
  pool::require_nonnegative(img.values(), "extract_features");
  const std::size_t k = bank.kernel_size();
  if (k > img.rows() || k > img.cols()) {
    throw InvalidArgument("kernel " + std::to_string(k) + "x" + std::to_string(k) + " is larger than image " +
                          std::to_string(img.rows()) + "x" + std::to_string(img.cols()));
  }
  const std::size_t h = img.rows() - k + 1;
  const std::size_t w = img.cols() - k + 1;
  FeatureTensor out(bank.size(), h, w);
  for (std::size_t c = 0; c < bank.size(); ++c) {
    const Mat& kernel = bank.filters[c];
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        double acc = 0.0;
        for (std::size_t a = 0; a < k; ++a) {
          const double* row = img.row(i + a) + j;
          for (std::size_t b = 0; b < k; ++b) {
            acc += kernel(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * row[b];
          }
        }
        out.at(c, i, j) = bank.rectify ? std::max(acc, 0.0) : acc;
      }
    }
  }
  return out;
}

std::vector<double> pool_tensor(const FeatureTensor& t, const pool::PoolGrid& grid, pool::Method method,
                                const pool::PoolParams& params) {
  if (t.rows != grid.in_rows() || t.cols != grid.in_cols()) {
    throw InvalidArgument("pooling grid expects " + std::to_string(grid.in_rows()) + "x" +
                          std::to_string(grid.in_cols()) + " maps, tensor has " + std::to_string(t.rows) + "x" +
                          std::to_string(t.cols));
  }
  std::vector<double> out;
  out.reserve(t.channels * grid.cell_count());
  for (std::size_t c = 0; c < t.channels; ++c) append_column_major(out, pool::apply(t.channel(c), grid, method, params).values);
  return out;
}

// ---------------------------------------------------------------------------
// Linear SVM

SvmModel svm_train(const Mat& features, std::span<const std::size_t> labels, const SvmOptions& opts) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (labels.size() != n) {
    throw InvalidArgument("svm_train: " + std::to_string(n) + " feature rows but " + std::to_string(labels.size()) +
                          " labels");
  }
  if (features.cols() == 0) throw InvalidArgument("svm_train: zero-dimensional features");
  if (!(opts.reg_c > 0.0)) throw InvalidArgument("svm_train: reg_c must be positive");
  if (opts.epochs == 0) throw InvalidArgument("svm_train: epochs must be positive");
  if (!features.allFinite()) throw InvalidArgument("svm_train: non-finite feature values");

  SvmModel model;
  model.classes = distinct_sorted(labels);
  if (model.classes.size() < 2) throw InvalidArgument("svm_train: need at least two classes");
  model.dim = static_cast<std::size_t>(features.cols());
  const Eigen::Index d = features.cols();

  // Canonical order: by label, then lexicographically by feature values.
  std::vector<std::size_t> canonical(n);
  std::iota(canonical.begin(), canonical.end(), std::size_t{0});
  std::sort(canonical.begin(), canonical.end(), [&](std::size_t a, std::size_t b) {
    if (labels[a] != labels[b]) return labels[a] < labels[b];
    for (Eigen::Index j = 0; j < d; ++j) {
      const double fa = features(static_cast<Eigen::Index>(a), j);
      const double fb = features(static_cast<Eigen::Index>(b), j);
      if (fa != fb) return fa < fb;
    }
    return false;
  });
  const Mat x = select_rows(features, canonical);
  const std::vector<std::size_t> sorted_labels = select(labels, canonical);

  model.mean = x.colwise().mean().transpose();
  model.scale = Vec::Ones(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt((x.col(j).array() - model.mean(j)).square().mean());
    if (sd > 0.0) model.scale(j) = 1.0 / sd;
  }

  // Standardized samples as columns, with a trailing constant for the bias.
  Mat z(d + 1, static_cast<Eigen::Index>(n));
  z.topRows(d) = ((x.transpose().colwise() - model.mean).array().colwise() * model.scale.array()).matrix();
  z.row(d).setOnes();

  const double lambda = 1.0 / (opts.reg_c * static_cast<double>(n));
  const double radius = 1.0 / std::sqrt(lambda);
  const std::size_t k = model.classes.size();
  model.weights = Mat::Zero(static_cast<Eigen::Index>(k), d + 1);
  model.objective.assign(k * opts.epochs, 0.0);

  for (std::size_t c = 0; c < k; ++c) {
    Vec y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = sorted_labels[i] == model.classes[c] ? 1.0 : -1.0;

    auto objective = [&](const Vec& w) {
      const Vec margins = (y.array() * (z.transpose() * w).array()).matrix();
      const double hinge = (1.0 - margins.array()).max(0.0).mean();
      return 0.5 * lambda * w.squaredNorm() + hinge;
    };

    Rng rng(derive_seed(opts.seed, c));
    Vec w = Vec::Zero(d + 1);
    Vec avg = Vec::Zero(d + 1);
    Vec pocket = avg;
    double best = objective(avg);
    std::size_t t = 0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t i : order) {
        ++t;
        const auto col = static_cast<Eigen::Index>(i);
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double margin = y(col) * w.dot(z.col(col));
        w *= 1.0 - 1.0 / static_cast<double>(t);
        if (margin < 1.0) w.noalias() += (eta * y(col)) * z.col(col);
        const double norm = w.norm();
        if (norm > radius) w *= radius / norm;
        avg += (w - avg) / static_cast<double>(t);
      }
      const double obj = objective(avg);
      if (obj < best) {
        best = obj;
        pocket = avg;
      }
      model.objective[c * opts.epochs + epoch] = best;
    }
    model.weights.row(static_cast<Eigen::Index>(c)) = pocket.transpose();
  }
  return model;
}

Mat svm_scores(const SvmModel& model, const Mat& features) {
  if (static_cast<std::size_t>(features.cols()) != model.dim) {
    throw InvalidArgument("svm: features have dimension " + std::to_string(features.cols()) + ", model expects " +
                          std::to_string(model.dim));
  }
  const Eigen::Index d = features.cols();
  Mat z(d + 1, features.rows());
  z.topRows(d) = ((features.transpose().colwise() - model.mean).array().colwise() * model.scale.array()).matrix();
  z.row(d).setOnes();
  return model.weights * z;
}

std::vector<std::size_t> svm_predict(const SvmModel& model, const Mat& features) {
  const Mat scores = svm_scores(model, features);
  std::vector<std::size_t> out(static_cast<std::size_t>(scores.cols()));
  for (Eigen::Index i = 0; i < scores.cols(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.rows(); ++c) {
      if (scores(c, i) > scores(best, i)) best = c;
    }
    out[static_cast<std::size_t>(i)] = model.classes[static_cast<std::size_t>(best)];
  }
  return out;
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size()) throw InvalidArgument("accuracy: label vectors differ in length");
  if (truth.empty()) throw InvalidArgument("accuracy: empty label vectors");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Cross-validation

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("cross-validation needs k >= 2");
  if (n < k) throw InvalidArgument("cross-validation needs at least k=" + std::to_string(k) + " items, got " +
                                   std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CvResult kfold_select(const CvPlan& plan, std::span<const std::size_t> labels, const FeatureFn& features,
                      const SvmOptions& svm) {
  if (plan.grid.empty()) throw InvalidArgument("cross-validation grid is empty");
  CvResult result;
  if (plan.grid.size() == 1) {
    result.best = plan.grid.front();
    return result;
  }
  const auto folds = make_folds(labels.size(), plan.k, plan.seed);
  const std::size_t g = plan.grid.size();
  result.fold_accuracy.assign(g, std::vector<double>(plan.k, 0.0));

  std::vector<Mat> mats(g);
  parallel_for(g, [&](std::size_t v) {
    mats[v] = features(plan.grid[v]);
    if (static_cast<std::size_t>(mats[v].rows()) != labels.size()) {
      throw InvalidArgument("cross-validation features have the wrong number of rows");
    }
  });
  parallel_for(g * plan.k, [&](std::size_t job) {
    const std::size_t v = job / plan.k;
    const std::size_t f = job % plan.k;
    std::vector<std::size_t> train;
    for (std::size_t other = 0; other < plan.k; ++other) {
      if (other != f) train.insert(train.end(), folds[other].begin(), folds[other].end());
    }
    std::sort(train.begin(), train.end());
    const auto pred = fit_predict(select_rows(mats[v], train), select(labels, train), select_rows(mats[v], folds[f]), svm);
    result.fold_accuracy[v][f] = accuracy(pred, select(labels, folds[f]));
  });

  result.mean_accuracy.resize(g);
  std::size_t pick = 0;
  for (std::size_t v = 0; v < g; ++v) {
    const auto& acc = result.fold_accuracy[v];
    result.mean_accuracy[v] = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(plan.k);
    const bool better = result.mean_accuracy[v] > result.mean_accuracy[pick];
    const bool tie_smaller = result.mean_accuracy[v] == result.mean_accuracy[pick] && plan.grid[v] < plan.grid[pick];
    if (better || tie_smaller) pick = v;
  }
  result.best = plan.grid[pick];
  return result;
}

// ---------------------------------------------------------------------------
// Pooling comparison

namespace {
constexpr std::pair<Strategy, std::string_view> kStrategyNames[] = {
    {Strategy::average, "average"},       {Strategy::maximum, "maximum"}, {Strategy::mixed, "mixed"},
    {Strategy::stochastic, "stochastic"}, {Strategy::maxfun, "maxfun"},   {Strategy::centered_maxfun, "centered_maxfun"},
};
}  // namespace

std::string_view to_string(Strategy s) {
  for (const auto& [strategy, name] : kStrategyNames) {
    if (strategy == s) return name;
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (const auto& [strategy, n] : kStrategyNames) {
    if (n == name) return strategy;
  }
  throw InvalidArgument("unknown pooling strategy '" + std::string(name) + "'");
}

void ComparisonConfig::validate() const {
  if (regimes.empty()) throw InvalidArgument("at least one pooling regime is required");
  if (strategies.empty()) throw InvalidArgument("at least one strategy is required");
  for (std::size_t a = 0; a < strategies.size(); ++a) {
    for (std::size_t b = a + 1; b < strategies.size(); ++b) {
      if (strategies[a] == strategies[b]) throw InvalidArgument("strategy listed twice: " + std::string(to_string(strategies[a])));
    }
  }
  const bool wants_maxfun = std::any_of(strategies.begin(), strategies.end(), is_maxfun);
  for (const Regime& r : regimes) {
    if (r.window == 0 || r.stride == 0) throw InvalidArgument("pooling window and stride must be positive");
    if (wants_maxfun) {
      if (r.window % 2 == 0) throw InvalidArgument("maxfun strategies need an odd window, got " + std::to_string(r.window));
      const std::size_t b = (r.window - 1) / 2;
      if (rmin_grid.empty() && b < 2) {
        throw InvalidArgument("window " + std::to_string(r.window) + " leaves no r_min in {2, ..., b}");
      }
      for (std::size_t v : rmin_grid) {
        if (v < 1 || v > b) throw InvalidArgument("r_min " + std::to_string(v) + " outside [1, " + std::to_string(b) + "]");
      }
    }
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("test_fraction must lie in (0, 1)");
  if (folds < 2) throw InvalidArgument("folds must be at least 2");
  if (image_side == 0) throw InvalidArgument("image_side must be positive");
  if (std::find(strategies.begin(), strategies.end(), Strategy::mixed) != strategies.end()) {
    if (alpha_grid.empty()) throw InvalidArgument("alpha_grid is empty");
    for (double a : alpha_grid) {
      if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("alpha " + shortest(a) + " outside [0, 1]");
    }
  }
  if (!(svm.reg_c > 0.0) || svm.epochs == 0) throw InvalidArgument("svm needs reg_c > 0 and epochs > 0");
}

Dataset build_dataset(const io::Manifest& manifest, const FilterBank& bank, std::size_t side) {
  if (manifest.empty()) throw InvalidArgument("dataset manifest is empty");
  bank.validate();
  Dataset data;
  data.class_names = manifest.labels();
  data.features.resize(manifest.size());
  data.labels.resize(manifest.size());
  parallel_for(manifest.size(), [&](std::size_t i) {
    const auto& entry = manifest.entries()[i];
    if (entry.path.extension() == ".mfpf") {
      data.features[i] = io::read_features(entry.path);
      pool::require_nonnegative(data.features[i].values, entry.path.string());
    } else {
      data.features[i] = extract_features(io::preprocess(entry.path, side), bank);
    }
    const auto it = std::lower_bound(data.class_names.begin(), data.class_names.end(), entry.label);
    data.labels[i] = static_cast<std::size_t>(it - data.class_names.begin());
  });
  for (const auto& t : data.features) {
    if (t.channels != data.features.front().channels || t.rows != data.features.front().rows ||
        t.cols != data.features.front().cols) {
      throw InvalidArgument("dataset feature tensors differ in shape");
    }
  }
  return data;
}

PooledCache::PooledCache(const FeatureTensor& t, const Regime& regime, std::size_t r_lo, std::size_t r_hi)
    : channels_(t.channels), r_lo_(r_lo) {
  const pool::PoolGrid grid = pool::make_grid(t.rows, t.cols, regime.window, regime.stride);
  dim_ = channels_ * grid.cell_count();
  const bool profiles = r_lo <= r_hi;
  for (std::size_t c = 0; c < channels_; ++c) {
    const Image x = t.channel(c);
    avg_.push_back(pool::pool_avg(x, grid).values);
    max_.push_back(pool::pool_max(x, grid).values);
    stochastic_.push_back(pool::pool_stochastic(x, grid).values);
    if (profiles) {
      centered_.push_back(pool::maxfun_profile(x, grid, r_lo, r_hi, true));
      noncentered_.push_back(pool::maxfun_profile(x, grid, r_lo, r_hi, false));
    }
  }
}

std::vector<double> PooledCache::features(Strategy s, double hyperparam) const {
  std::vector<double> out;
  out.reserve(dim_);
  for (std::size_t c = 0; c < channels_; ++c) {
    switch (s) {
      case Strategy::average:
        append_column_major(out, avg_[c]);
        break;
      case Strategy::maximum:
        append_column_major(out, max_[c]);
        break;
      case Strategy::stochastic:
        append_column_major(out, stochastic_[c]);
        break;
      case Strategy::mixed: {
        if (!(hyperparam >= 0.0 && hyperparam <= 1.0)) throw InvalidArgument("alpha outside [0, 1]");
        Image mixed(avg_[c].rows(), avg_[c].cols());
        for (std::size_t k = 0; k < mixed.size(); ++k) {
          mixed.values()[k] = hyperparam * max_[c].values()[k] + (1.0 - hyperparam) * avg_[c].values()[k];
        }
        append_column_major(out, mixed);
        break;
      }
      case Strategy::maxfun:
      case Strategy::centered_maxfun: {
        const auto& profiles = s == Strategy::maxfun ? noncentered_ : centered_;
        if (profiles.empty()) throw InvalidArgument("pooled cache was built without maxfun profiles");
        append_column_major(out, pool::reduce_profile(profiles[c], as_radius(hyperparam)).values);
        break;
      }
    }
  }
  return out;
}

const ResultRow& ResultsTable::at(Strategy s, const Regime& r) const {
  for (const auto& row : rows) {
    if (row.strategy == s && row.regime == r) return row;
  }
  throw InvalidArgument("no result for " + std::string(to_string(s)));
}

std::string ResultsTable::to_csv() const {
  std::ostringstream os;
  os << "strategy,window,stride,hyperparam,accuracy\n";
  for (const auto& row : rows) {
    os << to_string(row.strategy) << ',' << row.regime.window << ',' << row.regime.stride << ','
       << (row.hyperparam ? shortest(*row.hyperparam) : std::string()) << ',' << shortest(row.accuracy) << '\n';
  }
  return os.str();
}

std::string ResultsTable::to_text() const {
  std::vector<std::string> headers{"strategy"};
  for (const Regime& r : regimes) {
    headers.push_back("w=" + std::to_string(r.window) + " s=" + std::to_string(r.stride) +
                      (r.stride < r.window ? " (overlap)" : " (partition)"));
  }
  std::vector<std::vector<std::string>> cells;
  for (Strategy s : kAllStrategies) {
    std::vector<std::string> line{std::string(to_string(s))};
    bool any = false;
    for (const Regime& r : regimes) {
      const auto it = std::find_if(rows.begin(), rows.end(),
                                   [&](const ResultRow& row) { return row.strategy == s && row.regime == r; });
      if (it == rows.end()) {
        line.emplace_back("-");
        continue;
      }
      any = true;
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(4) << it->accuracy;
      if (it->hyperparam) cell << (s == Strategy::mixed ? " (alpha=" : " (r_min=") << shortest(*it->hyperparam) << ')';
      line.push_back(cell.str());
    }
    if (any) cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    width[c] = headers[c].size();
    for (const auto& line : cells) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t c = 0; c + 1 < line.size(); ++c) {
      os << std::left << std::setw(static_cast<int>(width[c])) << line[c] << "  ";
    }
    os << line.back() << '\n';
  };
  emit(headers);
  std::vector<std::string> rule;
  for (std::size_t w : width) rule.emplace_back(w, '-');
  emit(rule);
  for (const auto& line : cells) emit(line);
  return os.str();
}

std::vector<double> strategy_grid(Strategy s, const Regime& regime, const ComparisonConfig& cfg) {
  if (s == Strategy::mixed) return cfg.alpha_grid;
  if (!is_maxfun(s)) return {};
  std::vector<double> out;
  if (cfg.rmin_grid.empty()) {
    for (std::size_t r = 2; r <= (regime.window - 1) / 2; ++r) out.push_back(static_cast<double>(r));
  } else {
    for (std::size_t r : cfg.rmin_grid) out.push_back(static_cast<double>(r));
  }
  return out;
}

ResultsTable compare_pooling(const Dataset& data, std::span<const std::size_t> train,
                             std::span<const std::size_t> test, const ComparisonConfig& cfg) {
  cfg.validate();
  if (data.features.empty()) throw InvalidArgument("dataset is empty");
  if (train.empty() || test.empty()) throw InvalidArgument("train and test sets must be non-empty");
  for (std::size_t i : train) {
    if (i >= data.features.size()) throw InvalidArgument("train index out of range");
  }
  for (std::size_t i : test) {
    if (i >= data.features.size()) throw InvalidArgument("test index out of range");
  }

  const bool wants_maxfun = std::any_of(cfg.strategies.begin(), cfg.strategies.end(), is_maxfun);
  const std::vector<std::size_t> train_labels = select(data.labels, train);
  const std::vector<std::size_t> test_labels = select(data.labels, test);

  ResultsTable table;
  table.regimes = cfg.regimes;
  std::map<std::pair<Strategy, std::size_t>, ResultRow> results;

  for (std::size_t ri = 0; ri < cfg.regimes.size(); ++ri) {
    const Regime& regime = cfg.regimes[ri];
    std::size_t r_lo = 1;
    std::size_t r_hi = 0;
    if (wants_maxfun) {
      const auto grid = strategy_grid(Strategy::maxfun, regime, cfg);
      r_lo = static_cast<std::size_t>(*std::min_element(grid.begin(), grid.end()));
      r_hi = (regime.window - 1) / 2;
    }
    std::vector<std::optional<PooledCache>> caches(data.features.size());
    auto needed = [&](std::size_t i) { return caches[i].has_value(); };
    std::vector<std::size_t> used(train.begin(), train.end());
    used.insert(used.end(), test.begin(), test.end());
    parallel_for(used.size(), [&](std::size_t k) { caches[used[k]].emplace(data.features[used[k]], regime, r_lo, r_hi); });

    auto matrix = [&](std::span<const std::size_t> idx, Strategy s, double h) {
      Mat m(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(caches[idx.front()]->dim()));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        if (!needed(idx[k])) throw InvalidArgument("missing pooled features");
        const auto f = caches[idx[k]]->features(s, h);
        m.row(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::RowVectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
      }
      return m;
    };

    for (Strategy s : cfg.strategies) {
      const auto grid = strategy_grid(s, regime, cfg);
      ResultRow row;
      row.strategy = s;
      row.regime = regime;
      double h = 0.0;
      if (!grid.empty()) {
        const CvPlan plan{cfg.folds, grid, derive_seed(cfg.seed, 100 + ri)};
        row.cv = kfold_select(plan, train_labels, [&](double v) { return matrix(train, s, v); }, cfg.svm);
        h = row.cv.best;
        row.hyperparam = h;
      }
      const auto pred = fit_predict(matrix(train, s, h), train_labels, matrix(test, s, h), cfg.svm);
      row.accuracy = accuracy(pred, test_labels);
      results[{s, ri}] = std::move(row);
    }
  }

  for (Strategy s : kAllStrategies) {
    for (std::size_t ri = 0; ri < cfg.regimes.size(); ++ri) {
      const auto it = results.find({s, ri});
      if (it != results.end()) table.rows.push_back(std::move(it->second));
    }
  }
  return table;
}

ResultsTable run_pooling_comparison(const io::Manifest& manifest, const ComparisonConfig& cfg) {
  cfg.validate();
  const FilterBank bank = default_filter_bank(derive_seed(cfg.seed, 1));
  const Dataset data = build_dataset(manifest, bank, cfg.image_side);
  const auto [train, test] = io::split_indices(data.features.size(), cfg.test_fraction, derive_seed(cfg.seed, 2));
  return compare_pooling(data, train, test, cfg);
}

}  // namespace maxfun::classify
