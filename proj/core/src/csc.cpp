#include "maxfun/csc.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "maxfun/error.hpp"
#include "maxfun/random.hpp"

namespace maxfun::csc {

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Number of exact nonzeros per position block.
std::vector<std::size_t> block_counts(const SparseCode& code) {
  const std::size_t m1 = code.m1();
  std::vector<std::size_t> counts(code.positions(), 0);
  for (std::size_t k = 0; k < static_cast<std::size_t>(code.gamma().size()); ++k) {
    if (code.gamma()(static_cast<Eigen::Index>(k)) != 0.0) ++counts[k / m1];
  }
  return counts;
}

// Tracks how many atoms each stripe holds while a support is grown.
class StripeBudget {
 public:
  StripeBudget(std::size_t positions, std::size_t n0, std::size_t lambda)
      : counts_(positions, 0), span_(2 * n0 - 1), lambda_(lambda) {}

  bool admits(std::size_t position) const {
    const std::size_t n = counts_.size();
    for (std::size_t t = 0; t < span_; ++t) {
      if (counts_[(position + n - t % n) % n] >= lambda_) return false;
    }
    return true;
  }

  void add(std::size_t position) {
    const std::size_t n = counts_.size();
    for (std::size_t t = 0; t < span_; ++t) ++counts_[(position + n - t % n) % n];
  }

 private:
  std::vector<std::size_t> counts_;
  std::size_t span_;
  std::size_t lambda_;
};

Mat columns(const Mat& d, std::span<const std::size_t> idx) {
  Mat out(d.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = d.col(static_cast<Eigen::Index>(idx[k]));
  return out;
}

}  // namespace

ConvDictionary::ConvDictionary(const Mat& local, std::size_t signal_length) : n_(signal_length) {
  if (local.rows() == 0 || local.cols() == 0) throw InvalidArgument("local filter matrix is empty");
  if (static_cast<std::size_t>(local.rows()) > signal_length) {
    throw InvalidArgument("filter length " + std::to_string(local.rows()) + " exceeds signal length " +
                          std::to_string(signal_length));
  }
  local_ = local;
  for (Eigen::Index c = 0; c < local_.cols(); ++c) {
    const double norm = local_.col(c).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw InvalidArgument("local filter " + std::to_string(c) + " is zero or not finite");
    }
    local_.col(c) /= norm;
  }

  const auto n = static_cast<Eigen::Index>(n_);
  const Eigen::Index n0 = local_.rows();
  const Eigen::Index m1 = local_.cols();
  d_ = Mat::Zero(n, n * m1);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index c = 0; c < m1; ++c) {
      for (Eigen::Index t = 0; t < n0; ++t) d_((j + t) % n, j * m1 + c) = local_(t, c);
    }
  }
  mu_ = mutual_coherence(d_);
}

ConvDictionary build_dict(const Mat& local, std::size_t signal_length) {
  return ConvDictionary(local, signal_length);
}

double mutual_coherence(const Mat& d) {
  const Vec norms = d.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < norms.size(); ++j) {
    if (!(norms(j) > 0.0)) throw InvalidArgument("mutual coherence: column " + std::to_string(j) + " is zero");
  }
  const Mat gram = d.transpose() * d;
  double mu = 0.0;
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = 0; j < gram.cols(); ++j) {
      if (i != j) mu = std::max(mu, std::abs(gram(i, j)) / (norms(i) * norms(j)));
    }
  }
  return std::min(mu, 1.0);
}

SparseCode::SparseCode(Vec gamma, std::size_t n0, std::size_t m1) : gamma_(std::move(gamma)), n0_(n0), m1_(m1) {
  if (n0 == 0 || m1 == 0) throw InvalidArgument("sparse code needs n0 >= 1 and m1 >= 1");
  const auto len = static_cast<std::size_t>(gamma_.size());
  if (len == 0 || len % m1 != 0) {
    throw InvalidArgument("code length " + std::to_string(len) + " is not a positive multiple of m1=" +
                          std::to_string(m1));
  }
  if (len / m1 < 2 * n0 - 1) {
    throw InvalidArgument("code has " + std::to_string(len / m1) + " positions, fewer than a stripe (" +
                          std::to_string(2 * n0 - 1) + ")");
  }
}

SparseCode SparseCode::zeros(std::size_t positions, std::size_t n0, std::size_t m1) {
  return SparseCode(Vec::Zero(static_cast<Eigen::Index>(positions * m1)), n0, m1);
}

std::vector<std::size_t> SparseCode::support() const {
  std::vector<std::size_t> out;
  for (Eigen::Index k = 0; k < gamma_.size(); ++k) {
    if (gamma_(k) != 0.0) out.push_back(static_cast<std::size_t>(k));
  }
  return out;
}

Vec stripe(const SparseCode& code, std::size_t j) {
  const std::size_t n = code.positions();
  if (j >= n) throw InvalidArgument("stripe index " + std::to_string(j) + " out of range");
  const std::size_t m1 = code.m1();
  Vec out(static_cast<Eigen::Index>(code.stripe_blocks() * m1));
  for (std::size_t b = 0; b < code.stripe_blocks(); ++b) {
    const std::size_t block = (j + b) % n;
    out.segment(static_cast<Eigen::Index>(b * m1), static_cast<Eigen::Index>(m1)) =
        code.gamma().segment(static_cast<Eigen::Index>(block * m1), static_cast<Eigen::Index>(m1));
  }
  return out;
}

std::size_t l0_inf(const SparseCode& code) {
  const auto counts = block_counts(code);
  const std::size_t n = counts.size();
  std::size_t best = 0;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t s = 0;
    for (std::size_t b = 0; b < code.stripe_blocks(); ++b) s += counts[(j + b) % n];
    best = std::max(best, s);
  }
  return best;
}

SparseCode gen_sparse_code(std::uint64_t seed, std::size_t positions, std::size_t n0, std::size_t m1,
                           std::size_t lambda, AmplitudeRange amp) {
  if (lambda < 1) throw InvalidArgument("sparsity bound lambda must be at least 1");
  if (!(amp.lo > 0.0) || !(amp.hi >= amp.lo)) {
    throw InvalidArgument("amplitude range must satisfy 0 < lo <= hi");
  }
  SparseCode code = SparseCode::zeros(positions, n0, m1);
  Rng rng(seed);
  std::vector<std::size_t> order(positions * m1);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));

  StripeBudget budget(positions, n0, lambda);
  for (std::size_t atom : order) {
    const std::size_t p = atom / m1;
    if (!budget.admits(p)) continue;
    budget.add(p);
    code.gamma()(static_cast<Eigen::Index>(atom)) = rng.uniform(amp.lo, amp.hi);
  }
  return code;
}

bool sparsity_condition(double lambda, double mu) { return (2.0 * lambda - 1.0) * mu < 1.0; }

std::vector<double> epsilon_recursion(double eps0, std::span<const double> lambdas, std::span<const double> mus) {
  if (lambdas.size() != mus.size()) throw InvalidArgument("epsilon_recursion: lambdas and mus differ in length");
  if (!(eps0 >= 0.0)) throw InvalidArgument("epsilon_recursion: eps0 must be non-negative");
  std::vector<double> out;
  out.reserve(lambdas.size());
  double prev = eps0 * eps0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double denom = 1.0 - (2.0 * lambdas[i] - 1.0) * mus[i];
    if (!(denom > 0.0)) {
      throw InvalidArgument("layer " + std::to_string(i + 1) + ": lambda=" + fmt_double(lambdas[i]) +
                            ", mu=" + fmt_double(mus[i]) + " violates lambda < (1 + 1/mu)/2");
    }
    prev = 4.0 * prev / denom;
    out.push_back(prev);
  }
  return out;
}

SparseCode pursuit_greedy(const ConvDictionary& dict, const Vec& y, std::size_t lambda, double eps,
                          const GreedyOptions& opts) {
  if (static_cast<std::size_t>(y.size()) != dict.signal_length()) {
    throw InvalidArgument("pursuit: signal length " + std::to_string(y.size()) + " != dictionary rows " +
                          std::to_string(dict.signal_length()));
  }
  if (!(eps >= 0.0)) throw InvalidArgument("pursuit: eps must be non-negative");
  if (lambda < 1) throw InvalidArgument("pursuit: lambda must be at least 1");

  const Mat& d = dict.matrix();
  const std::size_t m1 = dict.filters();
  SparseCode code = SparseCode::zeros(dict.signal_length(), dict.patch_length(), m1);
  Vec residual = y;
  if (residual.norm() <= eps) return code;

  StripeBudget budget(dict.signal_length(), dict.patch_length(), lambda);
  std::vector<bool> used(dict.atoms(), false);
  std::vector<std::size_t> support;
  Vec coef;

  for (std::size_t iter = 0; iter < dict.atoms(); ++iter) {
    const Vec corr = d.transpose() * residual;
    std::size_t pick = dict.atoms();
    double best = 1e-12 * residual.norm();
    for (std::size_t a = 0; a < dict.atoms(); ++a) {
      if (used[a] || !budget.admits(a / m1)) continue;
      const double c = corr(static_cast<Eigen::Index>(a));
      const double score = opts.nonnegative ? c : std::abs(c);
      if (score > best) {
        best = score;
        pick = a;
      }
    }
    if (pick == dict.atoms()) break;

    used[pick] = true;
    support.push_back(pick);
    const Mat sub = columns(d, support);
    Eigen::ColPivHouseholderQR<Mat> qr(sub);
    if (qr.rank() < static_cast<Eigen::Index>(support.size())) {
      support.pop_back();
      continue;
    }
    budget.add(pick / m1);
    coef = qr.solve(y);
    if (opts.nonnegative && (coef.array() < 0.0).any()) break;
    residual = y - sub * coef;
    if (residual.norm() <= eps) {
      for (std::size_t k = 0; k < support.size(); ++k) {
        code.gamma()(static_cast<Eigen::Index>(support[k])) = coef(static_cast<Eigen::Index>(k));
      }
      return code;
    }
  }
  throw Infeasible("pursuit: residual " + fmt_double(residual.norm()) + " exceeds eps " + fmt_double(eps) +
                   " within stripe budget lambda=" + std::to_string(lambda));
}

SparseCode pursuit_oracle(const ConvDictionary& dict, const Vec& y, std::span<const std::size_t> support) {
  if (static_cast<std::size_t>(y.size()) != dict.signal_length()) {
    throw InvalidArgument("pursuit: signal length " + std::to_string(y.size()) + " != dictionary rows " +
                          std::to_string(dict.signal_length()));
  }
  if (support.empty()) throw InvalidArgument("oracle pursuit: empty support");
  std::vector<std::size_t> idx(support.begin(), support.end());
  std::sort(idx.begin(), idx.end());
  if (std::adjacent_find(idx.begin(), idx.end()) != idx.end() || idx.back() >= dict.atoms()) {
    throw InvalidArgument("oracle pursuit: support has duplicate or out-of-range atoms");
  }
  const Mat sub = columns(dict.matrix(), idx);
  Eigen::ColPivHouseholderQR<Mat> qr(sub);
  if (qr.rank() < static_cast<Eigen::Index>(idx.size())) {
    throw InvalidArgument("oracle pursuit: restricted system is rank-deficient");
  }
  const Vec coef = qr.solve(y);
  SparseCode code = SparseCode::zeros(dict.signal_length(), dict.patch_length(), dict.filters());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    code.gamma()(static_cast<Eigen::Index>(idx[k])) = coef(static_cast<Eigen::Index>(k));
  }
  return code;
}

pool::Grid1d LayerSpec::grid() const { return pool::make_grid_1d(dict.signal_length(), window, stride); }

std::size_t LayerSpec::output_length() const { return grid().count * dict.filters(); }

DcppModel::DcppModel(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InvalidArgument("model needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& layer = layers_[i];
    const std::string tag = "layer " + std::to_string(i + 1) + ": ";
    if (layer.lambda < 1) throw InvalidArgument(tag + "lambda must be at least 1");
    try {
      layer.pool.validate(layer.grid().window);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(tag + e.what());
    }
    if (i > 0 && layer.dict.signal_length() != layers_[i - 1].output_length()) {
      throw InvalidArgument(tag + "signal length " + std::to_string(layer.dict.signal_length()) +
                            " != previous pooled length " + std::to_string(layers_[i - 1].output_length()));
    }
  }
}

Vec pool_code(const SparseCode& code, const LayerSpec& layer) {
  const auto pooled = pool::pool_maxfun_1d({code.gamma().data(), static_cast<std::size_t>(code.gamma().size())},
                                           code.m1(), layer.grid(), layer.pool);
  return Eigen::Map<const Vec>(pooled.data(), static_cast<Eigen::Index>(pooled.size()));
}

LayerSolver greedy_solver(GreedyOptions opts) {
  return [opts](std::size_t, const LayerSpec& layer, const Vec& input) {
    return pursuit_greedy(layer.dict, input, layer.lambda, layer.eps, opts);
  };
}

LayerSolver oracle_solver(std::vector<std::vector<std::size_t>> supports) {
  return [supports = std::move(supports)](std::size_t i, const LayerSpec& layer, const Vec& input) {
    if (i >= supports.size()) throw InvalidArgument("oracle solver: no support for layer " + std::to_string(i + 1));
    if (supports[i].empty()) {
      return SparseCode::zeros(layer.dict.signal_length(), layer.dict.patch_length(), layer.dict.filters());
    }
    return pursuit_oracle(layer.dict, input, supports[i]);
  };
}

std::vector<LayerOutcome> dcpp_forward(const Vec& input, const DcppModel& model, const LayerSolver& solver) {
  if (static_cast<std::size_t>(input.size()) != model.input_length()) {
    throw InvalidArgument("input length " + std::to_string(input.size()) + " != model input length " +
                          std::to_string(model.input_length()));
  }
  std::vector<LayerOutcome> out;
  out.reserve(model.depth());
  const Vec* signal = &input;
  for (std::size_t i = 0; i < model.depth(); ++i) {
    const LayerSpec& layer = model.layers()[i];
    SparseCode code = [&] {
      try {
        return solver(i, layer, *signal);
      } catch (const Infeasible& e) {
        throw Infeasible("layer " + std::to_string(i + 1) + ": " + e.what(), i + 1);
      }
    }();
    Vec pooled = pool_code(code, layer);
    out.push_back({std::move(code), std::move(pooled)});
    signal = &out.back().pooled;
  }
  return out;
}

GroundTruth synthesize_ground_truth(const DcppModel& model, std::uint64_t seed, AmplitudeRange amp) {
  const std::size_t depth = model.depth();
  const auto& layers = model.layers();
  GroundTruth gt;
  gt.codes.reserve(depth);
  gt.pooled.resize(depth);

  std::vector<SparseCode> codes;
  const LayerSpec& top = layers.back();
  codes.push_back(gen_sparse_code(seed, top.dict.signal_length(), top.dict.patch_length(), top.dict.filters(),
                                  top.lambda, amp));

  // Unpool each target P_{i} = D_{i+1} Gamma_{i+1} into one spike per window
  // and filter. A lone spike v at the window center pools to v / (2 r_min + 1).
  for (std::size_t i = depth - 1; i-- > 0;) {
    const LayerSpec& layer = layers[i];
    const Vec target = layers[i + 1].dict.matrix() * codes.back().gamma();
    const pool::Grid1d g = layer.grid();
    const std::size_t m1 = layer.dict.filters();
    const double gain = static_cast<double>(2 * layer.pool.r_min + 1);
    SparseCode code = SparseCode::zeros(layer.dict.signal_length(), layer.dict.patch_length(), m1);
    for (std::size_t k = 0; k < g.count; ++k) {
      const std::size_t center = k * g.stride + (g.window - 1) / 2;
      for (std::size_t c = 0; c < m1; ++c) {
        const double p = target(static_cast<Eigen::Index>(k * m1 + c));
        if (p < 0.0) {
          throw InvalidArgument("layer " + std::to_string(i + 2) +
                                ": dictionary produced a negative pooled target; synthesis needs non-negative filters");
        }
        code.gamma()(static_cast<Eigen::Index>(center * m1 + c)) = p * gain;
      }
    }
    if (l0_inf(code) > layer.lambda) {
      throw InvalidArgument("layer " + std::to_string(i + 1) + ": synthesized code has l0_inf " +
                            std::to_string(l0_inf(code)) + " > lambda " + std::to_string(layer.lambda) +
                            "; widen the pooling window");
    }
    codes.push_back(std::move(code));
  }
  std::reverse(codes.begin(), codes.end());

  for (std::size_t i = 0; i < depth; ++i) gt.pooled[i] = pool_code(codes[i], layers[i]);
  gt.signal = layers.front().dict.matrix() * codes.front().gamma();
  gt.codes = std::move(codes);
  return gt;
}

bool StabilityReport::pass() const noexcept {
  return std::all_of(layers.begin(), layers.end(), [](const LayerCheck& c) { return c.pass(); });
}

void check_stability_preconditions(const DcppModel& model) {
  for (std::size_t i = 0; i < model.depth(); ++i) {
    const LayerSpec& layer = model.layers()[i];
    const std::string tag = "layer " + std::to_string(i + 1) + ": ";
    const double mu = layer.dict.coherence();
    if (!sparsity_condition(static_cast<double>(layer.lambda), mu)) {
      throw InvalidArgument(tag + "lambda=" + std::to_string(layer.lambda) + ", mu=" + fmt_double(mu) +
                            " violates lambda < (1 + 1/mu)/2");
    }
    if (layer.stride < layer.window) {
      throw InvalidArgument(tag + "stability checks need disjoint pooling windows (stride >= window)");
    }
    if (i > 0 && (layer.dict.local().array() < 0.0).any()) {
      throw InvalidArgument(tag + "filters below the first layer must be non-negative");
    }
  }
}

std::vector<double> layer_eps_squared(const DcppModel& model, double eps0, CoherenceReading reading) {
  std::vector<double> lambdas;
  std::vector<double> mus;
  for (const LayerSpec& layer : model.layers()) {
    lambdas.push_back(static_cast<double>(layer.lambda));
    mus.push_back(reading == CoherenceReading::per_layer ? layer.dict.coherence()
                                                         : model.layers().front().dict.coherence());
  }
  return epsilon_recursion(eps0, lambdas, mus);
}

StabilityReport verify_stability(const DcppModel& model, const StabilityOptions& opts) {
  check_stability_preconditions(model);
  const std::vector<double> eps_sq = layer_eps_squared(model, opts.eps0, opts.reading);
  const GroundTruth gt = synthesize_ground_truth(model, derive_seed(opts.seed, 0), opts.amp);

  const auto n = static_cast<Eigen::Index>(model.input_length());
  Vec noise = Vec::Zero(n);
  if (opts.eps0 > 0.0) {
    Rng rng(derive_seed(opts.seed, 1));
    for (Eigen::Index k = 0; k < n; ++k) noise(k) = rng.normal();
    noise *= opts.eps0 / noise.norm();
  }

  DcppModel work = model;
  for (std::size_t i = 0; i < work.depth(); ++i) {
    work.layers()[i].eps = i == 0 ? opts.eps0 : std::sqrt(eps_sq[i - 1]);
  }

  std::vector<std::vector<std::size_t>> supports;
  for (const SparseCode& c : gt.codes) supports.push_back(c.support());
  const LayerSolver oracle = oracle_solver(supports);
  std::vector<bool> fallback(model.depth(), false);
  LayerSolver solver = oracle;
  if (opts.solver == SolverKind::greedy) {
    solver = [&](std::size_t i, const LayerSpec& layer, const Vec& input) {
      try {
        return pursuit_greedy(layer.dict, input, layer.lambda, layer.eps, {.nonnegative = true});
      } catch (const Infeasible&) {
        fallback[i] = true;
        return oracle(i, layer, input);
      }
    };
  }

  const auto outcomes = dcpp_forward(gt.signal + noise, work, solver);

  StabilityReport report;
  report.seed = opts.seed;
  report.noise_norm = noise.norm();
  for (std::size_t i = 0; i < model.depth(); ++i) {
    const LayerSpec& layer = model.layers()[i];
    LayerCheck c;
    c.layer = i + 1;
    c.mu = layer.dict.coherence();
    c.lambda = layer.lambda;
    c.eps_sq = eps_sq[i];
    c.code_dev_sq = (gt.codes[i].gamma() - outcomes[i].code.gamma()).squaredNorm();
    c.pool_dev_sq = (gt.pooled[i] - outcomes[i].pooled).squaredNorm();
    c.pool_within_code = c.pool_dev_sq <= c.code_dev_sq + opts.slack;
    c.code_within_eps = c.code_dev_sq <= c.eps_sq + opts.slack;
    c.solver_fallback = fallback[i];
    report.layers.push_back(c);
  }
  return report;
}

void write_report_header(std::ostream& os) { os << "seed,layer,mu,lambda,eps_sq,code_dev_sq,pool_dev_sq,pass\n"; }

void write_report_rows(std::ostream& os, const StabilityReport& report) {
  for (const LayerCheck& c : report.layers) {
    os << report.seed << ',' << c.layer << ',' << fmt_double(c.mu) << ',' << c.lambda << ','
       << fmt_double(c.eps_sq) << ',' << fmt_double(c.code_dev_sq) << ',' << fmt_double(c.pool_dev_sq) << ','
       << (c.pass() ? 1 : 0) << '\n';
  }
}

DcppModel default_stability_model(std::size_t signal_length) {
  Mat signed_taps(3, 1);
  signed_taps << 1.0, 0.0, -0.2;
  Mat positive_taps(3, 1);
  positive_taps << 1.0, 0.0, 0.2;

  LayerSpec first{ConvDictionary(signed_taps, signal_length), 5, 5, {1, 2, true}, 1, 0.0};
  const std::size_t next = first.output_length();
  LayerSpec second{ConvDictionary(positive_taps, next), 5, 5, {1, 2, true}, 1, 0.0};
  return DcppModel({std::move(first), std::move(second)});
}

}  // namespace maxfun::csc
