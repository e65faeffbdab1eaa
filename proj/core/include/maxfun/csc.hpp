#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "maxfun/core.hpp"
#include "maxfun/pooling.hpp"

namespace maxfun::csc {

/// Global convolutional dictionary: every unit-normalized local filter placed
/// at every position of a length-N signal with circular wraparound.
///
/// Column `position * m1 + filter` holds filter `filter` starting at row
/// `position`, so the code vector is N consecutive blocks of m1 coefficients.
class ConvDictionary {
 public:
  /// Throws InvalidArgument for an empty or zero filter, or n0 > N.
  ConvDictionary(const Mat& local, std::size_t signal_length);

  std::size_t signal_length() const noexcept { return n_; }
  std::size_t patch_length() const noexcept { return static_cast<std::size_t>(local_.rows()); }
  std::size_t filters() const noexcept { return static_cast<std::size_t>(local_.cols()); }
  std::size_t atoms() const noexcept { return n_ * filters(); }

  /// Normalized local filters (n0 x m1).
  const Mat& local() const noexcept { return local_; }
  /// N x (N * m1) global matrix.
  const Mat& matrix() const noexcept { return d_; }
  /// Cached mutual coherence of matrix().
  double coherence() const noexcept { return mu_; }

 private:
  std::size_t n_;
  Mat local_;
  Mat d_;
  double mu_;
};

ConvDictionary build_dict(const Mat& local, std::size_t signal_length);

/// max over i != j of |<d_i, d_j>| / (|d_i| |d_j|). Throws on a zero column.
double mutual_coherence(const Mat& d);

/// Coefficients of a convolutional code: `positions` blocks of m1 entries.
class SparseCode {
 public:
  /// Requires gamma.size() divisible by m1 and at least 2*n0-1 positions.
  SparseCode(Vec gamma, std::size_t n0, std::size_t m1);

  static SparseCode zeros(std::size_t positions, std::size_t n0, std::size_t m1);

  const Vec& gamma() const noexcept { return gamma_; }
  Vec& gamma() noexcept { return gamma_; }
  std::size_t n0() const noexcept { return n0_; }
  std::size_t m1() const noexcept { return m1_; }
  std::size_t positions() const noexcept { return static_cast<std::size_t>(gamma_.size()) / m1_; }
  std::size_t stripe_blocks() const noexcept { return 2 * n0_ - 1; }

  /// Indices of the exact nonzeros, ascending.
  std::vector<std::size_t> support() const;

 private:
  Vec gamma_;
  std::size_t n0_;
  std::size_t m1_;
};

/// Blocks j, j+1, ..., j+2n0-2 (mod positions), concatenated.
Vec stripe(const SparseCode& code, std::size_t j);

/// Largest number of exact nonzeros in any stripe.
std::size_t l0_inf(const SparseCode& code);

struct AmplitudeRange {
  double lo = 1.0;
  double hi = 2.0;
};

/// Random non-negative code with l0_inf <= lambda. Atoms are visited in a
/// seeded random order and kept whenever every stripe they touch still has
/// room, so the support is maximal for the budget. Amplitudes are uniform in
/// [amp.lo, amp.hi] with 0 < lo <= hi.
SparseCode gen_sparse_code(std::uint64_t seed, std::size_t positions, std::size_t n0, std::size_t m1,
                           std::size_t lambda, AmplitudeRange amp);

/// True iff lambda < (1 + 1/mu) / 2, evaluated as (2 lambda - 1) mu < 1.
bool sparsity_condition(double lambda, double mu);

/// eps_i^2 = 4 eps_{i-1}^2 / (1 - (2 lambda_i - 1) mu_i) for i = 1..L, with
/// eps_0 = eps0. Returns the L squared budgets. Throws InvalidArgument when a
/// denominator is not positive.
std::vector<double> epsilon_recursion(double eps0, std::span<const double> lambdas, std::span<const double> mus);

struct GreedyOptions {
  /// Only select atoms with positive correlation and reject negative fits.
  bool nonnegative = false;
};

/// Orthogonal matching pursuit under a stripe budget: atoms are added by
/// largest correlation with the residual, skipping any atom that would push a
/// stripe past lambda, until ||y - D g|| <= eps. Throws Infeasible when the
/// budget runs out first.
SparseCode pursuit_greedy(const ConvDictionary& dict, const Vec& y, std::size_t lambda, double eps,
                          const GreedyOptions& opts = {});

/// Least squares restricted to `support`. Throws InvalidArgument on an empty,
/// out-of-range or rank-deficient support.
SparseCode pursuit_oracle(const ConvDictionary& dict, const Vec& y, std::span<const std::size_t> support);

/// One layer of the pooled deep coding model.
struct LayerSpec {
  ConvDictionary dict;
  std::size_t window = 1;
  std::size_t stride = 1;
  pool::MaxfunConfig pool;
  std::size_t lambda = 1;
  /// Residual budget ||input - D g|| <= eps handed to the layer's pursuit.
  double eps = 0.0;

  pool::Grid1d grid() const;
  /// Pooled positions times filters: the next layer's signal length.
  std::size_t output_length() const;
};

class DcppModel {
 public:
  /// Throws InvalidArgument if layer shapes do not chain or a pooling
  /// configuration is invalid.
  explicit DcppModel(std::vector<LayerSpec> layers);

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  std::vector<LayerSpec>& layers() noexcept { return layers_; }
  std::size_t depth() const noexcept { return layers_.size(); }
  std::size_t input_length() const { return layers_.front().dict.signal_length(); }

 private:
  std::vector<LayerSpec> layers_;
};

/// 1-D maxfun pooling of a code viewed as positions x filters.
Vec pool_code(const SparseCode& code, const LayerSpec& layer);

struct LayerOutcome {
  SparseCode code;
  Vec pooled;
};

/// Solves one layer: (0-based layer index, layer, input signal) -> code.
using LayerSolver = std::function<SparseCode(std::size_t, const LayerSpec&, const Vec&)>;

LayerSolver greedy_solver(GreedyOptions opts = {});
LayerSolver oracle_solver(std::vector<std::vector<std::size_t>> supports);

/// Runs pursuit then pooling layer by layer, feeding each pooled output to the
/// next layer. Solver infeasibility is rethrown tagged with the 1-based layer.
std::vector<LayerOutcome> dcpp_forward(const Vec& input, const DcppModel& model, const LayerSolver& solver);

enum class SolverKind { oracle, greedy };

/// Which coherence enters the budget recursion: each layer's own mu(D_i), or
/// mu(D_1) for every layer as the recursion is literally printed.
enum class CoherenceReading { per_layer, first_layer };

struct StabilityOptions {
  std::uint64_t seed = 0;
  double eps0 = 0.1;
  AmplitudeRange amp{1.0, 2.0};
  SolverKind solver = SolverKind::oracle;
  CoherenceReading reading = CoherenceReading::per_layer;
  double slack = 1e-9;
};

/// Noiseless chain {Gamma_i*, P_i*} with X = D_1 Gamma_1* and
/// P_{i-1}* = D_i Gamma_i*, built from the deepest layer down.
struct GroundTruth {
  std::vector<SparseCode> codes;
  std::vector<Vec> pooled;
  Vec signal;
};

GroundTruth synthesize_ground_truth(const DcppModel& model, std::uint64_t seed, AmplitudeRange amp);

struct LayerCheck {
  std::size_t layer = 0;  // 1-based
  double mu = 0.0;
  std::size_t lambda = 0;
  double eps_sq = 0.0;
  double code_dev_sq = 0.0;
  double pool_dev_sq = 0.0;
  bool pool_within_code = false;
  bool code_within_eps = false;
  bool solver_fallback = false;

  bool pass() const noexcept { return pool_within_code && code_within_eps; }
};

struct StabilityReport {
  std::uint64_t seed = 0;
  double noise_norm = 0.0;
  std::vector<LayerCheck> layers;

  bool pass() const noexcept;
};

/// Throws InvalidArgument naming the layer, mu and lambda when a layer fails
/// the sparsity condition, or when the model cannot host a synthesized chain.
void check_stability_preconditions(const DcppModel& model);

/// Squared budgets eps_1^2..eps_L^2 for the model under `reading`.
std::vector<double> layer_eps_squared(const DcppModel& model, double eps0, CoherenceReading reading);

StabilityReport verify_stability(const DcppModel& model, const StabilityOptions& opts);

void write_report_header(std::ostream& os);
void write_report_rows(std::ostream& os, const StabilityReport& report);

/// Two-layer model used by the verification harness: a signed three-tap
/// filter then a non-negative three-tap filter, both with mu ~ 0.192 and
/// lambda = 1, pooled with centered maxfun over disjoint length-5 windows.
DcppModel default_stability_model(std::size_t signal_length);

}  // namespace maxfun::csc
