#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maxfun/core.hpp"
#include "maxfun/pooling.hpp"

namespace maxfun::selfcheck {

/// Straightforward loop implementations used as references. They share no
/// code with the library operators but follow the same accumulation order,
/// so agreement is expected to the last bit.
namespace naive {

struct Pooled {
  Image values;
  std::vector<pool::Winner> winners;  // maxfun only
};

Pooled avg(const Image& x, std::size_t window, std::size_t stride);
Pooled max(const Image& x, std::size_t window, std::size_t stride);
Pooled mixed(const Image& x, std::size_t window, std::size_t stride, double alpha);
Pooled stochastic(const Image& x, std::size_t window, std::size_t stride);
Pooled maxfun(const Image& x, std::size_t window, std::size_t stride, std::size_t r_min, std::size_t b,
              bool centered);

/// Interleaved position-major layout as in pool::pool_maxfun_1d.
std::vector<double> maxfun_1d(std::span<const double> x, std::size_t channels, std::size_t window,
                              std::size_t stride, std::size_t r_min, std::size_t b, bool centered);

/// Pairwise maximum of |<d_i, d_j>| / (|d_i| |d_j|) over i < j.
double coherence(const Mat& d);

}  // namespace naive

struct SuiteResult {
  std::string name;
  bool pass = false;
  std::size_t trials = 0;
  std::size_t failures = 0;
  /// Largest observed violation (or mismatch), suite-specific units.
  double worst = 0.0;
  double seconds = 0.0;
  std::string detail;
};

/// avg <= maxfun <= max per cell on random 63x63 images, window = stride = 7,
/// r_min = 1, b = 3.
SuiteResult sandwich(std::uint64_t seed, std::size_t images = 1000);

/// ||P - P^|| <= ||X - X^|| for centered maxfun over disjoint windows, on
/// random, nearby and argmax-flipping pairs, in 2-D and 1-D.
SuiteResult non_expansiveness(std::uint64_t seed, std::size_t trials_per_dim = 10000);

/// Library operators against the naive loops, both grid regimes, plus 1-D maxfun.
SuiteResult oracle_equivalence(std::uint64_t seed, std::size_t inputs = 100);

/// r_min = b with 2b + 1 = window makes maxfun equal avg exactly.
SuiteResult degenerate_identity(std::uint64_t seed, std::size_t inputs = 100);

/// avg <= mixed <= max and avg <= stochastic <= max.
SuiteResult mixed_stochastic_bounds(std::uint64_t seed, std::size_t inputs = 200);

/// x <= x^ pointwise implies P(x) <= P(x^) for avg, max, mixed and both
/// maxfun variants. Stochastic pooling is excluded: it is not monotone.
SuiteResult monotonicity(std::uint64_t seed, std::size_t trials = 500);

/// mutual_coherence against the pairwise reference on random dictionaries,
/// and zero for the identity.
SuiteResult coherence(std::uint64_t seed, std::size_t dictionaries = 50);

/// Hand-checked values of the budget recursion and the mu = 0 doubling law.
SuiteResult epsilon_arithmetic();

/// Both stability inequalities on seeded two-layer trials for each length.
SuiteResult stability(std::uint64_t seed, std::size_t trials = 100,
                      std::vector<std::size_t> lengths = {32, 64});

std::vector<SuiteResult> run_all(std::uint64_t seed);

/// One line: "[PASS] name: trials=... failures=... worst=... (x.xx s) detail".
std::string format(const SuiteResult& r);

}  // namespace maxfun::selfcheck
