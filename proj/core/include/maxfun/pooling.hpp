#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maxfun/core.hpp"

namespace maxfun::pool {

struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const Cell&) const = default;
};

/// Geometry of square pooling windows over an in_rows x in_cols input.
///
/// Window (k, l) covers rows [k*stride, k*stride + window) and the matching
/// columns. Only windows lying fully inside the input are emitted, so
/// out_rows = (in_rows - window) / stride + 1. With window == stride this is
/// the usual partition into floor(M/s) x floor(N/s) disjoint squares.
class PoolGrid {
 public:
  PoolGrid(std::size_t in_rows, std::size_t in_cols, std::size_t window, std::size_t stride);

  std::size_t in_rows() const noexcept { return in_rows_; }
  std::size_t in_cols() const noexcept { return in_cols_; }
  std::size_t window() const noexcept { return window_; }
  std::size_t stride() const noexcept { return stride_; }
  std::size_t out_rows() const noexcept { return out_rows_; }
  std::size_t out_cols() const noexcept { return out_cols_; }
  std::size_t cell_count() const noexcept { return out_rows_ * out_cols_; }

  /// True when windows do not overlap (stride >= window).
  bool disjoint() const noexcept { return stride_ >= window_; }

  Cell origin(std::size_t k, std::size_t l) const { return {k * stride_, l * stride_}; }

  /// Index set of window (k, l), row-major.
  std::vector<Cell> window_indices(std::size_t k, std::size_t l) const;

 private:
  std::size_t in_rows_;
  std::size_t in_cols_;
  std::size_t window_;
  std::size_t stride_;
  std::size_t out_rows_;
  std::size_t out_cols_;
};

/// Throws InvalidArgument when the window does not fit or the stride is zero.
PoolGrid make_grid(std::size_t rows, std::size_t cols, std::size_t window, std::size_t stride);

/// Radius range for maxfun pooling. Candidates are averages over
/// (2r+1)-sided sub-squares with r_min <= r <= b. In centered mode every
/// sub-square shares the window center; otherwise every placement that fits
/// inside the window is a candidate.
struct MaxfunConfig {
  std::size_t r_min = 1;
  std::size_t b = 1;
  bool centered = true;

  /// Checks r_min >= 1, b >= r_min, 2b+1 <= window and, when centered, an odd window.
  void validate(std::size_t window) const;
};

/// Winning candidate of one maxfun cell.
struct Winner {
  std::size_t radius = 0;
  Cell center;
  bool operator==(const Winner&) const = default;
};

struct PoolOutput {
  Image values;
  /// Per-cell winners in row-major cell order; empty for non-maxfun operators.
  std::vector<Winner> provenance;
};

/// Indices of the (2r+1) x (2r+1) square centered at `center`, row-major.
/// Throws InvalidArgument when the square leaves the rows x cols lattice.
std::vector<Cell> subsquare(Cell center, std::size_t r, std::size_t rows, std::size_t cols);

PoolOutput pool_avg(const Image& x, const PoolGrid& g);
PoolOutput pool_max(const Image& x, const PoolGrid& g);
PoolOutput pool_maxfun(const Image& x, const PoolGrid& g, const MaxfunConfig& cfg);
/// alpha * max + (1 - alpha) * avg, alpha in [0, 1].
PoolOutput pool_mixed(const Image& x, const PoolGrid& g, double alpha);
/// sum(x^2) / sum(x) per window; an all-zero window pools to 0.
PoolOutput pool_stochastic(const Image& x, const PoolGrid& g);

/// Best candidate average per radius, for reuse across several r_min values.
struct RadiusProfile {
  std::size_t out_rows = 0;
  std::size_t out_cols = 0;
  std::size_t r_lo = 1;
  std::size_t r_hi = 1;
  /// best[cell * radii + (r - r_lo)]
  std::vector<double> best;
  std::vector<Cell> argmax;

  std::size_t radii() const noexcept { return r_hi - r_lo + 1; }
};

RadiusProfile maxfun_profile(const Image& x, const PoolGrid& g, std::size_t r_lo, std::size_t r_hi,
                             bool centered);

/// Maxfun output for radii [r_min, profile.r_hi]; ties resolve to the smaller radius.
PoolOutput reduce_profile(const RadiusProfile& profile, std::size_t r_min);

enum class Method { avg, max, maxfun, maxfun_noncentered, mixed, stochastic };

std::string_view to_string(Method m);
/// Accepts the names produced by to_string; throws InvalidArgument otherwise.
Method parse_method(std::string_view name);

struct PoolParams {
  double alpha = 0.5;
  std::size_t r_min = 1;
  std::size_t b = 1;
};

/// Dispatches to the operator named by `method`.
PoolOutput apply(const Image& x, const PoolGrid& g, Method method, const PoolParams& params);

/// 1-D grid of intervals [k*stride, k*stride + window) over `length` positions.
struct Grid1d {
  std::size_t length = 0;
  std::size_t window = 0;
  std::size_t stride = 0;
  std::size_t count = 0;
};

Grid1d make_grid_1d(std::size_t length, std::size_t window, std::size_t stride);

/// Interval analogue of pool_maxfun applied to each channel independently.
/// `x` holds length * channels values, position-major (x[p * channels + c]);
/// the result uses the same interleaving with count positions.
std::vector<double> pool_maxfun_1d(std::span<const double> x, std::size_t channels, const Grid1d& g,
                                   const MaxfunConfig& cfg);

/// Throws InvalidArgument if any entry is negative or not finite.
void require_nonnegative(std::span<const double> values, std::string_view what);

}  // namespace maxfun::pool
