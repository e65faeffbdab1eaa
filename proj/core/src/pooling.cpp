#include "maxfun/pooling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "maxfun/error.hpp"

namespace maxfun::pool {

namespace {

std::string dims(std::size_t a, std::size_t b) { return std::to_string(a) + "x" + std::to_string(b); }

void require_grid_matches(const Image& x, const PoolGrid& g) {
  if (x.rows() != g.in_rows() || x.cols() != g.in_cols()) {
    throw InvalidArgument("input " + dims(x.rows(), x.cols()) + " does not match grid input " +
                          dims(g.in_rows(), g.in_cols()));
  }
}

// Row-major accumulation over a side x side square with top-left (top, left).
double square_sum(const Image& x, std::size_t top, std::size_t left, std::size_t side) {
  double acc = 0.0;
  for (std::size_t i = top; i < top + side; ++i) {
    const double* row = x.row(i) + left;
    for (std::size_t j = 0; j < side; ++j) acc += row[j];
  }
  return acc;
}

double window_max(const Image& x, Cell o, std::size_t w) {
  double best = x(o.row, o.col);
  for (std::size_t i = o.row; i < o.row + w; ++i) {
    const double* row = x.row(i) + o.col;
    for (std::size_t j = 0; j < w; ++j) best = std::max(best, row[j]);
  }
  return best;
}

double window_avg(const Image& x, Cell o, std::size_t w) {
  return square_sum(x, o.row, o.col, w) / static_cast<double>(w * w);
}

double side_area(std::size_t r) {
  const std::size_t side = 2 * r + 1;
  return static_cast<double>(side * side);
}

// Best average at radius r over every placement inside the window. Sums for one
// row of placements are accumulated together; each accumulator still sees its
// square in row-major order.
void best_noncentered(const Image& x, Cell o, std::size_t w, std::size_t r, std::vector<double>& acc,
                      double& best, Cell& where) {
  const std::size_t side = 2 * r + 1;
  const std::size_t placements = w - side + 1;
  const double area = side_area(r);
  acc.resize(placements);
  bool first = true;
  for (std::size_t ti = 0; ti < placements; ++ti) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t di = 0; di < side; ++di) {
      const double* row = x.row(o.row + ti + di) + o.col;
      for (std::size_t dj = 0; dj < side; ++dj) {
        const double* p = row + dj;
        double* a = acc.data();
        for (std::size_t tj = 0; tj < placements; ++tj) a[tj] += p[tj];
      }
    }
    for (std::size_t tj = 0; tj < placements; ++tj) {
      const double avg = acc[tj] / area;
      if (first || avg > best) {
        best = avg;
        where = {o.row + ti + r, o.col + tj + r};
        first = false;
      }
    }
  }
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidArgument("mixed pooling alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
}

}  // namespace

PoolGrid::PoolGrid(std::size_t in_rows, std::size_t in_cols, std::size_t window, std::size_t stride)
    : in_rows_(in_rows), in_cols_(in_cols), window_(window), stride_(stride) {
  if (stride == 0) throw InvalidArgument("pooling stride must be positive");
  if (window == 0) throw InvalidArgument("pooling window must be positive");
  if (window > std::min(in_rows, in_cols)) {
    throw InvalidArgument("pooling window " + std::to_string(window) + " exceeds input " +
                          dims(in_rows, in_cols));
  }
  out_rows_ = (in_rows - window) / stride + 1;
  out_cols_ = (in_cols - window) / stride + 1;
}

std::vector<Cell> PoolGrid::window_indices(std::size_t k, std::size_t l) const {
  if (k >= out_rows_ || l >= out_cols_) throw InvalidArgument("window index out of range");
  const Cell o = origin(k, l);
  std::vector<Cell> out;
  out.reserve(window_ * window_);
  for (std::size_t i = 0; i < window_; ++i) {
    for (std::size_t j = 0; j < window_; ++j) out.push_back({o.row + i, o.col + j});
  }
  return out;
}

PoolGrid make_grid(std::size_t rows, std::size_t cols, std::size_t window, std::size_t stride) {
  return PoolGrid(rows, cols, window, stride);
}

void MaxfunConfig::validate(std::size_t window) const {
  if (r_min < 1) throw InvalidArgument("maxfun r_min must be at least 1");
  if (b < r_min) {
    throw InvalidArgument("maxfun b (" + std::to_string(b) + ") must be >= r_min (" +
                          std::to_string(r_min) + ")");
  }
  if (2 * b + 1 > window) {
    throw InvalidArgument("maxfun requires 2b+1 <= window (b=" + std::to_string(b) +
                          ", window=" + std::to_string(window) + ")");
  }
  if (centered && window % 2 == 0) {
    throw InvalidArgument("centered maxfun requires an odd window, got " + std::to_string(window));
  }
}

void require_nonnegative(std::span<const double> values, std::string_view what) {
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument(std::string(what) + ": pooling input must be finite and non-negative, found " +
                            std::to_string(v));
    }
  }
}

std::vector<Cell> subsquare(Cell center, std::size_t r, std::size_t rows, std::size_t cols) {
  if (center.row < r || center.col < r || center.row + r >= rows || center.col + r >= cols) {
    throw InvalidArgument("sub-square of radius " + std::to_string(r) + " around (" +
                          std::to_string(center.row) + "," + std::to_string(center.col) +
                          ") leaves the " + dims(rows, cols) + " lattice");
  }
  std::vector<Cell> out;
  out.reserve((2 * r + 1) * (2 * r + 1));
  for (std::size_t i = center.row - r; i <= center.row + r; ++i) {
    for (std::size_t j = center.col - r; j <= center.col + r; ++j) out.push_back({i, j});
  }
  return out;
}

PoolOutput pool_avg(const Image& x, const PoolGrid& g) {
  require_grid_matches(x, g);
  require_nonnegative(x.values(), "pool_avg");
  PoolOutput out{Image(g.out_rows(), g.out_cols()), {}};
  for (std::size_t k = 0; k < g.out_rows(); ++k) {
    for (std::size_t l = 0; l < g.out_cols(); ++l) out.values(k, l) = window_avg(x, g.origin(k, l), g.window());
  }
  return out;
}

PoolOutput pool_max(const Image& x, const PoolGrid& g) {
  require_grid_matches(x, g);
  require_nonnegative(x.values(), "pool_max");
  PoolOutput out{Image(g.out_rows(), g.out_cols()), {}};
  for (std::size_t k = 0; k < g.out_rows(); ++k) {
    for (std::size_t l = 0; l < g.out_cols(); ++l) out.values(k, l) = window_max(x, g.origin(k, l), g.window());
  }
  return out;
}

PoolOutput pool_mixed(const Image& x, const PoolGrid& g, double alpha) {
  check_alpha(alpha);
  require_grid_matches(x, g);
  require_nonnegative(x.values(), "pool_mixed");
  PoolOutput out{Image(g.out_rows(), g.out_cols()), {}};
  for (std::size_t k = 0; k < g.out_rows(); ++k) {
    for (std::size_t l = 0; l < g.out_cols(); ++l) {
      const Cell o = g.origin(k, l);
      out.values(k, l) = alpha * window_max(x, o, g.window()) + (1.0 - alpha) * window_avg(x, o, g.window());
    }
  }
  return out;
}

PoolOutput pool_stochastic(const Image& x, const PoolGrid& g) {
  require_grid_matches(x, g);
  require_nonnegative(x.values(), "pool_stochastic");
  PoolOutput out{Image(g.out_rows(), g.out_cols()), {}};
  const std::size_t w = g.window();
  for (std::size_t k = 0; k < g.out_rows(); ++k) {
    for (std::size_t l = 0; l < g.out_cols(); ++l) {
      const Cell o = g.origin(k, l);
      double sum = 0.0;
      double sum_sq = 0.0;
      for (std::size_t i = o.row; i < o.row + w; ++i) {
        const double* row = x.row(i) + o.col;
        for (std::size_t j = 0; j < w; ++j) {
          sum += row[j];
          sum_sq += row[j] * row[j];
        }
      }
      out.values(k, l) = sum > 0.0 ? sum_sq / sum : 0.0;
    }
  }
  return out;
}

RadiusProfile maxfun_profile(const Image& x, const PoolGrid& g, std::size_t r_lo, std::size_t r_hi,
                             bool centered) {
  require_grid_matches(x, g);
  MaxfunConfig{r_lo, r_hi, centered}.validate(g.window());
  require_nonnegative(x.values(), "pool_maxfun");

  RadiusProfile p;
  p.out_rows = g.out_rows();
  p.out_cols = g.out_cols();
  p.r_lo = r_lo;
  p.r_hi = r_hi;
  const std::size_t radii = p.radii();
  p.best.resize(g.cell_count() * radii);
  p.argmax.resize(g.cell_count() * radii);

  const std::size_t w = g.window();
  const std::size_t half = (w - 1) / 2;
  std::vector<double> acc;
  for (std::size_t k = 0; k < g.out_rows(); ++k) {
    for (std::size_t l = 0; l < g.out_cols(); ++l) {
      const Cell o = g.origin(k, l);
      const std::size_t cell = k * g.out_cols() + l;
      for (std::size_t r = r_lo; r <= r_hi; ++r) {
        const std::size_t slot = cell * radii + (r - r_lo);
        if (centered) {
          const Cell c{o.row + half, o.col + half};
          p.best[slot] = square_sum(x, c.row - r, c.col - r, 2 * r + 1) / side_area(r);
          p.argmax[slot] = c;
        } else {
          best_noncentered(x, o, w, r, acc, p.best[slot], p.argmax[slot]);
        }
      }
    }
  }
  return p;
}

PoolOutput reduce_profile(const RadiusProfile& p, std::size_t r_min) {
  if (r_min < p.r_lo || r_min > p.r_hi) {
    throw InvalidArgument("r_min " + std::to_string(r_min) + " outside profile radii [" +
                          std::to_string(p.r_lo) + ", " + std::to_string(p.r_hi) + "]");
  }
  const std::size_t radii = p.radii();
  PoolOutput out{Image(p.out_rows, p.out_cols), std::vector<Winner>(p.out_rows * p.out_cols)};
  for (std::size_t cell = 0; cell < p.out_rows * p.out_cols; ++cell) {
    std::size_t pick = r_min - p.r_lo;
    for (std::size_t s = pick + 1; s < radii; ++s) {
      if (p.best[cell * radii + s] > p.best[cell * radii + pick]) pick = s;
    }
    out.values.values()[cell] = p.best[cell * radii + pick];
    out.provenance[cell] = {p.r_lo + pick, p.argmax[cell * radii + pick]};
  }
  return out;
}

PoolOutput pool_maxfun(const Image& x, const PoolGrid& g, const MaxfunConfig& cfg) {
  cfg.validate(g.window());
  return reduce_profile(maxfun_profile(x, g, cfg.r_min, cfg.b, cfg.centered), cfg.r_min);
}

namespace {
constexpr std::array<std::pair<Method, std::string_view>, 6> kMethodNames{{
    {Method::avg, "avg"},
    {Method::max, "max"},
    {Method::maxfun, "maxfun"},
    {Method::maxfun_noncentered, "maxfun_noncentered"},
    {Method::mixed, "mixed"},
    {Method::stochastic, "stochastic"},
}};
}  // namespace

std::string_view to_string(Method m) {
  for (const auto& [method, name] : kMethodNames) {
    if (method == m) return name;
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& [method, n] : kMethodNames) {
    if (n == name) return method;
  }
  throw InvalidArgument("unknown pooling method '" + std::string(name) +
                        "' (expected avg, max, maxfun, maxfun_noncentered, mixed or stochastic)");
}

PoolOutput apply(const Image& x, const PoolGrid& g, Method method, const PoolParams& params) {
  switch (method) {
    case Method::avg:
      return pool_avg(x, g);
    case Method::max:
      return pool_max(x, g);
    case Method::maxfun:
      return pool_maxfun(x, g, {params.r_min, params.b, true});
    case Method::maxfun_noncentered:
      return pool_maxfun(x, g, {params.r_min, params.b, false});
    case Method::mixed:
      return pool_mixed(x, g, params.alpha);
    case Method::stochastic:
      return pool_stochastic(x, g);
  }
  throw InvalidArgument("unhandled pooling method");
}

Grid1d make_grid_1d(std::size_t length, std::size_t window, std::size_t stride) {
  if (stride == 0) throw InvalidArgument("pooling stride must be positive");
  if (window == 0 || window > length) {
    throw InvalidArgument("1-D pooling window " + std::to_string(window) + " does not fit length " +
                          std::to_string(length));
  }
  return {length, window, stride, (length - window) / stride + 1};
}

std::vector<double> pool_maxfun_1d(std::span<const double> x, std::size_t channels, const Grid1d& g,
                                   const MaxfunConfig& cfg) {
  if (channels == 0) throw InvalidArgument("pool_maxfun_1d: channel count must be positive");
  if (x.size() != g.length * channels) {
    throw InvalidArgument("pool_maxfun_1d: input length " + std::to_string(x.size()) + " != " +
                          std::to_string(g.length) + " positions x " + std::to_string(channels) +
                          " channels");
  }
  cfg.validate(g.window);
  require_nonnegative(x, "pool_maxfun_1d");

  const std::size_t half = (g.window - 1) / 2;
  auto interval_avg = [&](std::size_t first, std::size_t r, std::size_t c) {
    double acc = 0.0;
    for (std::size_t p = first; p < first + 2 * r + 1; ++p) acc += x[p * channels + c];
    return acc / static_cast<double>(2 * r + 1);
  };

  std::vector<double> out(g.count * channels);
  for (std::size_t k = 0; k < g.count; ++k) {
    const std::size_t origin = k * g.stride;
    for (std::size_t c = 0; c < channels; ++c) {
      double best = 0.0;
      bool first = true;
      for (std::size_t r = cfg.r_min; r <= cfg.b; ++r) {
        const std::size_t lo = cfg.centered ? half : r;
        const std::size_t hi = cfg.centered ? half : g.window - 1 - r;
        for (std::size_t center = lo; center <= hi; ++center) {
          const double avg = interval_avg(origin + center - r, r, c);
          if (first || avg > best) {
            best = avg;
            first = false;
          }
        }
      }
      out[k * channels + c] = best;
    }
  }
  return out;
}

}  // namespace maxfun::pool
