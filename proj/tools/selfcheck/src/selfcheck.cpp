#include "maxfun/selfcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "maxfun/csc.hpp"
#include "maxfun/random.hpp"

namespace maxfun::selfcheck {

namespace naive {

namespace {

std::size_t count(std::size_t n, std::size_t window, std::size_t stride) { return (n - window) / stride + 1; }

template <typename F>
Pooled per_window(const Image& x, std::size_t window, std::size_t stride, F&& f) {
  Pooled out{Image(count(x.rows(), window, stride), count(x.cols(), window, stride)), {}};
  for (std::size_t k = 0; k < out.values.rows(); ++k) {
    for (std::size_t l = 0; l < out.values.cols(); ++l) out.values(k, l) = f(k * stride, l * stride);
  }
  return out;
}

double box_sum(const Image& x, std::size_t top, std::size_t left, std::size_t side) {
  double s = 0.0;
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) s += x(top + i, left + j);
  }
  return s;
}

double box_max(const Image& x, std::size_t top, std::size_t left, std::size_t side) {
  double m = x(top, left);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) m = x(top + i, left + j) > m ? x(top + i, left + j) : m;
  }
  return m;
}

}  // namespace

Pooled avg(const Image& x, std::size_t window, std::size_t stride) {
  const double area = static_cast<double>(window * window);
  return per_window(x, window, stride, [&](std::size_t i, std::size_t j) { return box_sum(x, i, j, window) / area; });
}

Pooled max(const Image& x, std::size_t window, std::size_t stride) {
  return per_window(x, window, stride, [&](std::size_t i, std::size_t j) { return box_max(x, i, j, window); });
}

Pooled mixed(const Image& x, std::size_t window, std::size_t stride, double alpha) {
  const double area = static_cast<double>(window * window);
  return per_window(x, window, stride, [&](std::size_t i, std::size_t j) {
    return alpha * box_max(x, i, j, window) + (1.0 - alpha) * (box_sum(x, i, j, window) / area);
  });
}

Pooled stochastic(const Image& x, std::size_t window, std::size_t stride) {
  return per_window(x, window, stride, [&](std::size_t top, std::size_t left) {
    double s = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
      for (std::size_t j = 0; j < window; ++j) {
        const double v = x(top + i, left + j);
        s += v;
        sq += v * v;
      }
    }
    return s > 0.0 ? sq / s : 0.0;
  });
}

Pooled maxfun(const Image& x, std::size_t window, std::size_t stride, std::size_t r_min, std::size_t b,
              bool centered) {
  Pooled out{Image(count(x.rows(), window, stride), count(x.cols(), window, stride)), {}};
  const std::size_t half = (window - 1) / 2;
  for (std::size_t k = 0; k < out.values.rows(); ++k) {
    for (std::size_t l = 0; l < out.values.cols(); ++l) {
      const std::size_t top = k * stride;
      const std::size_t left = l * stride;
      double best = 0.0;
      pool::Winner win;
      bool first = true;
      for (std::size_t r = r_min; r <= b; ++r) {
        const std::size_t side = 2 * r + 1;
        const double area = static_cast<double>(side * side);
        const std::size_t lo = centered ? half : r;
        const std::size_t hi = centered ? half : window - 1 - r;
        for (std::size_t ci = lo; ci <= hi; ++ci) {
          for (std::size_t cj = lo; cj <= hi; ++cj) {
            const double a = box_sum(x, top + ci - r, left + cj - r, side) / area;
            if (first || a > best) {
              best = a;
              win = {r, {top + ci, left + cj}};
              first = false;
            }
          }
        }
      }
      out.values(k, l) = best;
      out.winners.push_back(win);
    }
  }
  return out;
}

std::vector<double> maxfun_1d(std::span<const double> x, std::size_t channels, std::size_t window,
                              std::size_t stride, std::size_t r_min, std::size_t b, bool centered) {
  const std::size_t length = x.size() / channels;
  const std::size_t cells = count(length, window, stride);
  const std::size_t half = (window - 1) / 2;
  std::vector<double> out(cells * channels);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 0; k < cells; ++k) {
      double best = 0.0;
      bool first = true;
      for (std::size_t r = r_min; r <= b; ++r) {
        const std::size_t lo = centered ? half : r;
        const std::size_t hi = centered ? half : window - 1 - r;
        for (std::size_t center = lo; center <= hi; ++center) {
          double s = 0.0;
          for (std::size_t p = k * stride + center - r; p <= k * stride + center + r; ++p) s += x[p * channels + c];
          const double a = s / static_cast<double>(2 * r + 1);
          if (first || a > best) {
            best = a;
            first = false;
          }
        }
      }
      out[k * channels + c] = best;
    }
  }
  return out;
}

double coherence(const Mat& d) {
  double mu = 0.0;
  for (Eigen::Index i = 0; i < d.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) {
      double dot = 0.0;
      double ni = 0.0;
      double nj = 0.0;
      for (Eigen::Index r = 0; r < d.rows(); ++r) {
        dot += d(r, i) * d(r, j);
        ni += d(r, i) * d(r, i);
        nj += d(r, j) * d(r, j);
      }
      mu = std::max(mu, std::abs(dot) / (std::sqrt(ni) * std::sqrt(nj)));
    }
  }
  return mu;
}

}  // namespace naive

namespace {

using Clock = std::chrono::steady_clock;

class Tally {
 public:
  explicit Tally(std::string name) : start_(Clock::now()) { r_.name = std::move(name); }

  // Records one trial whose violation is `excess` (pass when <= 0).
  void trial(double excess) {
    ++r_.trials;
    if (excess > 0.0 || std::isnan(excess)) ++r_.failures;
    if (std::isnan(excess) || excess > r_.worst) r_.worst = excess;
  }
  void check(bool ok) { trial(ok ? 0.0 : 1.0); }
  void note(std::string d) { r_.detail = std::move(d); }

  SuiteResult finish() {
    r_.seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    r_.pass = r_.trials > 0 && r_.failures == 0;
    return r_;
  }

 private:
  SuiteResult r_;
  Clock::time_point start_;
};

Image random_image(Rng& rng, std::size_t rows, std::size_t cols) {
  Image img(rows, cols);
  for (double& v : img.values()) v = rng.uniform();
  return img;
}

// Heavy-tailed non-negative image: mostly small values with sparse spikes,
// which spreads the maxfun winner across radii and positions.
Image spiky_image(Rng& rng, std::size_t rows, std::size_t cols) {
  Image img(rows, cols);
  for (double& v : img.values()) v = rng.uniform() < 0.1 ? 5.0 * rng.uniform() : 0.2 * rng.uniform();
  return img;
}

std::size_t odd_between(Rng& rng, std::size_t lo, std::size_t hi) {
  std::size_t w = lo + rng.below(hi - lo + 1);
  return w % 2 == 1 ? w : w - 1;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = std::abs(a[k] - b[k]);
    if (d > m || std::isnan(d)) m = d;
  }
  return m;
}

double l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

// Raises the ring at radius r around `center` so that its radius-r average
// exceeds `target` by a hair, which moves the maxfun winner whenever no
// larger radius overtakes it.
void raise_ring(Image& x, pool::Cell center, std::size_t r, double current_avg, double target, double hair) {
  const std::size_t side = 2 * r + 1;
  const std::size_t ring = side * side - (2 * r - 1) * (2 * r - 1);
  const double t = (target - current_avg + hair) * static_cast<double>(side * side) / static_cast<double>(ring);
  if (!(t > 0.0)) return;
  for (std::size_t i = center.row - r; i <= center.row + r; ++i) {
    for (std::size_t j = center.col - r; j <= center.col + r; ++j) {
      const bool on_ring = i == center.row - r || i == center.row + r || j == center.col - r || j == center.col + r;
      if (on_ring) x(i, j) += t;
    }
  }
}

}  // namespace

SuiteResult sandwich(std::uint64_t seed, std::size_t images) {
  Tally tally("sandwich");
  const double slack = 1e-12;
  const pool::PoolGrid g(63, 63, 7, 7);
  Rng rng(seed);
  for (std::size_t n = 0; n < images; ++n) {
    const Image x = n % 2 == 0 ? random_image(rng, 63, 63) : spiky_image(rng, 63, 63);
    const Image a = pool::pool_avg(x, g).values;
    const Image m = pool::pool_max(x, g).values;
    const Image f = pool::pool_maxfun(x, g, {1, 3, true}).values;
    const Image fn = pool::pool_maxfun(x, g, {1, 3, false}).values;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double av = a.values()[k];
      const double mv = m.values()[k];
      for (double fv : {f.values()[k], fn.values()[k]}) tally.trial(std::max(av - fv, fv - mv) - slack);
    }
  }
  tally.note("cells (centered and non-centered) over " + std::to_string(images) + " images 63x63, w=s=7, r_min=1, b=3");
  return tally.finish();
}

SuiteResult non_expansiveness(std::uint64_t seed, std::size_t trials_per_dim) {
  Tally tally("non-expansiveness");
  const double slack = 1e-12;
  Rng rng(seed);
  std::size_t flips = 0;

  // 2-D: 21x21 with w=s=7, or 23x23 with w=7, s=8 (gaps between windows).
  for (std::size_t t = 0; t < trials_per_dim; ++t) {
    const bool gapped = t % 4 == 3;
    const std::size_t n = gapped ? 23 : 21;
    const pool::PoolGrid g(n, n, 7, gapped ? 8 : 7);
    const pool::MaxfunConfig cfg{1, 3, true};
    const Image x = t % 2 == 0 ? random_image(rng, n, n) : spiky_image(rng, n, n);
    const auto px = pool::pool_maxfun(x, g, cfg);
    Image y = x;
    switch (t % 3) {
      case 0:
        y = random_image(rng, n, n);
        break;
      case 1:
        for (double& v : y.values()) v = std::max(0.0, v + 0.05 * (rng.uniform() - 0.5));
        break;
      default: {
        // Argmax flip in every cell: lift a different radius just past the winner.
        for (std::size_t cell = 0; cell < g.cell_count(); ++cell) {
          const auto& win = px.provenance[cell];
          std::size_t r = 1 + rng.below(3);
          if (r == win.radius) r = r == 3 ? 1 : r + 1;
          const Image cur = pool::pool_maxfun(y, g, {r, r, true}).values;
          raise_ring(y, win.center, r, cur.values()[cell], px.values.values()[cell], 1e-9 * rng.uniform());
        }
        break;
      }
    }
    const auto py = pool::pool_maxfun(y, g, cfg);
    for (std::size_t cell = 0; cell < g.cell_count(); ++cell) {
      if (py.provenance[cell].radius != px.provenance[cell].radius) ++flips;
    }
    tally.trial(l2(py.values.values(), px.values.values()) - l2(y.values(), x.values()) - slack);
  }

  // 1-D: channels interleaved, w=5 with s=5 or s=6.
  for (std::size_t t = 0; t < trials_per_dim; ++t) {
    const std::size_t channels = 1 + rng.below(3);
    const std::size_t stride = t % 2 == 0 ? 5 : 6;
    const std::size_t cells = 2 + rng.below(6);
    const auto g = pool::make_grid_1d((cells - 1) * stride + 5, 5, stride);
    const pool::MaxfunConfig cfg{1, 2, true};
    std::vector<double> x(g.length * channels);
    for (double& v : x) v = rng.uniform() < 0.2 ? 3.0 * rng.uniform() : 0.3 * rng.uniform();
    std::vector<double> y = x;
    switch (t % 3) {
      case 0:
        for (double& v : y) v = rng.uniform();
        break;
      case 1:
        for (double& v : y) v = std::max(0.0, v + 0.05 * (rng.uniform() - 0.5));
        break;
      default:
        // Lift both ends of the radius-2 interval past the radius-1 average.
        for (std::size_t k = 0; k < g.count; ++k) {
          for (std::size_t c = 0; c < channels; ++c) {
            auto at = [&](std::size_t p) -> double& { return y[(k * stride + p) * channels + c]; };
            const double r1 = (at(1) + at(2) + at(3)) / 3.0;
            const double r2 = (at(0) + at(1) + at(2) + at(3) + at(4)) / 5.0;
            const double lift = std::max(0.0, (r1 - r2) * 5.0 / 2.0) + 1e-9 * rng.uniform();
            at(0) += lift;
            at(4) += lift;
          }
        }
        break;
    }
    const auto px = pool::pool_maxfun_1d(x, channels, g, cfg);
    const auto py = pool::pool_maxfun_1d(y, channels, g, cfg);
    tally.trial(l2(py, px) - l2(y, x) - slack);
  }
  tally.note(std::to_string(trials_per_dim) + " 2-D + " + std::to_string(trials_per_dim) + " 1-D pairs, " +
             std::to_string(flips) + " 2-D cells with a flipped winning radius");
  return tally.finish();
}

SuiteResult oracle_equivalence(std::uint64_t seed, std::size_t inputs) {
  Tally tally("oracle equivalence");
  Rng rng(seed);
  for (std::size_t n = 0; n < inputs; ++n) {
    const std::size_t rows = 7 + rng.below(26);
    const std::size_t cols = 7 + rng.below(26);
    const Image x = n % 2 == 0 ? random_image(rng, rows, cols) : spiky_image(rng, rows, cols);
    const std::size_t w = odd_between(rng, 3, std::min<std::size_t>(std::min(rows, cols), 11));
    const std::size_t b = (w - 1) / 2;
    const std::size_t r_min = 1 + rng.below(b);
    const double alpha = rng.uniform();
    for (const std::size_t s : {w, 1 + rng.below(w - 1)}) {
      const pool::PoolGrid g(rows, cols, w, s);
      auto same = [&](const pool::PoolOutput& lib, const naive::Pooled& ref) {
        const double diff = max_abs_diff(lib.values.values(), ref.values.values());
        const bool winners = ref.winners.empty() || lib.provenance == ref.winners;
        tally.trial(diff > 0.0 || !(lib.values == ref.values) || !winners ? std::max(diff, 1e-300) : 0.0);
      };
      same(pool::pool_avg(x, g), naive::avg(x, w, s));
      same(pool::pool_max(x, g), naive::max(x, w, s));
      same(pool::pool_mixed(x, g, alpha), naive::mixed(x, w, s, alpha));
      same(pool::pool_stochastic(x, g), naive::stochastic(x, w, s));
      same(pool::pool_maxfun(x, g, {r_min, b, true}), naive::maxfun(x, w, s, r_min, b, true));
      same(pool::pool_maxfun(x, g, {r_min, b, false}), naive::maxfun(x, w, s, r_min, b, false));
    }

    // 1-D maxfun on a random interleaved signal.
    const std::size_t channels = 1 + rng.below(3);
    const std::size_t length = w + rng.below(30);
    std::vector<double> v(length * channels);
    for (double& e : v) e = rng.uniform();
    for (const std::size_t s : {w, 1 + rng.below(w - 1)}) {
      for (bool centered : {true, false}) {
        const auto lib = pool::pool_maxfun_1d(v, channels, pool::make_grid_1d(length, w, s), {r_min, b, centered});
        const auto ref = naive::maxfun_1d(v, channels, w, s, r_min, b, centered);
        const double diff = max_abs_diff(lib, ref);
        tally.trial(diff > 0.0 || lib != ref ? std::max(diff, 1e-300) : 0.0);
      }
    }
  }
  tally.note(std::to_string(inputs) + " inputs up to 32x32, 6 operators x {s=w, s<w} plus 1-D maxfun; exact match");
  return tally.finish();
}

SuiteResult degenerate_identity(std::uint64_t seed, std::size_t inputs) {
  Tally tally("degenerate identity");
  Rng rng(seed);
  for (std::size_t n = 0; n < inputs; ++n) {
    const std::size_t rows = 5 + rng.below(28);
    const std::size_t cols = 5 + rng.below(28);
    const std::size_t w = odd_between(rng, 3, std::min(rows, cols));
    const std::size_t b = (w - 1) / 2;
    const std::size_t s = 1 + rng.below(w);
    const pool::PoolGrid g(rows, cols, w, s);
    const Image x = n % 2 == 0 ? random_image(rng, rows, cols) : spiky_image(rng, rows, cols);
    const Image a = pool::pool_avg(x, g).values;
    for (bool centered : {true, false}) tally.check(pool::pool_maxfun(x, g, {b, b, centered}).values == a);
  }
  tally.note(std::to_string(inputs) + " inputs, r_min = b, 2b+1 = w, bitwise comparison");
  return tally.finish();
}

SuiteResult mixed_stochastic_bounds(std::uint64_t seed, std::size_t inputs) {
  Tally tally("mixed/stochastic bounds");
  const double slack = 1e-12;
  Rng rng(seed);
  for (std::size_t n = 0; n < inputs; ++n) {
    const std::size_t rows = 4 + rng.below(29);
    const std::size_t cols = 4 + rng.below(29);
    const std::size_t w = 2 + rng.below(std::min(rows, cols) - 1);
    const pool::PoolGrid g(rows, cols, w, 1 + rng.below(w));
    const Image x = n % 2 == 0 ? random_image(rng, rows, cols) : spiky_image(rng, rows, cols);
    const Image a = pool::pool_avg(x, g).values;
    const Image m = pool::pool_max(x, g).values;
    const Image mix = pool::pool_mixed(x, g, rng.uniform()).values;
    const Image st = pool::pool_stochastic(x, g).values;
    for (std::size_t k = 0; k < a.size(); ++k) {
      for (double v : {mix.values()[k], st.values()[k]}) {
        tally.trial(std::max(a.values()[k] - v, v - m.values()[k]) - slack);
      }
    }
  }
  tally.note("cells over " + std::to_string(inputs) + " random inputs");
  return tally.finish();
}

SuiteResult monotonicity(std::uint64_t seed, std::size_t trials) {
  Tally tally("monotonicity");
  const double slack = 1e-12;
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t rows = 7 + rng.below(20);
    const std::size_t cols = 7 + rng.below(20);
    const std::size_t w = odd_between(rng, 3, 7);
    const std::size_t b = (w - 1) / 2;
    const std::size_t r_min = 1 + rng.below(b);
    const pool::PoolGrid g(rows, cols, w, 1 + rng.below(w));
    const Image x = random_image(rng, rows, cols);
    Image y = x;
    for (double& v : y.values()) v += rng.uniform() < 0.3 ? rng.uniform() : 0.0;
    const double alpha = rng.uniform();
    std::vector<std::function<Image(const Image&)>> ops{
        [&](const Image& z) { return pool::pool_avg(z, g).values; },
        [&](const Image& z) { return pool::pool_max(z, g).values; },
        [&](const Image& z) { return pool::pool_mixed(z, g, alpha).values; },
        [&](const Image& z) { return pool::pool_maxfun(z, g, {r_min, b, true}).values; },
        [&](const Image& z) { return pool::pool_maxfun(z, g, {r_min, b, false}).values; },
    };
    for (const auto& op : ops) {
      const Image px = op(x);
      const Image py = op(y);
      double worst = -INFINITY;
      for (std::size_t k = 0; k < px.size(); ++k) worst = std::max(worst, px.values()[k] - py.values()[k]);
      tally.trial(worst - slack);
    }
  }
  tally.note("avg, max, mixed, maxfun (centered and not) under pointwise increases");
  return tally.finish();
}

SuiteResult coherence(std::uint64_t seed, std::size_t dictionaries) {
  Tally tally("mutual coherence");
  Rng rng(seed);
  for (std::size_t n = 0; n < dictionaries; ++n) {
    const auto rows = static_cast<Eigen::Index>(4 + rng.below(17));
    const auto cols = static_cast<Eigen::Index>(2 + rng.below(39));
    Mat d(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) d(i, j) = rng.normal();
    }
    tally.trial(std::abs(csc::mutual_coherence(d) - naive::coherence(d)) - 1e-14);
  }
  for (Eigen::Index n : {1, 2, 7, 32}) tally.check(csc::mutual_coherence(Mat::Identity(n, n)) == 0.0);
  Mat local(3, 1);
  local << 1.0, 0.0, -0.2;
  const csc::ConvDictionary conv(local, 16);
  tally.trial(std::abs(conv.coherence() - naive::coherence(conv.matrix())) - 1e-14);
  tally.note(std::to_string(dictionaries) + " random dictionaries to 1e-14, identity exactly 0");
  return tally.finish();
}

SuiteResult epsilon_arithmetic() {
  Tally tally("epsilon recursion");
  {
    const double lambdas[] = {1.0};
    const double mus[] = {0.5};
    const auto e = csc::epsilon_recursion(0.1, lambdas, mus);
    tally.trial(e.size() == 1 ? std::abs(e[0] - 0.08) - 1e-15 : 1.0);
  }
  {
    const std::vector<double> lambdas(6, 3.0);
    const std::vector<double> mus(6, 0.0);
    const double eps0 = 0.37;
    const auto e = csc::epsilon_recursion(eps0, lambdas, mus);
    double prev = eps0;
    for (double sq : e) {
      tally.check(std::sqrt(sq) == 2.0 * prev);
      prev = std::sqrt(sq);
    }
  }
  {
    const double lambdas[] = {1.0, 2.0, 1.0};
    const double mus[] = {0.2, 0.1, 0.25};
    const auto e = csc::epsilon_recursion(0.05, lambdas, mus);
    const double e1 = 4.0 * 0.0025 / 0.8;
    const double e2 = 4.0 * e1 / 0.7;
    const double e3 = 4.0 * e2 / 0.75;
    tally.trial(std::max({std::abs(e[0] - e1), std::abs(e[1] - e2), std::abs(e[2] - e3)}) - 1e-15);
  }
  tally.note("0.1,[1],[0.5] -> 0.08; mu = 0 doubles eps exactly");
  return tally.finish();
}

SuiteResult stability(std::uint64_t seed, std::size_t trials, std::vector<std::size_t> lengths) {
  Tally tally("stability");
  std::size_t fallbacks = 0;
  for (std::size_t n : lengths) {
    const auto model = csc::default_stability_model(n);
    for (std::size_t t = 0; t < trials; ++t) {
      csc::StabilityOptions opts;
      opts.seed = derive_seed(seed, n * 100000 + t);
      const auto report = csc::verify_stability(model, opts);
      for (const auto& layer : report.layers) {
        fallbacks += layer.solver_fallback ? 1 : 0;
        tally.trial(std::max(layer.pool_dev_sq - layer.code_dev_sq, layer.code_dev_sq - layer.eps_sq) - opts.slack);
      }
    }
  }
  std::ostringstream os;
  os << trials << " trials per N in {";
  for (std::size_t k = 0; k < lengths.size(); ++k) os << (k ? "," : "") << lengths[k];
  os << "}, L=2, lambda=1, oracle solver, ||E|| = 0.1";
  tally.note(os.str());
  return tally.finish();
}

std::vector<SuiteResult> run_all(std::uint64_t seed) {
  return {
      sandwich(derive_seed(seed, 1)),
      non_expansiveness(derive_seed(seed, 2)),
      oracle_equivalence(derive_seed(seed, 3)),
      degenerate_identity(derive_seed(seed, 4)),
      mixed_stochastic_bounds(derive_seed(seed, 5)),
      monotonicity(derive_seed(seed, 6)),
      coherence(derive_seed(seed, 7)),
      epsilon_arithmetic(),
      stability(derive_seed(seed, 8)),
  };
}

std::string format(const SuiteResult& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "[%s] %s: trials=%zu failures=%zu worst=%.3g (%.2f s)", r.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.trials, r.failures, r.worst, r.seconds);
  std::string out = buf;
  if (!r.detail.empty()) out += " " + r.detail;
  return out;
}

}  // namespace maxfun::selfcheck
