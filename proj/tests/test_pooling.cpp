#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "maxfun/error.hpp"
#include "maxfun/pooling.hpp"
#include "maxfun/random.hpp"
#include "maxfun/selfcheck.hpp"

using namespace maxfun;
using namespace maxfun::pool;
namespace naive = maxfun::selfcheck::naive;

namespace {

Image random_image(Rng& rng, std::size_t rows, std::size_t cols, double hi = 1.0) {
  Image img(rows, cols);
  for (double& v : img.values()) v = rng.uniform(0.0, hi);
  return img;
}

Image constant(std::size_t rows, std::size_t cols, double c) { return Image(rows, cols, c); }

bool all_equal(const Image& img, double c) {
  for (double v : img.values()) {
    if (v != c) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid geometry

TEST(PoolGrid, PartitionSixBySix) {
  const PoolGrid g = make_grid(6, 6, 3, 3);
  EXPECT_EQ(g.out_rows(), 2u);
  EXPECT_EQ(g.out_cols(), 2u);
  EXPECT_TRUE(g.disjoint());
  EXPECT_EQ(g.origin(1, 1), (Cell{3, 3}));
  const auto cells = g.window_indices(1, 0);
  ASSERT_EQ(cells.size(), 9u);
  EXPECT_EQ(cells.front(), (Cell{3, 0}));
  EXPECT_EQ(cells.back(), (Cell{5, 2}));
}

TEST(PoolGrid, WholeInputSingleWindow) {
  const PoolGrid g = make_grid(5, 5, 5, 5);
  EXPECT_EQ(g.cell_count(), 1u);
}

TEST(PoolGrid, OverlapRegimeCount) {
  const PoolGrid g = make_grid(128, 128, 21, 11);
  EXPECT_EQ(g.out_rows(), 10u);
  EXPECT_EQ(g.out_cols(), 10u);
  EXPECT_FALSE(g.disjoint());
  const PoolGrid part = make_grid(128, 128, 21, 21);
  EXPECT_EQ(part.out_rows(), 6u);
}

TEST(PoolGrid, WindowsStayInsideInput) {
  for (std::size_t n = 5; n < 30; ++n) {
    for (std::size_t w = 1; w <= n; w += 2) {
      for (std::size_t s = 1; s <= w + 2; ++s) {
        const PoolGrid g = make_grid(n, n + 3, w, s);
        EXPECT_LE(g.origin(g.out_rows() - 1, 0).row + w, n);
        EXPECT_GT(g.origin(g.out_rows() - 1, 0).row + s + w, n);
        EXPECT_LE(g.origin(0, g.out_cols() - 1).col + w, n + 3);
      }
    }
  }
}

TEST(PoolGrid, RejectsBadGeometry) {
  EXPECT_THROW(make_grid(4, 4, 5, 1), InvalidArgument);
  EXPECT_THROW(make_grid(4, 4, 2, 0), InvalidArgument);
  EXPECT_THROW(make_grid(4, 4, 0, 1), InvalidArgument);
  EXPECT_THROW(make_grid(4, 4, 2, 2).window_indices(2, 0), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Config and sub-squares

TEST(MaxfunConfig, Validation) {
  EXPECT_NO_THROW((MaxfunConfig{1, 2, true}.validate(5)));
  EXPECT_NO_THROW((MaxfunConfig{1, 2, false}.validate(6)));
  EXPECT_THROW((MaxfunConfig{0, 2, true}.validate(5)), InvalidArgument);
  EXPECT_THROW((MaxfunConfig{3, 2, true}.validate(5)), InvalidArgument);
  EXPECT_THROW((MaxfunConfig{1, 3, true}.validate(5)), InvalidArgument);
  EXPECT_THROW((MaxfunConfig{1, 2, true}.validate(6)), InvalidArgument);
}

TEST(Subsquare, Examples) {
  EXPECT_EQ(subsquare({2, 2}, 0, 5, 5), (std::vector<Cell>{{2, 2}}));
  const auto nine = subsquare({2, 2}, 1, 5, 5);
  ASSERT_EQ(nine.size(), 9u);
  EXPECT_EQ(nine.front(), (Cell{1, 1}));
  EXPECT_EQ(nine[4], (Cell{2, 2}));
  EXPECT_EQ(nine.back(), (Cell{3, 3}));
  const auto twentyfive = subsquare({3, 3}, 2, 6, 6);
  ASSERT_EQ(twentyfive.size(), 25u);
  for (const Cell& c : twentyfive) {
    EXPECT_GE(c.row, 1u);
    EXPECT_LE(c.row, 5u);
    EXPECT_GE(c.col, 1u);
    EXPECT_LE(c.col, 5u);
  }
  EXPECT_THROW(subsquare({1, 1}, 2, 6, 6), InvalidArgument);
  EXPECT_THROW(subsquare({4, 4}, 2, 6, 6), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Operators on hand-computed examples

TEST(PoolAvg, Examples) {
  const Image inexact = pool_avg(constant(6, 6, 0.7), make_grid(6, 6, 3, 3)).values;
  for (double v : inexact.values()) EXPECT_NEAR(v, 0.7, 1e-15);
  EXPECT_TRUE(all_equal(pool_avg(constant(6, 6, 0.5), make_grid(6, 6, 3, 3)).values, 0.5));
  EXPECT_EQ(pool_avg(Image::from_rows({{1, 2}, {3, 4}}), make_grid(2, 2, 2, 2)).values(0, 0), 2.5);
  EXPECT_TRUE(pool_avg(Image(3, 3), make_grid(3, 3, 3, 3)).provenance.empty());
}

TEST(PoolAvg, FourByFourAgainstLoop) {
  Rng rng(4);
  const Image x = random_image(rng, 4, 4);
  const Image got = pool_avg(x, make_grid(4, 4, 2, 2)).values;
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t l = 0; l < 2; ++l) {
      double s = 0.0;
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) s += x(2 * k + i, 2 * l + j);
      }
      EXPECT_EQ(got(k, l), s / 4.0);
    }
  }
}

TEST(PoolMax, Examples) {
  EXPECT_TRUE(all_equal(pool_max(constant(4, 4, 3.0), make_grid(4, 4, 2, 2)).values, 3.0));
  EXPECT_EQ(pool_max(Image::from_rows({{1, 2}, {3, 4}}), make_grid(2, 2, 2, 2)).values(0, 0), 4.0);
  Rng rng(8);
  const Image x = random_image(rng, 9, 9);
  EXPECT_EQ(pool_max(x, make_grid(9, 9, 3, 3)).values, naive::max(x, 3, 3).values);
}

TEST(PoolMaxfun, ConstantImage) {
  const Image x = constant(11, 11, 0.25);
  for (bool centered : {true, false}) {
    const auto out = pool_maxfun(x, make_grid(11, 11, 5, 3), {1, 2, centered});
    EXPECT_TRUE(all_equal(out.values, 0.25));
  }
}

TEST(PoolMaxfun, CentralBlockWinsAtRadiusOne) {
  Image x(5, 5);
  for (std::size_t i = 1; i <= 3; ++i) {
    for (std::size_t j = 1; j <= 3; ++j) x(i, j) = 9.0;
  }
  const auto out = pool_maxfun(x, make_grid(5, 5, 5, 5), {1, 2, true});
  EXPECT_EQ(out.values(0, 0), 9.0);
  EXPECT_EQ(out.provenance[0], (Winner{1, {2, 2}}));
  // The r = 2 candidate is 81 / 25.
  const auto wide = pool_maxfun(x, make_grid(5, 5, 5, 5), {2, 2, true});
  EXPECT_DOUBLE_EQ(wide.values(0, 0), 3.24);
}

TEST(PoolMaxfun, CenterSpikeIsStrictlyBelowMax) {
  Image x(5, 5);
  x(2, 2) = 25.0;
  const auto out = pool_maxfun(x, make_grid(5, 5, 5, 5), {1, 2, true});
  EXPECT_DOUBLE_EQ(out.values(0, 0), 25.0 / 9.0);
  EXPECT_EQ(pool_max(x, make_grid(5, 5, 5, 5)).values(0, 0), 25.0);
}

TEST(PoolMaxfun, TiesPreferSmallRadiusThenSmallestCenter) {
  const Image x = constant(7, 7, 1.0);
  const auto centered = pool_maxfun(x, make_grid(7, 7, 7, 7), {1, 3, true});
  EXPECT_EQ(centered.provenance[0], (Winner{1, {3, 3}}));
  const auto free = pool_maxfun(x, make_grid(7, 7, 7, 7), {2, 3, false});
  EXPECT_EQ(free.provenance[0], (Winner{2, {2, 2}}));
}

TEST(PoolMaxfun, NonCenteredFindsOffCenterBlock) {
  Image x(7, 7);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 4; j < 7; ++j) x(i, j) = 2.0;
  }
  const auto out = pool_maxfun(x, make_grid(7, 7, 7, 7), {1, 3, false});
  EXPECT_EQ(out.values(0, 0), 2.0);
  EXPECT_EQ(out.provenance[0], (Winner{1, {1, 5}}));
  const auto centered = pool_maxfun(x, make_grid(7, 7, 7, 7), {1, 3, true});
  EXPECT_LT(centered.values(0, 0), 2.0);
}

TEST(PoolMaxfun, ProvenanceMatchesReportedValue) {
  Rng rng(12);
  for (int t = 0; t < 30; ++t) {
    const Image x = random_image(rng, 17, 17);
    for (bool centered : {true, false}) {
      const auto out = pool_maxfun(x, make_grid(17, 17, 7, 5), {1, 3, centered});
      for (std::size_t cell = 0; cell < out.provenance.size(); ++cell) {
        const Winner& w = out.provenance[cell];
        double s = 0.0;
        for (const Cell& c : subsquare(w.center, w.radius, 17, 17)) s += x(c.row, c.col);
        const double side = static_cast<double>(2 * w.radius + 1);
        EXPECT_NEAR(out.values.values()[cell], s / (side * side), 1e-14);
      }
    }
  }
}

TEST(PoolMixed, EndpointsAndMidpoint) {
  Rng rng(2);
  const Image x = random_image(rng, 12, 12);
  const PoolGrid g = make_grid(12, 12, 4, 3);
  EXPECT_EQ(pool_mixed(x, g, 1.0).values, pool_max(x, g).values);
  EXPECT_EQ(pool_mixed(x, g, 0.0).values, pool_avg(x, g).values);
  EXPECT_EQ(pool_mixed(Image::from_rows({{1, 2}, {3, 4}}), make_grid(2, 2, 2, 2), 0.5).values(0, 0), 3.25);
  EXPECT_THROW(pool_mixed(x, g, 1.5), InvalidArgument);
  EXPECT_THROW(pool_mixed(x, g, -0.1), InvalidArgument);
}

TEST(PoolStochastic, Examples) {
  EXPECT_DOUBLE_EQ(pool_stochastic(constant(3, 3, 0.4), make_grid(3, 3, 3, 3)).values(0, 0), 0.4);
  // Windows are square, so the values {1, 2, 3} sit in a 3 x 3 window padded with zeros.
  const Image x = Image::from_rows({{1, 2, 3}, {0, 0, 0}, {0, 0, 0}});
  EXPECT_DOUBLE_EQ(pool_stochastic(x, make_grid(3, 3, 3, 3)).values(0, 0), 7.0 / 3.0);
  EXPECT_EQ(pool_stochastic(Image(4, 4), make_grid(4, 4, 2, 2)).values, Image(2, 2));
}

TEST(PoolStochastic, IsNotMonotone) {
  const Image lo = Image::from_rows({{1.0, 0.1}, {0, 0}});
  const Image hi = Image::from_rows({{1.0, 0.3}, {0, 0}});
  const PoolGrid g = make_grid(2, 2, 2, 2);
  EXPECT_NEAR(pool_stochastic(lo, g).values(0, 0), 1.01 / 1.1, 1e-15);
  EXPECT_NEAR(pool_stochastic(hi, g).values(0, 0), 1.09 / 1.3, 1e-15);
  EXPECT_GT(pool_stochastic(lo, g).values(0, 0), pool_stochastic(hi, g).values(0, 0));
}

TEST(Pooling, RejectsNegativeAndNonFiniteInput) {
  Image x(4, 4, 1.0);
  x(1, 2) = -0.5;
  const PoolGrid g = make_grid(4, 4, 3, 1);
  for (Method m : {Method::avg, Method::max, Method::maxfun, Method::maxfun_noncentered, Method::mixed,
                   Method::stochastic}) {
    EXPECT_THROW(apply(x, g, m, {}), InvalidArgument) << to_string(m);
  }
  x(1, 2) = std::nan("");
  EXPECT_THROW(pool_avg(x, g), InvalidArgument);
  EXPECT_THROW(pool_avg(Image(5, 5), g), InvalidArgument);
}

TEST(Method, NamesRoundTrip) {
  for (Method m : {Method::avg, Method::max, Method::maxfun, Method::maxfun_noncentered, Method::mixed,
                   Method::stochastic}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("median"), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Profiles

TEST(RadiusProfile, ReduceMatchesDirectPooling) {
  Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    const Image x = random_image(rng, 30, 30);
    const PoolGrid g = make_grid(30, 30, 9, 4);
    for (bool centered : {true, false}) {
      const RadiusProfile p = maxfun_profile(x, g, 1, 4, centered);
      for (std::size_t r = 1; r <= 4; ++r) {
        const auto direct = pool_maxfun(x, g, {r, 4, centered});
        const auto reduced = reduce_profile(p, r);
        EXPECT_EQ(reduced.values, direct.values);
        EXPECT_EQ(reduced.provenance, direct.provenance);
      }
      EXPECT_THROW(reduce_profile(p, 5), InvalidArgument);
    }
  }
}

// ---------------------------------------------------------------------------
// Properties

TEST(Properties, AgreesWithNaiveLoops) {
  Rng rng(77);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 7 + rng.below(20);
    const Image x = random_image(rng, n, n + rng.below(4));
    const std::size_t w = 7;
    for (std::size_t s : {std::size_t{7}, std::size_t{3}}) {
      const PoolGrid g = make_grid(x.rows(), x.cols(), w, s);
      EXPECT_EQ(pool_avg(x, g).values, naive::avg(x, w, s).values);
      EXPECT_EQ(pool_max(x, g).values, naive::max(x, w, s).values);
      EXPECT_EQ(pool_mixed(x, g, 0.3).values, naive::mixed(x, w, s, 0.3).values);
      EXPECT_EQ(pool_stochastic(x, g).values, naive::stochastic(x, w, s).values);
      for (bool centered : {true, false}) {
        const auto got = pool_maxfun(x, g, {2, 3, centered});
        const auto want = naive::maxfun(x, w, s, 2, 3, centered);
        EXPECT_EQ(got.values, want.values);
        EXPECT_EQ(got.provenance, want.winners);
      }
    }
  }
}

TEST(Properties, MaxfunNeverExceedsMax) {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const Image x = random_image(rng, 20, 20, 10.0);
    const PoolGrid g = make_grid(20, 20, 6, 2);
    const Image mx = pool_max(x, g).values;
    const Image mf = pool_maxfun(x, g, {1, 2, false}).values;
    for (std::size_t i = 0; i < mx.size(); ++i) EXPECT_LE(mf.values()[i], mx.values()[i]);
  }
}

TEST(Properties, MixedAndStochasticLieBetweenAvgAndMax) {
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    const Image x = random_image(rng, 15, 15);
    const PoolGrid g = make_grid(15, 15, 5, 5);
    const Image a = pool_avg(x, g).values;
    const Image m = pool_max(x, g).values;
    const Image mix = pool_mixed(x, g, rng.uniform()).values;
    const Image st = pool_stochastic(x, g).values;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_LE(a.values()[i], mix.values()[i] + 1e-12);
      EXPECT_LE(mix.values()[i], m.values()[i] + 1e-12);
      EXPECT_LE(a.values()[i], st.values()[i] + 1e-12);
      EXPECT_LE(st.values()[i], m.values()[i] + 1e-12);
    }
  }
}

TEST(Properties, MonotoneOperators) {
  Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const Image x = random_image(rng, 14, 14);
    Image y = x;
    for (double& v : y.values()) v += rng.uniform(0.0, 0.5);
    const PoolGrid g = make_grid(14, 14, 5, 3);
    for (Method m : {Method::avg, Method::max, Method::maxfun, Method::maxfun_noncentered, Method::mixed}) {
      const Image px = apply(x, g, m, {0.4, 1, 2}).values;
      const Image py = apply(y, g, m, {0.4, 1, 2}).values;
      for (std::size_t i = 0; i < px.size(); ++i) EXPECT_LE(px.values()[i], py.values()[i]) << to_string(m);
    }
  }
}

TEST(Properties, DegenerateRadiusEqualsAverage) {
  Rng rng(15);
  for (int t = 0; t < 30; ++t) {
    const Image x = random_image(rng, 21, 21);
    const PoolGrid g = make_grid(21, 21, 7, 7);
    EXPECT_EQ(pool_maxfun(x, g, {3, 3, true}).values, pool_avg(x, g).values);
  }
}

TEST(Properties, SandwichOnPartition) {
  Rng rng(16);
  for (int t = 0; t < 30; ++t) {
    const Image x = random_image(rng, 35, 35);
    const PoolGrid g = make_grid(35, 35, 7, 7);
    const Image a = pool_avg(x, g).values;
    const Image m = pool_max(x, g).values;
    const Image f = pool_maxfun(x, g, {1, 3, true}).values;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_LE(a.values()[i], f.values()[i] + 1e-12);
      EXPECT_LE(f.values()[i], m.values()[i] + 1e-12);
    }
  }
}

TEST(Properties, NonExpansiveOnDisjointWindows) {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    const Image x = random_image(rng, 15, 15);
    Image y = x;
    for (double& v : y.values()) v = std::max(0.0, v + rng.uniform(-0.3, 0.3));
    const PoolGrid g = make_grid(15, 15, 5, 5);
    const MaxfunConfig cfg{1, 2, true};
    const double lhs = frob_distance(pool_maxfun(x, g, cfg).values, pool_maxfun(y, g, cfg).values);
    EXPECT_LE(lhs, frob_distance(x, y) + 1e-12);
  }
}

// ---------------------------------------------------------------------------
// 1-D

TEST(Maxfun1d, Examples) {
  const Grid1d g = make_grid_1d(5, 5, 5);
  EXPECT_EQ(g.count, 1u);
  const std::vector<double> x{0, 0, 5, 0, 0};
  const auto out = pool_maxfun_1d(x, 1, g, {1, 2, true});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0], 5.0 / 3.0);
  const std::vector<double> flat(10, 0.6);
  const auto c = pool_maxfun_1d(flat, 2, g, {1, 2, true});
  EXPECT_EQ(c, (std::vector<double>{0.6, 0.6}));
}

TEST(Maxfun1d, ChannelsAreIndependentAndMatchNaive) {
  Rng rng(19);
  for (int t = 0; t < 30; ++t) {
    const std::size_t channels = 1 + rng.below(4);
    std::vector<double> x(25 * channels);
    for (double& v : x) v = rng.uniform();
    for (bool centered : {true, false}) {
      const Grid1d g = make_grid_1d(25, 5, 5);
      EXPECT_EQ(pool_maxfun_1d(x, channels, g, {1, 2, centered}), naive::maxfun_1d(x, channels, 5, 5, 1, 2, centered));
    }
  }
}

TEST(Maxfun1d, RejectsBadShapes) {
  EXPECT_THROW(make_grid_1d(4, 5, 5), InvalidArgument);
  EXPECT_THROW(make_grid_1d(5, 5, 0), InvalidArgument);
  const std::vector<double> x(7, 1.0);
  EXPECT_THROW(pool_maxfun_1d(x, 1, make_grid_1d(5, 5, 5), {1, 2, true}), InvalidArgument);
  EXPECT_THROW(pool_maxfun_1d(x, 0, make_grid_1d(5, 5, 5), {1, 2, true}), InvalidArgument);
}
