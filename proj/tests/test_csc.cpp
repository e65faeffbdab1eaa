#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "maxfun/csc.hpp"
#include "maxfun/error.hpp"
#include "maxfun/random.hpp"
#include "maxfun/selfcheck.hpp"

using namespace maxfun;
using namespace maxfun::csc;

namespace {

Mat column(std::initializer_list<double> xs) {
  Mat m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

Vec vec(std::initializer_list<double> xs) { return column(xs).col(0); }

Mat random_local(Rng& rng, std::size_t n0, std::size_t m1) {
  Mat m(static_cast<Eigen::Index>(n0), static_cast<Eigen::Index>(m1));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

// Reference global dictionary built by shifting each normalized filter.
Mat shifted_dictionary(const Mat& local, std::size_t n) {
  const auto n0 = static_cast<std::size_t>(local.rows());
  const auto m1 = static_cast<std::size_t>(local.cols());
  Mat d = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n * m1));
  for (std::size_t f = 0; f < m1; ++f) {
    const Vec filter = local.col(static_cast<Eigen::Index>(f)) / local.col(static_cast<Eigen::Index>(f)).norm();
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t t = 0; t < n0; ++t) {
        d(static_cast<Eigen::Index>((p + t) % n), static_cast<Eigen::Index>(p * m1 + f)) =
            filter(static_cast<Eigen::Index>(t));
      }
    }
  }
  return d;
}

// Reference stripe count: every window of 2 n0 - 1 blocks, counted directly.
std::size_t brute_l0_inf(const Vec& g, std::size_t n0, std::size_t m1) {
  const std::size_t n = static_cast<std::size_t>(g.size()) / m1;
  std::size_t best = 0;
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t count = 0;
    for (std::size_t b = 0; b < 2 * n0 - 1; ++b) {
      for (std::size_t f = 0; f < m1; ++f) count += g(static_cast<Eigen::Index>(((j + b) % n) * m1 + f)) != 0.0;
    }
    best = std::max(best, count);
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dictionaries

TEST(BuildDict, UnitImpulseGivesIdentity) {
  const ConvDictionary d = build_dict(column({1}), 3);
  EXPECT_EQ(d.matrix(), Mat::Identity(3, 3));
  EXPECT_EQ(d.coherence(), 0.0);
}

TEST(BuildDict, TwoTapShifts) {
  const double h = 1.0 / std::sqrt(2.0);
  const ConvDictionary d = build_dict(column({1, 1}), 3);
  Mat want(3, 3);
  want << h, 0, h,  //
      h, h, 0,      //
      0, h, h;
  EXPECT_TRUE(d.matrix().isApprox(want, 1e-15));
  EXPECT_EQ(d.atoms(), 3u);
}

TEST(BuildDict, MatchesExplicitShifting) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n0 = 1 + rng.below(4);
    const std::size_t m1 = 1 + rng.below(3);
    const std::size_t n = n0 + rng.below(10);
    const Mat local = random_local(rng, n0, m1);
    const ConvDictionary d = build_dict(local, n);
    EXPECT_EQ(d.matrix(), shifted_dictionary(local, n));
    for (Eigen::Index c = 0; c < d.matrix().cols(); ++c) EXPECT_NEAR(d.matrix().col(c).norm(), 1.0, 1e-15);
  }
}

TEST(BuildDict, RejectsBadFilters) {
  EXPECT_THROW(build_dict(Mat(0, 1), 4), InvalidArgument);
  EXPECT_THROW(build_dict(column({0, 0}), 4), InvalidArgument);
  EXPECT_THROW(build_dict(column({1, 1, 1}), 2), InvalidArgument);
}

TEST(MutualCoherence, Examples) {
  EXPECT_EQ(mutual_coherence(Mat::Identity(5, 5)), 0.0);
  Mat d(2, 2);
  d << 1, 1 / std::sqrt(2.0), 0, 1 / std::sqrt(2.0);
  EXPECT_NEAR(mutual_coherence(d), 1 / std::sqrt(2.0), 1e-15);
  Mat z = Mat::Identity(3, 3);
  z(1, 1) = 0.0;
  EXPECT_THROW(mutual_coherence(z), InvalidArgument);
}

TEST(MutualCoherence, MatchesPairwiseLoop) {
  Rng rng(10);
  for (int t = 0; t < 30; ++t) {
    Mat d(8, 12);
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = rng.normal();
    double want = 0.0;
    for (Eigen::Index i = 0; i < d.cols(); ++i) {
      for (Eigen::Index j = i + 1; j < d.cols(); ++j) {
        want = std::max(want, std::abs(d.col(i).dot(d.col(j))) / (d.col(i).norm() * d.col(j).norm()));
      }
    }
    EXPECT_NEAR(mutual_coherence(d), want, 1e-14);
    EXPECT_NEAR(mutual_coherence(d), selfcheck::naive::coherence(d), 1e-14);
  }
}

TEST(MutualCoherence, DefaultModelLayersAreNearlyOrthogonal) {
  const DcppModel m = default_stability_model(32);
  for (const LayerSpec& layer : m.layers()) EXPECT_LE(layer.dict.coherence(), 0.2);
  EXPECT_EQ(m.layers()[1].dict.signal_length(), 6u);
  EXPECT_EQ(default_stability_model(64).layers()[1].dict.signal_length(), 12u);
}

// ---------------------------------------------------------------------------
// Codes and stripes

TEST(SparseCode, ShapeChecks) {
  EXPECT_THROW(SparseCode(Vec::Zero(5), 1, 2), InvalidArgument);
  EXPECT_THROW(SparseCode(Vec::Zero(4), 3, 2), InvalidArgument);
  EXPECT_THROW(SparseCode(Vec::Zero(4), 0, 1), InvalidArgument);
  EXPECT_NO_THROW(SparseCode(Vec::Zero(6), 2, 2));
  const SparseCode c(vec({0, 2, 0, -1}), 1, 1);
  EXPECT_EQ(c.support(), (std::vector<std::size_t>{1, 3}));
}

TEST(Stripe, SingleBlockWhenPatchIsOne) {
  const SparseCode c(vec({1, 2, 3, 4, 5, 6}), 1, 2);
  EXPECT_EQ(stripe(c, 1), vec({3, 4}));
}

TEST(Stripe, ThreeBlocksAndWrap) {
  const SparseCode c(vec({0, 1, 2, 3, 4, 5, 6, 7}), 2, 2);
  EXPECT_EQ(stripe(c, 0), vec({0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(stripe(c, 3), vec({6, 7, 0, 1, 2, 3}));
  EXPECT_THROW(stripe(c, 4), InvalidArgument);
}

TEST(L0Inf, Examples) {
  EXPECT_EQ(l0_inf(SparseCode::zeros(4, 2, 1)), 0u);
  EXPECT_EQ(l0_inf(SparseCode(vec({0, 0, 3, 0}), 2, 1)), 1u);
  EXPECT_EQ(l0_inf(SparseCode(vec({1, 1, 0, 0}), 2, 1)), 2u);
}

TEST(L0Inf, MatchesBruteForceAndIsRotationInvariant) {
  Rng rng(22);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n0 = 1 + rng.below(3);
    const std::size_t m1 = 1 + rng.below(3);
    const std::size_t n = 2 * n0 - 1 + rng.below(8);
    Vec g = Vec::Zero(static_cast<Eigen::Index>(n * m1));
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (rng.uniform() < 0.3) g(i) = rng.uniform(-1.0, 1.0);
    }
    const std::size_t want = brute_l0_inf(g, n0, m1);
    EXPECT_EQ(l0_inf(SparseCode(g, n0, m1)), want);
    const std::size_t shift = rng.below(n);
    Vec rotated(g.size());
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t f = 0; f < m1; ++f) {
        rotated(static_cast<Eigen::Index>(((p + shift) % n) * m1 + f)) = g(static_cast<Eigen::Index>(p * m1 + f));
      }
    }
    EXPECT_EQ(l0_inf(SparseCode(rotated, n0, m1)), want);
  }
}

TEST(GenSparseCode, RespectsBudgetAndAmplitudes) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const std::size_t lambda = 1 + seed % 3;
    const SparseCode c = gen_sparse_code(seed, 16, 3, 2, lambda, {0.5, 1.5});
    ASSERT_LE(l0_inf(c), lambda);
    ASSERT_GT(c.support().size(), 0u);
    for (std::size_t i : c.support()) {
      const double v = c.gamma()(static_cast<Eigen::Index>(i));
      ASSERT_GE(v, 0.5);
      ASSERT_LE(v, 1.5);
    }
  }
}

TEST(GenSparseCode, SupportIsMaximal) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SparseCode c = gen_sparse_code(seed, 12, 2, 2, 2, {1.0, 2.0});
    for (Eigen::Index i = 0; i < c.gamma().size(); ++i) {
      if (c.gamma()(i) != 0.0) continue;
      SparseCode more = c;
      more.gamma()(i) = 1.0;
      EXPECT_GT(l0_inf(more), 2u) << "atom " << i << " could have been added";
    }
  }
}

TEST(GenSparseCode, DeterministicAndValidated) {
  EXPECT_EQ(gen_sparse_code(5, 10, 2, 1, 1, {}).gamma(), gen_sparse_code(5, 10, 2, 1, 1, {}).gamma());
  EXPECT_THROW(gen_sparse_code(5, 10, 2, 1, 0, {}), InvalidArgument);
  EXPECT_THROW(gen_sparse_code(5, 10, 2, 1, 1, {0.0, 1.0}), InvalidArgument);
  EXPECT_THROW(gen_sparse_code(5, 10, 2, 1, 1, {2.0, 1.0}), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Budgets

TEST(EpsilonRecursion, HandValue) {
  const std::vector<double> lambdas{1}, mus{0.5};
  const auto e = epsilon_recursion(0.1, lambdas, mus);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_NEAR(e[0], 0.08, 1e-15);
}

TEST(EpsilonRecursion, OrthogonalDoubling) {
  const std::vector<double> lambdas{1, 4, 9}, mus{0, 0, 0};
  const auto e = epsilon_recursion(0.3, lambdas, mus);
  EXPECT_EQ(e[0], 4.0 * 0.3 * 0.3);
  EXPECT_EQ(e[1], 4.0 * e[0]);
  EXPECT_EQ(e[2], 4.0 * e[1]);
}

TEST(EpsilonRecursion, BoundaryIsRejected) {
  // mu = 0.25 puts the bound at lambda = 2.5.
  const std::vector<double> lambdas{2.5}, mus{0.25};
  EXPECT_THROW(epsilon_recursion(0.1, lambdas, mus), InvalidArgument);
  const std::vector<double> two{1, 2}, one{0.1};
  EXPECT_THROW(epsilon_recursion(0.1, two, one), InvalidArgument);
  EXPECT_THROW(epsilon_recursion(-0.1, std::vector<double>{1}, std::vector<double>{0.1}), InvalidArgument);
}

TEST(EpsilonRecursion, MonotoneAndScalesWithEps0) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> lambdas, mus;
    for (int i = 0; i < 4; ++i) {
      mus.push_back(rng.uniform(0.0, 0.3));
      lambdas.push_back(1.0 + static_cast<double>(rng.below(2)));
    }
    const double eps0 = rng.uniform(0.01, 1.0);
    const auto base = epsilon_recursion(eps0, lambdas, mus);
    double prev = eps0 * eps0;
    for (double e : base) {
      EXPECT_GT(e, prev);
      prev = e;
    }
    for (double s : {0.5, 2.0}) {
      const auto scaled = epsilon_recursion(s * eps0, lambdas, mus);
      for (std::size_t i = 0; i < base.size(); ++i) EXPECT_EQ(scaled[i], s * s * base[i]);
    }
  }
}

TEST(SparsityCondition, Examples) {
  EXPECT_TRUE(sparsity_condition(2, 0.25));
  EXPECT_FALSE(sparsity_condition(3, 0.25));
  EXPECT_FALSE(sparsity_condition(2.5, 0.25));
  EXPECT_TRUE(sparsity_condition(1000, 0.0));
}

// ---------------------------------------------------------------------------
// Pursuit

TEST(PursuitGreedy, RecoversOneScaledAtom) {
  Rng rng(1);
  const ConvDictionary d = build_dict(random_local(rng, 3, 2), 12);
  const std::size_t atom = 7;
  const Vec y = 5.0 * d.matrix().col(atom);
  const SparseCode c = pursuit_greedy(d, y, 1, 1e-9);
  EXPECT_EQ(c.support(), (std::vector<std::size_t>{atom}));
  EXPECT_NEAR(c.gamma()(atom), 5.0, 1e-12);
}

TEST(PursuitGreedy, ZeroSignalGivesZeroCode) {
  const ConvDictionary d = build_dict(column({1, 0.5}), 6);
  const SparseCode c = pursuit_greedy(d, Vec::Zero(6), 1, 0.0);
  EXPECT_TRUE(c.support().empty());
}

TEST(PursuitGreedy, RecoversOneSparseSupports) {
  const ConvDictionary d = build_dict(column({1, 0, -0.2}), 20);
  ASSERT_LT(d.coherence(), 0.2);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SparseCode truth = gen_sparse_code(seed, 20, 3, 1, 1, {1.0, 2.0});
    const Vec y = d.matrix() * truth.gamma();
    const SparseCode got = pursuit_greedy(d, y, 1, 1e-9);
    EXPECT_EQ(got.support(), truth.support()) << "seed " << seed;
    EXPECT_LE((d.matrix() * got.gamma() - y).norm(), 1e-9);
    EXPECT_LE(l0_inf(got), 1u);
  }
}

TEST(PursuitGreedy, ReportsInfeasibility) {
  Rng rng(9);
  const ConvDictionary d = build_dict(column({1, 0.3}), 8);
  Vec y(8);
  for (Eigen::Index i = 0; i < 8; ++i) y(i) = rng.normal();
  EXPECT_THROW(pursuit_greedy(d, y, 1, 1e-6), Infeasible);
  EXPECT_THROW(pursuit_greedy(d, Vec::Zero(5), 1, 0.1), InvalidArgument);
  EXPECT_THROW(pursuit_greedy(d, y, 0, 0.1), InvalidArgument);
}

TEST(PursuitGreedy, NonNegativeModeKeepsCodesNonNegative) {
  Rng rng(12);
  const ConvDictionary d = build_dict(column({1, 0, 0.2}), 15);
  for (int t = 0; t < 50; ++t) {
    Vec y(15);
    for (Eigen::Index i = 0; i < 15; ++i) y(i) = rng.normal();
    try {
      const SparseCode c = pursuit_greedy(d, y, 1, 2.5, {.nonnegative = true});
      EXPECT_GE(c.gamma().minCoeff(), 0.0);
      EXPECT_LE((d.matrix() * c.gamma() - y).norm(), 2.5);
      EXPECT_LE(l0_inf(c), 1u);
    } catch (const Infeasible&) {
    }
  }
}

TEST(PursuitOracle, ExactOnNoiselessSignal) {
  Rng rng(2);
  const ConvDictionary d = build_dict(random_local(rng, 3, 2), 16);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const SparseCode truth = gen_sparse_code(seed, 16, 3, 2, 2, {1.0, 2.0});
    const auto support = truth.support();
    const SparseCode got = pursuit_oracle(d, d.matrix() * truth.gamma(), support);
    EXPECT_LE((got.gamma() - truth.gamma()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(l0_inf(got), l0_inf(truth));
  }
}

TEST(PursuitOracle, ResidualNoWorseThanTruth) {
  Rng rng(6);
  const ConvDictionary d = build_dict(random_local(rng, 3, 1), 20);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const SparseCode truth = gen_sparse_code(seed, 20, 3, 1, 1, {1.0, 2.0});
    Vec e(20);
    for (Eigen::Index i = 0; i < 20; ++i) e(i) = 0.1 * rng.normal();
    const Vec y = d.matrix() * truth.gamma() + e;
    const SparseCode got = pursuit_oracle(d, y, truth.support());
    EXPECT_LE((y - d.matrix() * got.gamma()).norm(), e.norm() + 1e-12);
  }
}

TEST(PursuitOracle, SingleAtomProjection) {
  Rng rng(7);
  const ConvDictionary d = build_dict(random_local(rng, 2, 2), 6);
  Vec y(6);
  for (Eigen::Index i = 0; i < 6; ++i) y(i) = rng.normal();
  const std::vector<std::size_t> support{3};
  const SparseCode got = pursuit_oracle(d, y, support);
  EXPECT_NEAR(got.gamma()(3), d.matrix().col(3).dot(y), 1e-12);
  EXPECT_EQ(got.support(), support);
}

TEST(PursuitOracle, RejectsBadSupports) {
  const ConvDictionary d = build_dict(column({1, 1}), 4);
  const Vec y = Vec::Ones(4);
  EXPECT_THROW(pursuit_oracle(d, y, std::vector<std::size_t>{}), InvalidArgument);
  EXPECT_THROW(pursuit_oracle(d, y, std::vector<std::size_t>{4}), InvalidArgument);
  EXPECT_THROW(pursuit_oracle(d, y, std::vector<std::size_t>{1, 1}), InvalidArgument);
  // Four two-tap shifts on a length-4 circle are linearly dependent.
  EXPECT_THROW(pursuit_oracle(d, y, std::vector<std::size_t>{0, 1, 2, 3}), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Layered model

TEST(DcppModel, RejectsBrokenChains) {
  LayerSpec a{build_dict(column({1}), 10), 5, 5, {1, 2, true}, 1, 0.0};
  LayerSpec b{build_dict(column({1}), 3), 1, 1, {1, 1, true}, 1, 0.0};
  EXPECT_THROW(DcppModel({a, b}), InvalidArgument);
  EXPECT_THROW(DcppModel({}), InvalidArgument);
  LayerSpec even{build_dict(column({1}), 10), 4, 4, {1, 1, true}, 1, 0.0};
  EXPECT_THROW(DcppModel({even}), InvalidArgument);
}

TEST(DcppForward, DegenerateRadiusGivesMean) {
  LayerSpec layer{build_dict(column({1}), 5), 5, 5, {2, 2, true}, 1, 0.0};
  const DcppModel model({layer});
  const Vec x = vec({0.5, 1.0, 3.0, 0.0, 2.5});
  const auto out = dcpp_forward(x, model, oracle_solver({{0, 1, 2, 3, 4}}));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR((out[0].code.gamma() - x).norm(), 0.0, 1e-14);
  EXPECT_NEAR(out[0].pooled(0), x.mean(), 1e-14);
}

TEST(DcppForward, ZeroInputGivesZeros) {
  const DcppModel model = default_stability_model(32);
  const auto out = dcpp_forward(Vec::Zero(32), model, greedy_solver());
  ASSERT_EQ(out.size(), 2u);
  for (const auto& o : out) {
    EXPECT_TRUE(o.code.support().empty());
    EXPECT_EQ(o.pooled.norm(), 0.0);
  }
  EXPECT_THROW(dcpp_forward(Vec::Zero(31), model, greedy_solver()), InvalidArgument);
}

TEST(DcppForward, InfeasibleIsTaggedWithLayer) {
  DcppModel model = default_stability_model(32);
  Rng rng(3);
  Vec x(32);
  for (Eigen::Index i = 0; i < 32; ++i) x(i) = rng.normal();
  try {
    dcpp_forward(x, model, greedy_solver());
    FAIL() << "expected Infeasible";
  } catch (const Infeasible& e) {
    EXPECT_EQ(e.layer(), 1u);
  }
}

TEST(GroundTruth, ChainIsConsistent) {
  for (std::size_t n : {32u, 64u}) {
    const DcppModel model = default_stability_model(n);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const GroundTruth gt = synthesize_ground_truth(model, seed, {1.0, 2.0});
      ASSERT_EQ(gt.codes.size(), 2u);
      EXPECT_NEAR((gt.signal - model.layers()[0].dict.matrix() * gt.codes[0].gamma()).norm(), 0.0, 1e-12);
      EXPECT_NEAR((gt.pooled[0] - model.layers()[1].dict.matrix() * gt.codes[1].gamma()).norm(), 0.0, 1e-12);
      for (std::size_t i = 0; i < 2; ++i) EXPECT_LE(l0_inf(gt.codes[i]), model.layers()[i].lambda);
    }
  }
}

TEST(Stability, PreconditionsAreChecked) {
  DcppModel model = default_stability_model(32);
  // mu ~ 0.192 puts the bound just above 3.1.
  model.layers()[0].lambda = 3;
  EXPECT_NO_THROW(check_stability_preconditions(model));
  model.layers()[0].lambda = 4;
  EXPECT_THROW(check_stability_preconditions(model), InvalidArgument);
  try {
    check_stability_preconditions(model);
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("lambda=4"), std::string::npos);
  }
  DcppModel signed_second = default_stability_model(32);
  Mat taps(3, 1);
  taps << 1.0, 0.0, -0.2;
  signed_second.layers()[1].dict = build_dict(taps, 6);
  EXPECT_THROW(check_stability_preconditions(signed_second), InvalidArgument);
}

TEST(Stability, ZeroNoiseReproducesGroundTruth) {
  const DcppModel model = default_stability_model(32);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const StabilityReport r = verify_stability(model, {.seed = seed, .eps0 = 0.0});
    EXPECT_TRUE(r.pass());
    EXPECT_EQ(r.noise_norm, 0.0);
    for (const LayerCheck& c : r.layers) {
      EXPECT_EQ(c.eps_sq, 0.0);
      EXPECT_LE(c.code_dev_sq, 1e-20);
      EXPECT_LE(c.pool_dev_sq, 1e-20);
    }
  }
}

TEST(Stability, SeededTrialsPassWithBothSolvers) {
  for (std::size_t n : {32u, 64u}) {
    const DcppModel model = default_stability_model(n);
    for (SolverKind kind : {SolverKind::oracle, SolverKind::greedy}) {
      for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const StabilityReport r = verify_stability(model, {.seed = seed, .eps0 = 0.1, .solver = kind});
        EXPECT_NEAR(r.noise_norm, 0.1, 1e-15);
        EXPECT_TRUE(r.pass()) << "n=" << n << " seed=" << seed;
      }
    }
  }
}

TEST(Stability, PoolingNeverAmplifiesCodeError) {
  // The pooled-deviation inequality holds for any pair of non-negative codes,
  // including ones that miss the residual budget.
  const DcppModel model = default_stability_model(64);
  const LayerSpec& layer = model.layers()[0];
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    SparseCode a = SparseCode::zeros(64, 3, 1);
    SparseCode b = a;
    for (Eigen::Index i = 0; i < 64; ++i) {
      a.gamma()(i) = rng.uniform() < 0.3 ? rng.uniform(0.0, 2.0) : 0.0;
      b.gamma()(i) = rng.uniform() < 0.3 ? rng.uniform(0.0, 2.0) : 0.0;
    }
    const double pooled = (pool_code(a, layer) - pool_code(b, layer)).squaredNorm();
    EXPECT_LE(pooled, (a.gamma() - b.gamma()).squaredNorm() + 1e-12);
  }
}

TEST(Stability, ReportCsv) {
  const StabilityReport r = verify_stability(default_stability_model(32), {.seed = 4});
  std::ostringstream os;
  write_report_header(os);
  write_report_rows(os, r);
  const std::string text = os.str();
  EXPECT_EQ(text.rfind("seed,layer,mu,lambda,eps_sq,code_dev_sq,pool_dev_sq,pass\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_NE(text.find("\n4,1,"), std::string::npos);
  EXPECT_NE(text.find("\n4,2,"), std::string::npos);
}

TEST(Stability, FirstLayerReadingUsesFirstCoherence) {
  const DcppModel model = default_stability_model(32);
  const auto per = layer_eps_squared(model, 0.1, CoherenceReading::per_layer);
  const auto first = layer_eps_squared(model, 0.1, CoherenceReading::first_layer);
  EXPECT_EQ(per[0], first[0]);
  const double mu1 = model.layers()[0].dict.coherence();
  EXPECT_NEAR(first[1], 4.0 * first[0] / (1.0 - mu1), 1e-15);
}
