#include <benchmark/benchmark.h>

#include "maxfun/classify.hpp"
#include "maxfun/csc.hpp"
#include "maxfun/pooling.hpp"
#include "maxfun/random.hpp"

namespace {

using namespace maxfun;

Image random_image(std::size_t side, std::uint64_t seed) {
  Rng rng(seed);
  Image img(side, side);
  for (double& v : img.values()) v = rng.uniform();
  return img;
}

// Arguments: window, stride on a 128x128 map.
void BM_Pool(benchmark::State& state, pool::Method method) {
  const Image x = random_image(128, 1);
  const auto w = static_cast<std::size_t>(state.range(0));
  const auto s = static_cast<std::size_t>(state.range(1));
  const pool::PoolGrid g = pool::make_grid(128, 128, w, s);
  const pool::PoolParams params{0.5, 2, (w - 1) / 2};
  for (auto _ : state) benchmark::DoNotOptimize(pool::apply(x, g, method, params));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * g.cell_count()));
}

BENCHMARK_CAPTURE(BM_Pool, avg, pool::Method::avg)->Args({21, 21})->Args({21, 11});
BENCHMARK_CAPTURE(BM_Pool, max, pool::Method::max)->Args({21, 21})->Args({21, 11});
BENCHMARK_CAPTURE(BM_Pool, stochastic, pool::Method::stochastic)->Args({21, 21})->Args({21, 11});
BENCHMARK_CAPTURE(BM_Pool, maxfun, pool::Method::maxfun)->Args({21, 21})->Args({21, 11});
BENCHMARK_CAPTURE(BM_Pool, maxfun_noncentered, pool::Method::maxfun_noncentered)->Args({21, 21})->Args({21, 11});

void BM_MaxfunProfile(benchmark::State& state) {
  const Image x = random_image(126, 2);
  const pool::PoolGrid g = pool::make_grid(126, 126, 21, 21);
  const bool centered = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(pool::maxfun_profile(x, g, 2, 10, centered));
}
BENCHMARK(BM_MaxfunProfile)->Arg(1)->Arg(0);

void BM_ExtractFeatures(benchmark::State& state) {
  const Image x = random_image(128, 3);
  const auto bank = classify::default_filter_bank(4);
  for (auto _ : state) benchmark::DoNotOptimize(classify::extract_features(x, bank));
}
BENCHMARK(BM_ExtractFeatures);

void BM_StabilityTrial(benchmark::State& state) {
  const auto model = csc::default_stability_model(static_cast<std::size_t>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(csc::verify_stability(model, {.seed = seed++}));
}
BENCHMARK(BM_StabilityTrial)->Arg(32)->Arg(64);

}  // namespace
BENCHMARK_MAIN();
