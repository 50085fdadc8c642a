#include <algorithm>
#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "cmkt/equilibrium.hpp"
#include "cmkt/smoothness.hpp"

using namespace cmkt;

namespace {

std::vector<BidVector> random_bids(std::size_t n, std::int64_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<BidVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> xs(static_cast<std::size_t>(m));
    for (double& x : xs) x = u(rng);
    std::sort(xs.begin(), xs.end(), std::greater<>());
    out.push_back(BidVector::from_values(xs));
  }
  return out;
}

}  // namespace

static void BM_UniformPriceDenseBids(benchmark::State& state) {
  const auto m = state.range(0);
  const auto bids = random_bids(8, m, 1);
  for (auto _ : state) benchmark::DoNotOptimize(uniform_price(bids, m));
  state.SetComplexityN(m);
}
BENCHMARK(BM_UniformPriceDenseBids)->RangeMultiplier(8)->Range(8, 4096)->Complexity();

static void BM_OptAllocationRunLength(benchmark::State& state) {
  const auto m = state.range(0);
  const auto p = sample_profile(lower_bound_market(m), 7);
  for (auto _ : state) benchmark::DoNotOptimize(opt_allocation(p, m));
}
BENCHMARK(BM_OptAllocationRunLength)->RangeMultiplier(100)->Range(1000, 100000);

static void BM_PlayLowerBound(benchmark::State& state) {
  const auto m = state.range(0);
  const auto setup = lower_bound_setup(m);
  const auto strategies = scripted_lower_bound_equilibrium(m);
  const auto p = sample_profile(setup.market, 3);
  for (auto _ : state) benchmark::DoNotOptimize(play(setup, strategies, p));
}
BENCHMARK(BM_PlayLowerBound)->Arg(1000)->Arg(100000);

static void BM_ExpectedOutcomeQuadrature(benchmark::State& state) {
  const auto setup = lower_bound_setup(state.range(0));
  const auto strategies = scripted_lower_bound_equilibrium(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(expected_outcome(setup, strategies, QuadratureSpec{1e-10, {}}));
}
BENCHMARK(BM_ExpectedOutcomeQuadrature)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_ExpectOver2D(benchmark::State& state) {
  const auto u = UnitDistribution::uniform(0.0, 1.0);
  const auto er = UnitDistribution::equal_revenue_capped(1000.0);
  const std::vector<const UnitDistribution*> dims{&u, &er};
  const auto f = [](std::span<const double> x, std::span<double> out) { out[0] = x[0] < 0.5 ? x[1] : 0.0; };
  for (auto _ : state) benchmark::DoNotOptimize(expect_over(dims, f, 1, QuadratureOptions{1e-10, 4000}));
}
BENCHMARK(BM_ExpectOver2D)->Unit(benchmark::kMicrosecond);

static void BM_CheckSmoothFpa(benchmark::State& state) {
  MarketRules rules;
  rules.mechanism = FirstPrice{};
  const auto cert = fpa_certificate(1 - std::exp(-1.0), 1.0, static_cast<std::size_t>(state.range(0)));
  const auto domain = fpa_grid_domain();
  for (auto _ : state) benchmark::DoNotOptimize(check_smooth(rules, cert, domain, 1e-3));
}
BENCHMARK(BM_CheckSmoothFpa)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
