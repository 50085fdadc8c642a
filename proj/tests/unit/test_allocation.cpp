#include <random>

#include <gtest/gtest.h>

#include "cmkt/allocation.hpp"
#include "generators.hpp"

using namespace cmkt;

namespace {

std::vector<MarginalValuation> lb_profile(double a2, double z, std::int64_t m) {
  return {MarginalValuation::from_runs({{2.0, 1}, {a2, 1}, {0.0, m - 2}}),
          MarginalValuation::from_runs({{2.0, 1}, {z, m - 1}}), MarginalValuation::zeros(m)};
}

}  // namespace

TEST(Welfare, HandSums) {
  const std::int64_t m = 10;
  EXPECT_EQ(welfare(std::vector<MarginalValuation>{MarginalValuation::zeros(3)}, Allocation(std::vector<std::int64_t>{3})), 0.0);
  const auto p = lb_profile(1.25, 1.2, m);
  EXPECT_NEAR(welfare(p, Allocation(std::vector<std::int64_t>{2, 8, 0})), 3.25 + 2 + 7 * 1.2, 1e-12);
  const std::vector<MarginalValuation> one{MarginalValuation::from_values(std::vector<double>{5, 3, 1})};
  EXPECT_EQ(welfare(one, Allocation(std::vector<std::int64_t>{2})), 8.0);
}

TEST(OptAllocation, Examples) {
  const auto p = lb_profile(1.25, 0.5, 10);
  EXPECT_EQ(opt_allocation(p, 0).welfare, 0.0);
  EXPECT_EQ(opt_allocation(p, 0).alloc.total(), 0);
  EXPECT_NEAR(opt_allocation(p, 10).welfare, 8.75, 1e-12);
  EXPECT_NEAR(brute_force_opt(p, 10), 8.75, 1e-12);
  EXPECT_NEAR(per_unit_avg_welfare(p), 0.875, 1e-12);

  const std::vector<MarginalValuation> single{MarginalValuation::from_values(std::vector<double>{0.3}),
                                              MarginalValuation::from_values(std::vector<double>{4.0})};
  const auto r = opt_allocation(single, 1);
  EXPECT_EQ(r.welfare, 4.0);
  EXPECT_EQ(r.alloc[1], 1);
  EXPECT_EQ(per_unit_avg_welfare(single), 4.0);

  const std::vector<MarginalValuation> ones{MarginalValuation::from_values(std::vector<double>{1, 1, 1})};
  EXPECT_EQ(brute_force_opt(ones, 2), 2.0);
  EXPECT_EQ(brute_force_opt(ones, 0), 0.0);
  const std::vector<MarginalValuation> zero{MarginalValuation::zeros(4), MarginalValuation::zeros(4)};
  EXPECT_EQ(per_unit_avg_welfare(zero), 0.0);
}

TEST(OptAllocation, TiesGoToLowerIndex) {
  const std::vector<MarginalValuation> p{MarginalValuation::from_values(std::vector<double>{1, 1}),
                                         MarginalValuation::from_values(std::vector<double>{1, 1})};
  const auto r = opt_allocation(p, 2);
  EXPECT_EQ(r.alloc[0], 2);
  EXPECT_EQ(r.alloc[1], 0);
  EXPECT_EQ(opt_allocation(p, 1).alloc[0], 1);
}

TEST(OptAllocation, GreedyMatchesBruteForce) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> nd(1, 5);
  std::uniform_int_distribution<int> md(1, 12);
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(nd(rng));
    const std::int64_t m = md(rng);
    const auto p = testgen::random_profile(rng, n, m);
    std::uniform_int_distribution<std::int64_t> kd(0, m);
    const std::int64_t k = kd(rng);
    const auto g = opt_allocation(p, k);
    EXPECT_NEAR(g.welfare, brute_force_opt(p, k), 1e-9) << "instance " << t;
    EXPECT_LE(g.alloc.total(), k);
    EXPECT_NEAR(welfare(p, g.alloc), g.welfare, 1e-9);
  }
}

TEST(OptAllocation, LargeRunLengthMarket) {
  const std::int64_t m = 100000;
  const auto p = lb_profile(1.4, 0.3, m);
  const auto r = opt_allocation(p, m);
  EXPECT_NEAR(r.welfare, 4.0 + 1.4 + (m - 3) * 0.3, 1e-6);
  EXPECT_THROW(brute_force_opt(p, m), std::length_error);
}
