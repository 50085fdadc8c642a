#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cmkt/balanced_pricing.hpp"
#include "cmkt/equilibrium.hpp"
#include "generators.hpp"

using namespace cmkt;

namespace {

// Disjoint x, x' with |x| + |x'| <= m.
std::pair<Allocation, Allocation> disjoint_pair(std::mt19937_64& rng, std::size_t n, std::int64_t m) {
  const Allocation x = testgen::random_allocation(rng, n, m);
  const Allocation xp = testgen::random_allocation(rng, n, m - x.total());
  return {x, xp};
}

}  // namespace

TEST(RealizationPrice, BalancedWithAlphaBetaOneExactly) {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> nd(1, 4), md(1, 10);
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<std::size_t>(nd(rng));
    const std::int64_t m = md(rng);
    const auto p = testgen::random_profile(rng, n, m, true);
    const auto price = realization_price(p);
    ASSERT_TRUE(price.exact.has_value());
    const auto [x, xp] = disjoint_pair(rng, n, m);
    const auto c = check_balanced_conditions(price, p, x, xp, 1.0, 1.0);
    EXPECT_TRUE(c.exact);
    EXPECT_TRUE(c.condition1) << "instance " << t;
    EXPECT_TRUE(c.condition2) << "instance " << t;
  }
}

TEST(RealizationPrice, DoublePriceBreaksConditionTwo) {
  const std::vector<MarginalValuation> p{MarginalValuation::from_values(std::vector<double>{3, 1}),
                                         MarginalValuation::from_values(std::vector<double>{2, 0})};
  auto price = realization_price(p);
  EXPECT_EQ(price.exact->num, 5);
  EXPECT_EQ(price.exact->den, 2);
  price.unit_price *= 2;
  price.exact->num *= 2;
  price.source = PriceSource::kPerturbed;
  const Allocation none(std::vector<std::int64_t>{0, 0});
  const Allocation all(std::vector<std::int64_t>{1, 1});
  const auto c = check_balanced_conditions(price, p, none, all, 1.0, 1.0);
  EXPECT_TRUE(c.condition1);
  EXPECT_FALSE(c.condition2);
  EXPECT_EQ(c.lhs2, 10.0);
  EXPECT_EQ(c.rhs2, 5.0);
  EXPECT_THROW(check_balanced_conditions(price, p, all, all, 1.0, 1.0), std::invalid_argument);
}

TEST(RealizationPrice, FractionalValuesUseTolerance) {
  const std::vector<MarginalValuation> p{MarginalValuation::from_values(std::vector<double>{0.7, 0.3})};
  const auto price = realization_price(p);
  EXPECT_FALSE(price.exact.has_value());
  const auto c = check_balanced_conditions(price, p, Allocation(std::vector<std::int64_t>{1}),
                                           Allocation(std::vector<std::int64_t>{1}), 1.0, 1.0);
  EXPECT_FALSE(c.exact);
  EXPECT_TRUE(c.condition1 && c.condition2);
}

TEST(StaticPrice, HalfOfExpectedOptPerUnit) {
  const auto market = deterministic_market(2, {{{0.5, 2}}, {{0.25, 2}}});
  const auto p = static_price(market, 1.0, 1.0, QuadratureSpec{});
  EXPECT_DOUBLE_EQ(p.unit_price, 0.25);
  EXPECT_EQ(p.source, PriceSource::kStatic);
  EXPECT_THROW(static_price(market, 0.5, 1.0, QuadratureSpec{}), std::invalid_argument);
}

TEST(BalancedReserve, LowerBoundMarketAtM100) {
  const auto r = uniform_with_balanced_reserve(lower_bound_market(100), QuadratureSpec{1e-10, {}});
  // Oracle: closed-form optimum plus its 1/(24 m^3) remainder, over 2m.
  const auto cf = lower_bound_closed_form(100);
  EXPECT_NEAR(r.reserve, (cf.opt_welfare + 1.0 / (24.0 * 1e6)) / 200.0, 2e-9);
  EXPECT_NEAR(r.reserve, 0.0391690, 1e-7);
  EXPECT_LE(r.error, 1e-10);
  EXPECT_EQ(std::get<UniformPrice>(r.mechanism).reserve, r.reserve);
}

TEST(BalancedReserve, DeterministicMarketIsHalfTheValue) {
  for (double v : {0.5, 2.0, 8.0}) {
    const auto r = uniform_with_balanced_reserve(deterministic_market(4, {{{v, 4}}, {{0.0, 4}}}), QuadratureSpec{});
    EXPECT_DOUBLE_EQ(r.reserve, v / 2);
  }
}

TEST(NoisyReserve, ScalesEstimate) {
  const auto r = noisy_reserve(10, 1.0, 0.1, 0.05);
  EXPECT_DOUBLE_EQ(r.reserve, 0.05);
  EXPECT_DOUBLE_EQ(r.fraction, 0.45);
  EXPECT_DOUBLE_EQ(r.delta, 0.05);
  EXPECT_THROW(noisy_reserve(0, 1.0, 0.1, 0.05), std::invalid_argument);
  EXPECT_THROW(noisy_reserve(10, -1.0, 0.1, 0.05), std::invalid_argument);
  EXPECT_THROW(noisy_reserve(10, 1.0, 1.0, 0.05), std::invalid_argument);
}

TEST(WelfareAudit, FlagsCandidatesBelowBound) {
  const std::vector<AuditCandidate> cands{{"good", 6.0, 0.0}, {"edge", 4.0, 0.0}, {"bad", 3.9, 0.0}};
  const auto rep = welfare_guarantee_audit(10.0, 10, cands, 1.0, 1.0, 0.01, 0.0);
  EXPECT_DOUBLE_EQ(rep.bound, 4.9);
  EXPECT_EQ(rep.violations, (std::vector<std::size_t>{1, 2}));
  EXPECT_FALSE(rep.pass);
  const auto loose = welfare_guarantee_audit(10.0, 10, cands, 1.0, 1.0, 0.2, 0.0);
  EXPECT_TRUE(loose.pass);
  EXPECT_THROW(welfare_guarantee_audit(10.0, 10, cands, 1.0, 1.0, -0.1, 0.0), std::invalid_argument);
}
