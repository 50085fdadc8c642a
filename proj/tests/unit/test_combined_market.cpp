#include <cmath>

#include <gtest/gtest.h>

#include "cmkt/combined_market.hpp"
#include "cmkt/equilibrium.hpp"
#include "properties.hpp"

using namespace cmkt;

namespace {

std::vector<MarginalValuation> lb_profile(double a2, double z, std::int64_t m) {
  return {MarginalValuation::from_runs({{2.0, 1}, {a2, 1}, {0.0, m - 2}}),
          MarginalValuation::from_runs({{2.0, 1}, {z, m - 1}}), MarginalValuation::zeros(m)};
}

std::vector<CombinedAction> scripted_actions(std::int64_t m, double ask) {
  return {{BidVector::block(2.0, 1, m), {buyer_policy()}},
          {BidVector::block(2.0, 1, m), {buyer_policy()}},
          {BidVector::block(1.0, m - 2, m), {fixed_ask_policy(ask)}}};
}

}  // namespace

TEST(CombinedMarket, SpeculatorTraceHighBulkValue) {
  const auto rules = lower_bound_setup(10).rules;
  const auto o = play_actions(rules, scripted_actions(10, 1.0), lb_profile(1.25, 1.2, 10));
  EXPECT_EQ(o.auction.alloc.units, (std::vector<std::int64_t>{1, 1, 8}));
  EXPECT_EQ(o.revenue, 0.0);
  EXPECT_EQ(o.final_alloc.units, (std::vector<std::int64_t>{2, 8, 0}));
  EXPECT_NEAR(o.welfare, 13.65, 1e-12);
  EXPECT_EQ(o.utilities[2], 8.0);
  EXPECT_EQ(o.transfer_sum(), 0.0);
}

TEST(CombinedMarket, SpeculatorTraceLowBulkValue) {
  const auto rules = lower_bound_setup(10).rules;
  const auto o = play_actions(rules, scripted_actions(10, 1.0), lb_profile(1.25, 0.5, 10));
  EXPECT_EQ(o.final_alloc.units, (std::vector<std::int64_t>{2, 1, 7}));
  EXPECT_NEAR(o.welfare, 5.25, 1e-12);
  EXPECT_EQ(o.utilities[2], 1.0);
}

TEST(CombinedMarket, OptOutEqualsAuctionAlone) {
  auto rules = lower_bound_setup(10).rules;
  auto acts = scripted_actions(10, 1.0);
  for (auto& a : acts) a.aftermarket = {opt_out_policy()};
  const auto o = play_actions(rules, acts, lb_profile(1.25, 1.2, 10));
  EXPECT_EQ(o.final_alloc, o.auction.alloc);
  EXPECT_NEAR(o.welfare, 4.0, 1e-12);
  EXPECT_EQ(o.utilities[2], 0.0);
  rules.aftermarkets.clear();
  const auto bare = play_actions(rules, acts, lb_profile(1.25, 1.2, 10));
  EXPECT_EQ(bare.utilities, o.utilities);
}

TEST(CombinedMarket, AccountingIdentity) {
  const auto r = props::accounting_identity(10000, 31);
  EXPECT_TRUE(r.ok()) << r.failures << " failures, first: " << r.first_failure;
}

TEST(CombinedMarket, VoluntaryParticipation) {
  const auto r = props::voluntary_participation(10000, 37);
  EXPECT_TRUE(r.ok()) << r.failures << " failures, first: " << r.first_failure;
}

TEST(CombinedMarket, PlayResolvesStrategies) {
  const auto setup = lower_bound_setup(10);
  const auto strategies = scripted_lower_bound_equilibrium(10);
  const auto o = play(setup, strategies, lb_profile(1.25, 1.2, 10));
  EXPECT_EQ(o.auction.alloc.units, (std::vector<std::int64_t>{1, 1, 8}));
  EXPECT_EQ(o.final_alloc[2], 0);
  EXPECT_NEAR(o.welfare, 13.65, 1e-12);
}

TEST(ExpectedOutcome, LowerBoundMatchesClosedForm) {
  const std::int64_t m = 10000;
  const auto setup = lower_bound_setup(m);
  const auto eo = expected_outcome(setup, scripted_lower_bound_equilibrium(m), QuadratureSpec{1e-10, {}});
  const auto cf = lower_bound_closed_form(m);
  EXPECT_NEAR(eo.welfare, cf.eq_welfare, 1e-7);
  EXPECT_NEAR(eo.welfare, 5.7499, 5e-5);
  EXPECT_NEAR(eo.utilities[2], cf.speculator_utility, 1e-7);
  const auto opt = expected_opt(setup.market, QuadratureSpec{1e-10, {}});
  // Exact optimum sits about 1/(24 m^3) above the closed form.
  EXPECT_NEAR(opt.value, cf.opt_welfare, 1e-7);
  EXPECT_NEAR(opt.value, 10.2005, 5e-5);
}

TEST(ExpectedOutcome, MonteCarloAgreesWithQuadrature) {
  const auto setup = make_setup(symmetric_fpa_market(UnitDistribution::uniform(0.0, 1.0)), FirstPrice{}, {});
  const StrategyProfile truthful{{truthful_policy(), {}}, {truthful_policy(), {}}};
  const auto q = expected_outcome(setup, truthful, QuadratureSpec{1e-10, {}});
  EXPECT_NEAR(q.welfare, 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(q.revenue, 2.0 / 3.0, 1e-9);
  const auto mc = expected_outcome(setup, truthful, MonteCarloSpec{200000, 3, 10});
  EXPECT_NEAR(mc.welfare, 2.0 / 3.0, 5 * mc.welfare_error);
  EXPECT_GT(mc.welfare_error, 0.0);
}

TEST(ExpectedOutcome, DeterministicMarketIsExact) {
  const auto market = deterministic_market(3, {{{3.0, 1}, {1.0, 2}}, {{2.0, 2}, {0.0, 1}}});
  const auto setup = make_setup(market, UniformPrice{}, {});
  const StrategyProfile truthful{{truthful_policy(), {}}, {truthful_policy(), {}}};
  for (const Integration& how : {Integration{QuadratureSpec{}}, Integration{MonteCarloSpec{1000, 1, 4}}}) {
    const auto eo = expected_outcome(setup, truthful, how);
    EXPECT_DOUBLE_EQ(eo.welfare, 7.0);
    EXPECT_DOUBLE_EQ(eo.revenue, 3.0);
    EXPECT_EQ(eo.welfare_error, 0.0);
  }
  EXPECT_DOUBLE_EQ(expected_opt(market, QuadratureSpec{}).value, 7.0);
  EXPECT_DOUBLE_EQ(expected_opt(market, QuadratureSpec{}, 1).value, 3.0);
}

TEST(Quadrature, ScalarAndBreaks) {
  double err = 0.0;
  EXPECT_NEAR(integrate_scalar([](double x) { return std::sin(x); }, 0.0, M_PI, 1e-12, &err), 2.0, 1e-12);
  // The estimate stops at a relative roundoff floor.
  EXPECT_LE(err, 1e-9);
  const std::vector<double> breaks{0.0, 0.3, 1.0};
  const auto r = integrate_intervals([](double x, std::span<double> out) { out[0] = x < 0.3 ? 1.0 : 2.0; out[1] = x; },
                                     2, breaks, QuadratureOptions{1e-12, 4000});
  EXPECT_NEAR(r.value[0], 0.3 + 1.4, 1e-12);
  EXPECT_NEAR(r.value[1], 0.5, 1e-12);
}

TEST(Quadrature, ExpectationsWithHintsAndHeavyTails) {
  const auto u = UnitDistribution::uniform(0.0, 1.0);
  const std::vector<const UnitDistribution*> dims{&u, &u};
  const auto sq = expect_over(dims, [](std::span<const double> x, std::span<double> out) { out[0] = x[0] * x[1]; },
                              1, QuadratureOptions{1e-12, 4000});
  EXPECT_NEAR(sq.value[0], 0.25, 1e-12);
  const std::vector<double> hints{0.3};
  const auto step = expect_over(std::span(dims).first(1),
                                [](std::span<const double> x, std::span<double> out) { out[0] = x[0] >= 0.3; }, 1,
                                QuadratureOptions{1e-12, 4000}, hints);
  EXPECT_NEAR(step.value[0], 0.7, 1e-12);

  const auto er = UnitDistribution::equal_revenue_capped(1000.0);
  const std::vector<const UnitDistribution*> tail{&er};
  const auto mean = expect_over(tail, [](std::span<const double> x, std::span<double> out) { out[0] = x[0]; }, 1,
                                QuadratureOptions{1e-10, 4000});
  EXPECT_NEAR(mean.value[0], 1.0 + std::log(1000.0), 1e-8);
}

TEST(MonteCarlo, StratifiedVisitsRareAtoms) {
  const auto mk = posted_fails_market(0.01, 1000.0);
  const auto dims = mk.dims();
  const auto r = stratified_monte_carlo(std::span(dims).subspan(1, 1),
                                        [](std::span<const double> x, std::span<double> out) { out[0] = x[0] >= 1e5; },
                                        1, MonteCarloOptions{20000, 9, 8, 16});
  // Mass of the top atom: eps / H.
  EXPECT_NEAR(r.mean[0], 1e-5, 5 * r.std_error[0] + 1e-12);
  EXPECT_GT(r.mean[0], 0.0);
}
