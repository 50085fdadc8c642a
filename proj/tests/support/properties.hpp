#pragma once

// Randomized invariant suites shared by the unit tests and the acceptance
// binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cmkt/combined_market.hpp"

namespace cmkt::props {

struct PropertyResult {
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::string first_failure;

  bool ok() const { return runs > 0 && failures == 0; }
  void fail(std::string what) {
    if (failures++ == 0) first_failure = std::move(what);
  }
};

inline MarginalValuation gen_valuation(std::mt19937_64& rng, std::int64_t m, bool dyadic) {
  std::uniform_int_distribution<int> q(0, 32);
  std::uniform_real_distribution<double> c(0.0, 4.0);
  std::vector<double> xs(static_cast<std::size_t>(m));
  for (double& x : xs) x = dyadic ? q(rng) / 8.0 : c(rng);
  std::sort(xs.begin(), xs.end(), std::greater<>());
  return MarginalValuation::from_values(xs);
}

inline std::vector<MarginalValuation> gen_profile(std::mt19937_64& rng, std::size_t n, std::int64_t m,
                                                  bool dyadic) {
  std::vector<MarginalValuation> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back(gen_valuation(rng, m, dyadic));
  return p;
}

inline Allocation gen_allocation(std::mt19937_64& rng, std::size_t n, std::int64_t m) {
  Allocation a(n);
  std::uniform_int_distribution<std::size_t> who(0, n);  // n = unit stays unsold
  for (std::int64_t k = 0; k < m; ++k) {
    const std::size_t i = who(rng);
    if (i < n) ++a[i];
  }
  return a;
}

inline AftermarketAction gen_action(std::mt19937_64& rng, bool dyadic) {
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_int_distribution<int> q(0, 32);
  std::uniform_real_distribution<double> c(0.0, 4.0);
  const double price = dyadic ? q(rng) / 8.0 : c(rng);
  switch (kind(rng)) {
    case 0: return AftermarketAction::seller(price);
    case 1: return AftermarketAction::buyer(dyadic ? q(rng) / 16.0 - 1.0 : c(rng) - 2.0);
    default: return AftermarketAction::opt_out();
  }
}

inline ResaleSpec gen_spec(std::mt19937_64& rng, std::size_t n) {
  ResaleSpec s;
  std::bernoulli_distribution coin(0.5);
  if (coin(rng)) {
    for (std::size_t i = 0; i < n; ++i) s.buyer_order.push_back(static_cast<int>(i));
    std::shuffle(s.buyer_order.begin(), s.buyer_order.end(), rng);
  }
  if (coin(rng))
    for (std::size_t i = 0; i < n; ++i)
      if (coin(rng)) s.sellers.push_back(static_cast<int>(i));
  return s;
}

// Posted resale: transfers sum to zero (exactly with dyadic prices) and units
// are conserved.
inline PropertyResult strong_budget_balance(std::size_t runs, std::uint64_t seed) {
  PropertyResult r;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nd(2, 5), md(1, 12);
  for (std::size_t t = 0; t < runs; ++t) {
    const bool dyadic = t % 2 == 0;
    const auto n = static_cast<std::size_t>(nd(rng));
    const std::int64_t m = md(rng);
    const auto vals = gen_profile(rng, n, m, dyadic);
    const Allocation init = gen_allocation(rng, n, m);
    std::vector<AftermarketAction> acts;
    for (std::size_t i = 0; i < n; ++i) acts.push_back(gen_action(rng, dyadic));
    const TradeOutcome o = run_posted_resale(init, gen_spec(rng, n), acts, vals);
    ++r.runs;
    double scale = 1.0;
    for (double x : o.transfers) scale = std::max(scale, std::abs(x));
    const double net = o.net_transfer();
    if (dyadic ? net != 0.0 : std::abs(net) > 1e-12 * scale) r.fail("run " + std::to_string(t) + ": net transfer " + std::to_string(net));
    if (o.final_alloc.total() != init.total()) r.fail("run " + std::to_string(t) + ": units not conserved");
    for (std::size_t i = 0; i < n; ++i)
      if (o.final_alloc[i] < 0) r.fail("run " + std::to_string(t) + ": negative holding");
  }
  return r;
}

inline Mechanism gen_multi_unit_mechanism(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k(0, 2);
  switch (k(rng)) {
    case 0: return UniformPrice{};
    case 1: return UniformPrice{0.5, std::nullopt};
    default: return Discriminatory{};
  }
}

struct RandomInstance {
  MarketRules rules;
  std::vector<MarginalValuation> profile;
  std::vector<CombinedAction> actions;
};

inline RandomInstance gen_instance(std::mt19937_64& rng, std::size_t t) {
  std::uniform_int_distribution<int> nd(2, 4), md(1, 8), pol(0, 3);
  std::uniform_real_distribution<double> ask(0.0, 4.0);
  RandomInstance in;
  const auto n = static_cast<std::size_t>(nd(rng));
  in.rules.m = md(rng);
  in.rules.mechanism = gen_multi_unit_mechanism(rng);
  in.rules.aftermarkets = {gen_spec(rng, n)};
  if (t % 3 == 0) in.rules.aftermarkets.push_back(ResaleSpec{});
  in.profile = gen_profile(rng, n, in.rules.m, t % 2 == 0);
  for (std::size_t i = 0; i < n; ++i) {
    CombinedAction a;
    a.bid = truthful_bid(gen_valuation(rng, in.rules.m, false));
    for (std::size_t k = 0; k < in.rules.aftermarkets.size(); ++k) {
      switch (pol(rng)) {
        case 0: a.aftermarket.push_back(opt_out_policy()); break;
        case 1: a.aftermarket.push_back(buyer_policy()); break;
        default: a.aftermarket.push_back(fixed_ask_policy(ask(rng))); break;
      }
    }
    in.actions.push_back(std::move(a));
  }
  return in;
}

// u = v(final) - auction payment - transfers; welfare and revenue add up;
// units are conserved through the aftermarket.
inline PropertyResult accounting_identity(std::size_t runs, std::uint64_t seed) {
  PropertyResult r;
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < runs; ++t) {
    const RandomInstance in = gen_instance(rng, t);
    const CombinedOutcome o = play_actions(in.rules, in.actions, in.profile);
    ++r.runs;
    const std::string tag = "run " + std::to_string(t) + ": ";
    double w = 0.0, rev = 0.0;
    for (std::size_t i = 0; i < in.profile.size(); ++i) {
      const double v = in.profile[i].prefix_sum(o.final_alloc[i]);
      if (v != o.values[i]) r.fail(tag + "value mismatch");
      const double u = v - o.auction_payments[i] - o.transfers[i];
      if (std::abs(u - o.utilities[i]) > 1e-12 * std::max(1.0, std::abs(u))) r.fail(tag + "utility mismatch");
      w += v;
      rev += o.auction_payments[i];
    }
    if (std::abs(w - o.welfare) > 1e-12 * std::max(1.0, w)) r.fail(tag + "welfare mismatch");
    if (std::abs(rev - o.revenue) > 1e-12 * std::max(1.0, rev)) r.fail(tag + "revenue mismatch");
    if (o.final_alloc.total() != o.auction.alloc.total()) r.fail(tag + "units not conserved");
    if (std::abs(o.transfer_sum()) > 1e-9) r.fail(tag + "transfers do not net out");
  }
  return r;
}

// Opting out of every aftermarket leaves exactly the stand-alone auction
// utility, and the dominant buy-iff-marginal>=price policy never does worse.
inline PropertyResult voluntary_participation(std::size_t runs, std::uint64_t seed) {
  PropertyResult r;
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < runs; ++t) {
    RandomInstance in = gen_instance(rng, t);
    const std::size_t i = t % in.profile.size();
    const CombinedOutcome base = play_actions(in.rules, in.actions, in.profile);
    const double standalone = in.profile[i].prefix_sum(base.auction.alloc[i]) - base.auction.payments[i];
    std::vector<CombinedAction> out_acts = in.actions;
    out_acts[i].aftermarket.assign(in.rules.aftermarkets.size(), opt_out_policy());
    const CombinedOutcome o = play_actions(in.rules, out_acts, in.profile);
    std::vector<CombinedAction> buy_acts = in.actions;
    buy_acts[i].aftermarket.assign(in.rules.aftermarkets.size(), buyer_policy());
    const CombinedOutcome b = play_actions(in.rules, buy_acts, in.profile);
    ++r.runs;
    const std::string tag = "run " + std::to_string(t) + ": ";
    if (o.utilities[i] != standalone) r.fail(tag + "opt-out changed utility");
    if (b.utilities[i] < standalone - 1e-12 * std::max(1.0, std::abs(standalone)))
      r.fail(tag + "dominant buyer policy lost utility");
  }
  return r;
}

// With buyers on the dominant policy and sellers asking at least the value
// of the first unit they hold, every trade moves a unit to a weakly higher
// marginal, so realized welfare cannot fall.
inline PropertyResult aftermarket_welfare_monotone(std::size_t runs, std::uint64_t seed) {
  PropertyResult r;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nd(2, 5), md(1, 10);
  std::uniform_real_distribution<double> markup(0.0, 1.5);
  std::bernoulli_distribution sells(0.5);
  for (std::size_t t = 0; t < runs; ++t) {
    const auto n = static_cast<std::size_t>(nd(rng));
    const std::int64_t m = md(rng);
    const auto vals = gen_profile(rng, n, m, t % 2 == 0);
    const Allocation init = gen_allocation(rng, n, m);
    std::vector<AftermarketAction> acts;
    for (std::size_t i = 0; i < n; ++i) {
      if (init[i] > 0 && sells(rng)) acts.push_back(AftermarketAction::seller(vals[i].at(0) + markup(rng)));
      else acts.push_back(AftermarketAction::buyer());
    }
    const TradeOutcome o = run_posted_resale(init, gen_spec(rng, n), acts, vals);
    ++r.runs;
    double before = 0.0, after = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      before += vals[i].prefix_sum(init[i]);
      after += vals[i].prefix_sum(o.final_alloc[i]);
    }
    if (after < before - 1e-9) r.fail("run " + std::to_string(t) + ": welfare fell");
  }
  return r;
}

}  // namespace cmkt::props
