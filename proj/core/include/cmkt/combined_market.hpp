#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cmkt/aftermarket.hpp"
#include "cmkt/auctions.hpp"
#include "cmkt/quadrature.hpp"
#include "cmkt/valuations.hpp"

namespace cmkt {

struct WeightedBid {
  double weight = 1.0;
  BidVector bid;
};

// Auction part of a strategy: own valuation -> finite mixture over bids.
class BidPolicy {
 public:
  virtual ~BidPolicy() = default;
  virtual std::vector<WeightedBid> bids(const MarginalValuation& own) const = 0;
  // True when the output ignores the valuation.
  virtual bool type_independent() const { return false; }
  // Marginal values at which the bid changes discontinuously.
  virtual std::vector<double> breakpoints() const { return {}; }
  virtual std::string describe() const = 0;
};
using BidPolicyPtr = std::shared_ptr<const BidPolicy>;

BidPolicyPtr fixed_bid_policy(BidVector bid);
BidPolicyPtr mixed_bid_policy(std::vector<WeightedBid> mixture);
BidPolicyPtr truthful_policy();
// Applies a non-decreasing map to every marginal.
BidPolicyPtr mapped_bid_policy(std::function<double(double)> map, std::string name);
BidPolicyPtr shaded_policy(double factor);
// Bid `price` on every unit whose marginal is at least `price`, at most `cap` units.
BidPolicyPtr demand_at_price_policy(double price, std::int64_t cap);

struct Strategy {
  BidPolicyPtr bid;
  // One policy per aftermarket round; missing rounds default to opting out.
  std::vector<AftermarketPolicyPtr> aftermarket;

  std::string describe() const;
};
using StrategyProfile = std::vector<Strategy>;

struct MarketRules {
  Mechanism mechanism = UniformPrice{};
  std::int64_t m = 1;
  TieBreak tiebreak = TieBreak::kLowestIndexFirst;
  SignalKind signal = SignalKind::kPublicAllocationOwnPayment;
  // Posted-resale rounds run in sequence after the auction.
  std::vector<ResaleSpec> aftermarkets;

  std::string describe() const;
};

struct CombinedSetup {
  MarketModel market;
  MarketRules rules;
};

CombinedSetup make_setup(MarketModel market, Mechanism mechanism, std::vector<ResaleSpec> aftermarkets,
                         SignalKind signal = SignalKind::kPublicAllocationOwnPayment);

// A realized action in the combined market: a bid plus aftermarket policies.
struct CombinedAction {
  BidVector bid;
  std::vector<AftermarketPolicyPtr> aftermarket;
};

struct CombinedOutcome {
  AuctionOutcome auction;
  Allocation final_alloc;
  std::vector<double> auction_payments;
  std::vector<double> transfers;  // aftermarket, summed over rounds; positive = pays
  std::vector<double> values;     // v_i(final x_i)
  std::vector<double> utilities;
  double welfare = 0.0;
  double revenue = 0.0;  // auction revenue
  // Prices buyers compared their marginals with in the aftermarket.
  std::vector<double> thresholds;

  double transfer_sum() const;
};

CombinedOutcome play_actions(const MarketRules& rules, std::span<const CombinedAction> actions,
                             std::span<const MarginalValuation> profile);

// Mixed bids are drawn with an RNG seeded by `seed`.
CombinedOutcome play(const CombinedSetup& setup, const StrategyProfile& strategies,
                     std::span<const MarginalValuation> profile, std::uint64_t seed = 0);

struct QuadratureSpec {
  double tol = 1e-9;
  // Extra values at which integrands may jump (e.g. posted prices).
  std::vector<double> hints;
};
struct MonteCarloSpec {
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 1;
  std::size_t replicates = 10;
};
using Integration = std::variant<QuadratureSpec, MonteCarloSpec>;

struct ExpectedOutcome {
  double welfare = 0.0;
  double revenue = 0.0;
  std::vector<double> utilities;
  // Absolute error bound (quadrature) or standard error (Monte Carlo).
  double welfare_error = 0.0;
  double revenue_error = 0.0;
  std::vector<double> utility_errors;
  std::string method;
  std::size_t evaluations = 0;
};

// Outputs of one play, in this layout: welfare, revenue, utilities[n], values[n].
std::vector<double> outcome_vector(const CombinedOutcome& o);
// Same layout, averaged over every combination of mixed bids.
void mixture_average(const CombinedSetup& setup, const StrategyProfile& strategies,
                     std::span<const MarginalValuation> profile, std::span<double> out);

// True when bids ignore types and every aftermarket trades inside the market's
// groups: then an agent's payoff only depends on the draws of its own group.
bool group_separable(const CombinedSetup& setup, const StrategyProfile& strategies, int ignore_agent = -1);
// Draw dimensions that can move `agent`'s payoff (all of them unless the
// others' part of the profile is group separable).
std::vector<std::size_t> relevant_dims(const CombinedSetup& setup, const StrategyProfile& strategies, int agent);

// Values where the payoff of some agent may jump: reserve or posted price,
// bid-policy breakpoints and the aftermarket thresholds seen when playing at
// `draws`.
std::vector<double> jump_hints(const CombinedSetup& setup, const StrategyProfile& strategies,
                               std::span<const double> draws);

// Quadrature of the mixture-averaged outcome vector over `free_dims`, every
// other dimension pinned to `base` draws. jump_hints at `base` are added to
// spec.hints.
QuadratureResult integrate_outcomes(const CombinedSetup& setup, const StrategyProfile& strategies,
                                    std::span<const std::size_t> free_dims, std::vector<double> base,
                                    const QuadratureSpec& spec);

ExpectedOutcome expected_outcome(const CombinedSetup& setup, const StrategyProfile& strategies,
                                 const Integration& integration);

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

// E[OPT(v; k)]; k < 0 means k = m.
Estimate expected_opt(const MarketModel& market, const Integration& integration, std::int64_t k = -1);

// Seller that posts the ask maximizing revenue plus retained value in
// expectation over the buyers' prior, given the public allocation. Buyers are
// assumed to follow the dominant buy-iff-marginal>=price rule. Results are
// cached per (seller, allocation, own valuation).
AftermarketPolicyPtr prior_optimal_seller_policy(std::shared_ptr<const MarketModel> market, ResaleSpec spec,
                                                 std::vector<double> candidates, double tol = 1e-10);

}  // namespace cmkt
