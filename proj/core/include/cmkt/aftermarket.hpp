#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmkt/allocation.hpp"
#include "cmkt/auctions.hpp"
#include "cmkt/valuations.hpp"

namespace cmkt {

enum class SignalKind {
  kPublicAllocationOwnPayment,  // everyone sees x and their own payment
  kPublicBids,                  // ... plus every bid vector
};

struct Observation {
  int agent = 0;
  int round = 0;
  Allocation allocation;  // holdings when the round starts
  double own_payment = 0.0;
  std::optional<std::vector<BidVector>> bids;
};

std::vector<Observation> apply_signal(SignalKind kind, const AuctionOutcome& outcome,
                                      std::span<const BidVector> bids);

// What an agent does in one posted-resale round. An agent with an ask offers
// all of the units it held when the round began at that unit price; an agent
// without one may buy.
struct AftermarketAction {
  std::optional<double> ask;
  bool buys = true;
  // Buy a unit only if its marginal is at least price + margin.
  double margin = 0.0;

  static AftermarketAction opt_out() { return {std::nullopt, false, 0.0}; }
  static AftermarketAction buyer(double margin = 0.0) { return {std::nullopt, true, margin}; }
  static AftermarketAction seller(double price) { return {price, false, 0.0}; }
};

struct ResaleSpec {
  // Agents allowed to post asks; empty means anyone holding units may.
  std::vector<int> sellers;
  // Visiting order of buyers; empty means index order.
  std::vector<int> buyer_order;
  // Trade only inside each group; empty means one group of everyone.
  std::vector<std::vector<int>> groups;
  // Rebate paid to the buyer per unit traded, funded from outside the market.
  // Non-zero values break weak budget balance; only used to exercise checks.
  double subsidy_per_unit = 0.0;

  std::string describe() const;
};

struct TradeOutcome {
  Allocation final_alloc;
  std::vector<double> transfers;  // positive = pays

  double net_transfer() const;
};

// Sellers (ascending index) each offer their initial stock at their ask;
// buyers then visit in order and buy unit by unit while the next marginal is
// positive and at least ask + margin. Sellers never buy.
TradeOutcome run_posted_resale(const Allocation& initial, const ResaleSpec& spec,
                               std::span<const AftermarketAction> actions,
                               std::span<const MarginalValuation> valuations);

TradeOutcome opt_out_outcome(const Allocation& initial);

bool check_weak_budget_balance(const TradeOutcome& outcome);

// Maps own valuation and observation to an action.
class AftermarketPolicy {
 public:
  virtual ~AftermarketPolicy() = default;
  virtual AftermarketAction act(const MarginalValuation& own, const Observation& obs) const = 0;
  virtual std::string describe() const = 0;
};
using AftermarketPolicyPtr = std::shared_ptr<const AftermarketPolicy>;

AftermarketPolicyPtr opt_out_policy();
// Buy iff marginal >= price (+ margin). With margin 0 this is dominant for a buyer.
AftermarketPolicyPtr buyer_policy(double margin = 0.0);
// Post a fixed ask whenever holding units.
AftermarketPolicyPtr fixed_ask_policy(double price);
// Ask = own first-unit value (resell only at a gain); single-unit markets.
AftermarketPolicyPtr value_floor_seller_policy();

}  // namespace cmkt
