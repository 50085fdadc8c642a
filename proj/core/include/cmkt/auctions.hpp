#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cmkt/allocation.hpp"
#include "cmkt/valuations.hpp"

namespace cmkt {

// Order among equal marginal bids: by agent index, then unit index.
enum class TieBreak { kLowestIndexFirst, kHighestIndexFirst };

struct AuctionOutcome {
  Allocation alloc;
  std::vector<double> payments;
  std::optional<double> clearing_price;

  double revenue() const;
};

// Bids strictly below the reserve are dropped; the m highest remaining
// marginals win and every unit is paid at max(reserve, highest losing bid).
// With a unit cap, marginal bids past the cap-th unit are ignored.
AuctionOutcome uniform_price(std::span<const BidVector> bids, std::int64_t m,
                             std::optional<double> reserve = std::nullopt,
                             TieBreak tiebreak = TieBreak::kLowestIndexFirst,
                             std::optional<std::int64_t> unit_cap = std::nullopt);

// Zeroes every marginal bid past unit `cap`.
BidVector cap_units(const BidVector& b, std::int64_t cap);

// Same allocation as uniform_price without reserve; winners pay their bids.
AuctionOutcome discriminatory(std::span<const BidVector> bids, std::int64_t m,
                              TieBreak tiebreak = TieBreak::kLowestIndexFirst);

AuctionOutcome first_price_single(std::span<const double> bids,
                                  TieBreak tiebreak = TieBreak::kLowestIndexFirst);
AuctionOutcome all_pay_single(std::span<const double> bids,
                              TieBreak tiebreak = TieBreak::kLowestIndexFirst);

// Buyers visit in `order` (index order when empty) and take every remaining
// unit whose marginal is at least the price and positive.
AuctionOutcome posted_price_sell(double unit_price, std::span<const int> order,
                                 std::span<const BidVector> demands, std::int64_t m);
AuctionOutcome posted_price_sell(double unit_price, std::span<const int> order,
                                 std::span<const MarginalValuation> valuations, std::int64_t m);

struct UniformPrice {
  std::optional<double> reserve;
  // Most units any one bidder may win.
  std::optional<std::int64_t> unit_cap;
};
struct Discriminatory {};
struct FirstPrice {};
struct AllPay {};
struct PostedPrice {
  double unit_price = 0.0;
  std::vector<int> order;
};
using Mechanism = std::variant<UniformPrice, Discriminatory, FirstPrice, AllPay, PostedPrice>;

// Single-item mechanisms read the first marginal of every bid vector.
AuctionOutcome run_mechanism(const Mechanism& mech, std::span<const BidVector> bids, std::int64_t m,
                             TieBreak tiebreak = TieBreak::kLowestIndexFirst);
std::string mechanism_name(const Mechanism& mech);

}  // namespace cmkt
