#include "cmkt/auctions.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace cmkt {

double AuctionOutcome::revenue() const {
  double r = 0.0;
  for (double p : payments) r += p;
  return r;
}

namespace {

struct Block {
  double value;
  std::size_t agent;
  std::int64_t count;
};

struct Cleared {
  Allocation alloc;
  std::vector<double> paid_as_bid;
  double highest_losing = 0.0;
  bool any_losing = false;
};

Cleared clear(std::span<const BidVector> bids, std::int64_t m, std::optional<double> reserve,
              TieBreak tiebreak) {
  if (m < 0) throw std::invalid_argument("negative supply");
  std::vector<Block> blocks;
  blocks.reserve(bids.size() * 2);
  for (std::size_t i = 0; i < bids.size(); ++i) {
    for (const Run& r : bids[i].runs()) {
      if (reserve && r.value < *reserve) break;
      blocks.push_back({r.value, i, r.count});
    }
  }
  std::stable_sort(blocks.begin(), blocks.end(), [tiebreak](const Block& a, const Block& b) {
    if (a.value != b.value) return a.value > b.value;
    return tiebreak == TieBreak::kLowestIndexFirst ? a.agent < b.agent : a.agent > b.agent;
  });
  Cleared c;
  c.alloc = Allocation(bids.size());
  c.paid_as_bid.assign(bids.size(), 0.0);
  std::int64_t left = m;
  for (const Block& b : blocks) {
    if (left == 0) {
      c.highest_losing = b.value;
      c.any_losing = true;
      break;
    }
    const std::int64_t take = std::min(left, b.count);
    c.alloc[b.agent] += take;
    c.paid_as_bid[b.agent] += b.value * static_cast<double>(take);
    left -= take;
    if (take < b.count) {
      c.highest_losing = b.value;
      c.any_losing = true;
      break;
    }
  }
  return c;
}

}  // namespace

BidVector cap_units(const BidVector& b, std::int64_t cap) {
  if (cap < 0) throw std::invalid_argument("unit cap must be non-negative");
  if (cap >= b.size()) return b;
  std::vector<Run> runs;
  std::int64_t left = cap;
  for (const Run& r : b.runs()) {
    const std::int64_t take = std::min(left, r.count);
    if (take > 0) runs.push_back({r.value, take});
    left -= take;
  }
  runs.push_back({0.0, b.size() - cap});
  return BidVector::from_runs(std::move(runs));
}

AuctionOutcome uniform_price(std::span<const BidVector> bids, std::int64_t m,
                             std::optional<double> reserve, TieBreak tiebreak,
                             std::optional<std::int64_t> unit_cap) {
  if (reserve && !(*reserve >= 0.0)) throw std::invalid_argument("reserve must be non-negative");
  std::vector<BidVector> capped;
  if (unit_cap) {
    capped.reserve(bids.size());
    for (const BidVector& b : bids) capped.push_back(cap_units(b, *unit_cap));
    bids = capped;
  }
  Cleared c = clear(bids, m, reserve, tiebreak);
  double price = c.any_losing ? c.highest_losing : 0.0;
  if (reserve && c.alloc.total() > 0) price = std::max(price, *reserve);
  AuctionOutcome out;
  out.payments.resize(bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) out.payments[i] = price * static_cast<double>(c.alloc[i]);
  out.alloc = std::move(c.alloc);
  out.clearing_price = price;
  return out;
}

AuctionOutcome discriminatory(std::span<const BidVector> bids, std::int64_t m, TieBreak tiebreak) {
  Cleared c = clear(bids, m, std::nullopt, tiebreak);
  AuctionOutcome out;
  out.alloc = std::move(c.alloc);
  out.payments = std::move(c.paid_as_bid);
  return out;
}

namespace {

std::size_t single_winner(std::span<const double> bids, TieBreak tiebreak) {
  if (bids.empty()) throw std::invalid_argument("no bidders");
  std::size_t w = 0;
  for (std::size_t i = 1; i < bids.size(); ++i) {
    if (!(bids[i] >= 0.0)) throw std::invalid_argument("bids must be non-negative");
    if (bids[i] > bids[w] || (bids[i] == bids[w] && tiebreak == TieBreak::kHighestIndexFirst)) w = i;
  }
  if (!(bids[0] >= 0.0)) throw std::invalid_argument("bids must be non-negative");
  return w;
}

}  // namespace

AuctionOutcome first_price_single(std::span<const double> bids, TieBreak tiebreak) {
  const std::size_t w = single_winner(bids, tiebreak);
  AuctionOutcome out;
  out.alloc = Allocation(bids.size());
  out.alloc[w] = 1;
  out.payments.assign(bids.size(), 0.0);
  out.payments[w] = bids[w];
  return out;
}

AuctionOutcome all_pay_single(std::span<const double> bids, TieBreak tiebreak) {
  const std::size_t w = single_winner(bids, tiebreak);
  AuctionOutcome out;
  out.alloc = Allocation(bids.size());
  out.alloc[w] = 1;
  out.payments.assign(bids.begin(), bids.end());
  return out;
}

AuctionOutcome posted_price_sell(double unit_price, std::span<const int> order,
                                 std::span<const BidVector> demands, std::int64_t m) {
  if (!(unit_price >= 0.0)) throw std::invalid_argument("price must be non-negative");
  const std::size_t n = demands.size();
  std::vector<int> visit(order.begin(), order.end());
  if (visit.empty())
    for (std::size_t i = 0; i < n; ++i) visit.push_back(static_cast<int>(i));
  AuctionOutcome out;
  out.alloc = Allocation(n);
  out.payments.assign(n, 0.0);
  std::int64_t left = m;
  for (int b : visit) {
    if (b < 0 || static_cast<std::size_t>(b) >= n) throw std::invalid_argument("order entry out of range");
    const std::int64_t want = demands[static_cast<std::size_t>(b)].count_prefix_from(
        0, [unit_price](double v) { return v >= unit_price && v > 0.0; });
    const std::int64_t take = std::min(want, left);
    out.alloc[static_cast<std::size_t>(b)] += take;
    out.payments[static_cast<std::size_t>(b)] += unit_price * static_cast<double>(take);
    left -= take;
  }
  return out;
}

AuctionOutcome posted_price_sell(double unit_price, std::span<const int> order,
                                 std::span<const MarginalValuation> valuations, std::int64_t m) {
  std::vector<BidVector> demands;
  demands.reserve(valuations.size());
  for (const auto& v : valuations) demands.push_back(truthful_bid(v));
  return posted_price_sell(unit_price, order, demands, m);
}

AuctionOutcome run_mechanism(const Mechanism& mech, std::span<const BidVector> bids, std::int64_t m,
                             TieBreak tiebreak) {
  auto firsts = [&] {
    if (m != 1) throw std::invalid_argument("single-item mechanism needs m = 1");
    std::vector<double> f;
    f.reserve(bids.size());
    for (const auto& b : bids) f.push_back(b.size() > 0 ? b.at(0) : 0.0);
    return f;
  };
  return std::visit([&](const auto& mm) -> AuctionOutcome {
    using T = std::decay_t<decltype(mm)>;
    if constexpr (std::is_same_v<T, UniformPrice>) return uniform_price(bids, m, mm.reserve, tiebreak, mm.unit_cap);
    else if constexpr (std::is_same_v<T, Discriminatory>) return discriminatory(bids, m, tiebreak);
    else if constexpr (std::is_same_v<T, FirstPrice>) return first_price_single(firsts(), tiebreak);
    else if constexpr (std::is_same_v<T, AllPay>) return all_pay_single(firsts(), tiebreak);
    else return posted_price_sell(mm.unit_price, mm.order, bids, m);
  }, mech);
}

std::string mechanism_name(const Mechanism& mech) {
  std::ostringstream os;
  os.precision(17);
  std::visit([&](const auto& mm) {
    using T = std::decay_t<decltype(mm)>;
    if constexpr (std::is_same_v<T, UniformPrice>) {
      os << "uniform";
      if (mm.reserve) os << "(reserve=" << *mm.reserve << ")";
      if (mm.unit_cap) os << "(cap=" << *mm.unit_cap << ")";
    } else if constexpr (std::is_same_v<T, Discriminatory>) os << "discriminatory";
    else if constexpr (std::is_same_v<T, FirstPrice>) os << "first_price";
    else if constexpr (std::is_same_v<T, AllPay>) os << "all_pay";
    else os << "posted(price=" << mm.unit_price << ")";
  }, mech);
  return os.str();
}

}  // namespace cmkt
