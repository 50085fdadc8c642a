#include "cmkt/aftermarket.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cmkt {

std::vector<Observation> apply_signal(SignalKind kind, const AuctionOutcome& outcome,
                                      std::span<const BidVector> bids) {
  std::vector<Observation> out(outcome.alloc.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].agent = static_cast<int>(i);
    out[i].allocation = outcome.alloc;
    out[i].own_payment = outcome.payments.at(i);
    if (kind == SignalKind::kPublicBids) out[i].bids = std::vector<BidVector>(bids.begin(), bids.end());
  }
  return out;
}

std::string ResaleSpec::describe() const {
  std::ostringstream os;
  os << "posted_resale(sellers=";
  if (sellers.empty()) os << "any";
  for (std::size_t i = 0; i < sellers.size(); ++i) os << (i ? ";" : "") << sellers[i];
  os << ",order=";
  if (buyer_order.empty()) os << "index";
  for (std::size_t i = 0; i < buyer_order.size(); ++i) os << (i ? ";" : "") << buyer_order[i];
  os << ",groups=" << (groups.empty() ? std::size_t{1} : groups.size()) << ")";
  return os.str();
}

double TradeOutcome::net_transfer() const {
  double s = 0.0;
  for (double t : transfers) s += t;
  return s;
}

TradeOutcome run_posted_resale(const Allocation& initial, const ResaleSpec& spec,
                               std::span<const AftermarketAction> actions,
                               std::span<const MarginalValuation> valuations) {
  const std::size_t n = initial.size();
  if (actions.size() != n || valuations.size() != n) throw std::invalid_argument("arity mismatch in resale");
  TradeOutcome out{initial, std::vector<double>(n, 0.0)};

  std::vector<char> may_sell(n, spec.sellers.empty() ? 1 : 0);
  for (int s : spec.sellers) may_sell.at(static_cast<std::size_t>(s)) = 1;
  std::vector<char> is_seller(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (actions[i].ask) {
      if (!(*actions[i].ask >= 0.0)) throw std::invalid_argument("ask must be non-negative");
      is_seller[i] = may_sell[i] && initial[i] > 0;
    }
  }

  std::vector<int> order = spec.buyer_order;
  if (order.empty())
    for (std::size_t i = 0; i < n; ++i) order.push_back(static_cast<int>(i));
  std::vector<int> group_of(n, 0);
  for (std::size_t g = 0; g < spec.groups.size(); ++g)
    for (int a : spec.groups[g]) group_of.at(static_cast<std::size_t>(a)) = static_cast<int>(g);

  for (std::size_t s = 0; s < n; ++s) {
    if (!is_seller[s]) continue;
    const double price = *actions[s].ask;
    std::int64_t stock = initial[s];
    for (int bi : order) {
      if (stock == 0) break;
      const auto b = static_cast<std::size_t>(bi);
      if (b == s || is_seller[b] || !actions[b].buys || group_of[b] != group_of[s]) continue;
      const double threshold = price + actions[b].margin;
      const std::int64_t want = valuations[b].count_prefix_from(
          out.final_alloc[b], [threshold](double v) { return v >= threshold && v > 0.0; });
      const std::int64_t take = std::min(want, stock);
      if (take == 0) continue;
      const double paid = price * static_cast<double>(take);
      out.final_alloc[b] += take;
      out.final_alloc[s] -= take;
      out.transfers[b] += paid - spec.subsidy_per_unit * static_cast<double>(take);
      out.transfers[s] -= paid;
      stock -= take;
    }
  }
  return out;
}

TradeOutcome opt_out_outcome(const Allocation& initial) {
  return TradeOutcome{initial, std::vector<double>(initial.size(), 0.0)};
}

bool check_weak_budget_balance(const TradeOutcome& outcome) {
  double scale = 1.0;
  for (double t : outcome.transfers) scale = std::max(scale, std::abs(t));
  return outcome.net_transfer() >= -1e-12 * scale;
}

namespace {

class OptOutPolicy final : public AftermarketPolicy {
 public:
  AftermarketAction act(const MarginalValuation&, const Observation&) const override {
    return AftermarketAction::opt_out();
  }
  std::string describe() const override { return "opt_out"; }
};

class BuyerPolicy final : public AftermarketPolicy {
 public:
  explicit BuyerPolicy(double margin) : margin_(margin) {}
  AftermarketAction act(const MarginalValuation&, const Observation&) const override {
    return AftermarketAction::buyer(margin_);
  }
  std::string describe() const override {
    std::ostringstream os;
    os.precision(17);
    os << "buyer(margin=" << margin_ << ")";
    return os.str();
  }

 private:
  double margin_;
};

class FixedAskPolicy final : public AftermarketPolicy {
 public:
  explicit FixedAskPolicy(double price) : price_(price) {
    if (!(price >= 0.0)) throw std::invalid_argument("ask must be non-negative");
  }
  AftermarketAction act(const MarginalValuation&, const Observation& obs) const override {
    if (obs.allocation[static_cast<std::size_t>(obs.agent)] == 0) return AftermarketAction::opt_out();
    return AftermarketAction::seller(price_);
  }
  std::string describe() const override {
    std::ostringstream os;
    os.precision(17);
    os << "ask(" << price_ << ")";
    return os.str();
  }

 private:
  double price_;
};

class ValueFloorSellerPolicy final : public AftermarketPolicy {
 public:
  AftermarketAction act(const MarginalValuation& own, const Observation& obs) const override {
    const std::int64_t held = obs.allocation[static_cast<std::size_t>(obs.agent)];
    if (held == 0) return AftermarketAction::buyer();
    return AftermarketAction::seller(own.at(held - 1));
  }
  std::string describe() const override { return "value_floor_seller"; }
};

}  // namespace

AftermarketPolicyPtr opt_out_policy() { return std::make_shared<OptOutPolicy>(); }
AftermarketPolicyPtr buyer_policy(double margin) { return std::make_shared<BuyerPolicy>(margin); }
AftermarketPolicyPtr fixed_ask_policy(double price) { return std::make_shared<FixedAskPolicy>(price); }
AftermarketPolicyPtr value_floor_seller_policy() { return std::make_shared<ValueFloorSellerPolicy>(); }

}  // namespace cmkt
