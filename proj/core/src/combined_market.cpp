#include "cmkt/combined_market.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "cmkt/allocation.hpp"

namespace cmkt {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string runs_text(const std::vector<Run>& runs) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (std::size_t i = 0; i < runs.size(); ++i) os << (i ? "," : "") << runs[i].value << "x" << runs[i].count;
  os << ")";
  return os.str();
}

class FixedBidPolicy final : public BidPolicy {
 public:
  explicit FixedBidPolicy(BidVector b) : bid_(std::move(b)) {}
  std::vector<WeightedBid> bids(const MarginalValuation&) const override { return {{1.0, bid_}}; }
  bool type_independent() const override { return true; }
  std::string describe() const override { return "bid" + runs_text(bid_.runs()); }

 private:
  BidVector bid_;
};

class MixedBidPolicy final : public BidPolicy {
 public:
  explicit MixedBidPolicy(std::vector<WeightedBid> mix) : mix_(std::move(mix)) {
    double total = 0.0;
    for (const auto& w : mix_) {
      if (!(w.weight >= 0.0)) throw std::invalid_argument("mixture weights must be non-negative");
      total += w.weight;
    }
    if (mix_.empty() || std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("mixture weights must sum to 1");
  }
  std::vector<WeightedBid> bids(const MarginalValuation&) const override { return mix_; }
  bool type_independent() const override { return true; }
  std::string describe() const override {
    std::string s = "mix[";
    for (std::size_t i = 0; i < mix_.size(); ++i) {
      s += (i ? ";" : "") + fmt(mix_[i].weight) + ":" + runs_text(mix_[i].bid.runs());
    }
    return s + "]";
  }

 private:
  std::vector<WeightedBid> mix_;
};

class MappedBidPolicy final : public BidPolicy {
 public:
  MappedBidPolicy(std::function<double(double)> map, std::string name) : map_(std::move(map)), name_(std::move(name)) {}
  std::vector<WeightedBid> bids(const MarginalValuation& own) const override {
    std::vector<Run> runs = own.runs();
    for (Run& r : runs) r.value = map_(r.value);
    return {{1.0, BidVector::from_runs(std::move(runs))}};
  }
  std::string describe() const override { return name_; }

 private:
  std::function<double(double)> map_;
  std::string name_;
};

class DemandAtPricePolicy final : public BidPolicy {
 public:
  DemandAtPricePolicy(double price, std::int64_t cap) : price_(price), cap_(cap) {
    if (!(price >= 0.0) || cap < 0) throw std::invalid_argument("bad demand-at-price policy");
  }
  std::vector<WeightedBid> bids(const MarginalValuation& own) const override {
    const double p = price_;
    const std::int64_t want = own.count_prefix_from(0, [p](double v) { return v >= p && v > 0.0; });
    const std::int64_t k = std::min(want, cap_);
    return {{1.0, BidVector::block(p, k, own.size())}};
  }
  std::vector<double> breakpoints() const override { return {price_}; }
  std::string describe() const override { return "demand_at(" + fmt(price_) + ",cap=" + std::to_string(cap_) + ")"; }

 private:
  double price_;
  std::int64_t cap_;
};

}  // namespace

BidPolicyPtr fixed_bid_policy(BidVector bid) { return std::make_shared<FixedBidPolicy>(std::move(bid)); }
BidPolicyPtr mixed_bid_policy(std::vector<WeightedBid> mixture) {
  return std::make_shared<MixedBidPolicy>(std::move(mixture));
}
BidPolicyPtr truthful_policy() {
  return std::make_shared<MappedBidPolicy>([](double v) { return v; }, "truthful");
}
BidPolicyPtr mapped_bid_policy(std::function<double(double)> map, std::string name) {
  return std::make_shared<MappedBidPolicy>(std::move(map), std::move(name));
}
BidPolicyPtr shaded_policy(double factor) {
  if (!(factor >= 0.0)) throw std::invalid_argument("shade factor must be non-negative");
  return std::make_shared<MappedBidPolicy>([factor](double v) { return factor * v; }, "shade(" + fmt(factor) + ")");
}
BidPolicyPtr demand_at_price_policy(double price, std::int64_t cap) {
  return std::make_shared<DemandAtPricePolicy>(price, cap);
}

std::string Strategy::describe() const {
  std::string s = bid ? bid->describe() : "none";
  for (const auto& a : aftermarket) s += " | " + (a ? a->describe() : std::string("opt_out"));
  return s;
}

std::string MarketRules::describe() const {
  std::string s = mechanism_name(mechanism) + " m=" + std::to_string(m);
  s += signal == SignalKind::kPublicBids ? " signal=public_bids" : " signal=allocation_own_payment";
  for (const auto& r : aftermarkets) s += " -> " + r.describe();
  return s;
}

CombinedSetup make_setup(MarketModel market, Mechanism mechanism, std::vector<ResaleSpec> aftermarkets,
                         SignalKind signal) {
  market.validate();
  CombinedSetup s;
  s.rules.m = market.m;
  s.rules.mechanism = std::move(mechanism);
  s.rules.aftermarkets = std::move(aftermarkets);
  s.rules.signal = signal;
  s.market = std::move(market);
  return s;
}

double CombinedOutcome::transfer_sum() const {
  double s = 0.0;
  for (double t : transfers) s += t;
  return s;
}

CombinedOutcome play_actions(const MarketRules& rules, std::span<const CombinedAction> actions,
                             std::span<const MarginalValuation> profile) {
  const std::size_t n = actions.size();
  if (profile.size() != n) throw std::invalid_argument("strategy arity does not match agent count");
  std::vector<BidVector> bids;
  bids.reserve(n);
  for (const auto& a : actions) {
    if (a.bid.size() != rules.m) throw std::invalid_argument("bid vector length must equal m");
    bids.push_back(a.bid);
  }
  CombinedOutcome out;
  out.auction = run_mechanism(rules.mechanism, bids, rules.m, rules.tiebreak);
  out.auction_payments = out.auction.payments;
  out.revenue = out.auction.revenue();
  Allocation holding = out.auction.alloc;
  out.transfers.assign(n, 0.0);

  std::vector<AftermarketAction> acts(n);
  for (std::size_t r = 0; r < rules.aftermarkets.size(); ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& pol = actions[i].aftermarket;
      if (r < pol.size() && pol[r]) {
        Observation obs;
        obs.agent = static_cast<int>(i);
        obs.round = static_cast<int>(r);
        obs.allocation = holding;
        obs.own_payment = out.auction.payments[i];
        if (rules.signal == SignalKind::kPublicBids) obs.bids = bids;
        acts[i] = pol[r]->act(profile[i], obs);
      } else {
        acts[i] = AftermarketAction::opt_out();
      }
    }
    for (const auto& a : acts) {
      if (!a.ask) continue;
      out.thresholds.push_back(*a.ask);
      for (const auto& b : acts)
        if (b.buys && b.margin != 0.0) out.thresholds.push_back(*a.ask + b.margin);
    }
    TradeOutcome t = run_posted_resale(holding, rules.aftermarkets[r], acts, profile);
    holding = std::move(t.final_alloc);
    for (std::size_t i = 0; i < n; ++i) out.transfers[i] += t.transfers[i];
  }
  out.final_alloc = std::move(holding);
  out.values.resize(n);
  out.utilities.resize(n);
  out.welfare = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = profile[i].prefix_sum(out.final_alloc[i]);
    out.utilities[i] = out.values[i] - out.auction_payments[i] - out.transfers[i];
    out.welfare += out.values[i];
  }
  return out;
}

CombinedOutcome play(const CombinedSetup& setup, const StrategyProfile& strategies,
                     std::span<const MarginalValuation> profile, std::uint64_t seed) {
  if (strategies.size() != profile.size()) throw std::invalid_argument("strategy arity does not match agent count");
  std::mt19937_64 rng(seed);
  std::vector<CombinedAction> acts(strategies.size());
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    std::vector<WeightedBid> mix = strategies[i].bid->bids(profile[i]);
    std::size_t pick = 0;
    if (mix.size() > 1) {
      std::vector<double> w;
      for (const auto& c : mix) w.push_back(c.weight);
      std::discrete_distribution<std::size_t> d(w.begin(), w.end());
      pick = d(rng);
    }
    acts[i].bid = std::move(mix[pick].bid);
    acts[i].aftermarket = strategies[i].aftermarket;
  }
  return play_actions(setup.rules, acts, profile);
}

std::vector<double> outcome_vector(const CombinedOutcome& o) {
  std::vector<double> v;
  v.reserve(2 + 2 * o.utilities.size());
  v.push_back(o.welfare);
  v.push_back(o.revenue);
  v.insert(v.end(), o.utilities.begin(), o.utilities.end());
  v.insert(v.end(), o.values.begin(), o.values.end());
  return v;
}

void mixture_average(const CombinedSetup& setup, const StrategyProfile& strategies,
                     std::span<const MarginalValuation> profile, std::span<double> out) {
  const std::size_t n = strategies.size();
  if (profile.size() != n) throw std::invalid_argument("strategy arity does not match agent count");
  std::vector<std::vector<WeightedBid>> mixes(n);
  for (std::size_t i = 0; i < n; ++i) mixes[i] = strategies[i].bid->bids(profile[i]);
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<CombinedAction> acts(n);
  for (std::size_t i = 0; i < n; ++i) acts[i].aftermarket = strategies[i].aftermarket;
  auto rec = [&](auto&& self, std::size_t i, double w) -> void {
    if (i == n) {
      const CombinedOutcome o = play_actions(setup.rules, acts, profile);
      out[0] += w * o.welfare;
      out[1] += w * o.revenue;
      for (std::size_t k = 0; k < n; ++k) {
        out[2 + k] += w * o.utilities[k];
        out[2 + n + k] += w * o.values[k];
      }
      return;
    }
    for (const WeightedBid& c : mixes[i]) {
      if (c.weight == 0.0) continue;
      acts[i].bid = c.bid;
      self(self, i + 1, w * c.weight);
    }
  };
  rec(rec, 0, 1.0);
}

bool group_separable(const CombinedSetup& setup, const StrategyProfile& strategies, int ignore_agent) {
  const auto& groups = setup.market.groups;
  if (groups.empty()) return false;
  for (std::size_t i = 0; i < strategies.size(); ++i)
    if (static_cast<int>(i) != ignore_agent && !strategies[i].bid->type_independent()) return false;
  auto canon = [](std::vector<std::vector<int>> g) {
    for (auto& x : g) std::sort(x.begin(), x.end());
    std::sort(g.begin(), g.end());
    return g;
  };
  const auto want = canon(groups);
  for (const auto& r : setup.rules.aftermarkets)
    if (canon(r.groups) != want) return false;
  return true;
}

std::vector<std::size_t> relevant_dims(const CombinedSetup& setup, const StrategyProfile& strategies, int agent) {
  const MarketModel& mk = setup.market;
  std::vector<std::size_t> out;
  const std::vector<int> owner = mk.dim_owner();
  if (!group_separable(setup, strategies, agent)) {
    for (std::size_t d = 0; d < owner.size(); ++d) out.push_back(d);
    return out;
  }
  const int g = mk.group_of(agent);
  for (std::size_t d = 0; d < owner.size(); ++d)
    if (mk.group_of(owner[d]) == g) out.push_back(d);
  return out;
}

std::vector<double> jump_hints(const CombinedSetup& setup, const StrategyProfile& strategies,
                               std::span<const double> draws) {
  std::vector<double> hints;
  std::visit([&](const auto& mm) {
    using T = std::decay_t<decltype(mm)>;
    if constexpr (std::is_same_v<T, UniformPrice>) {
      if (mm.reserve) hints.push_back(*mm.reserve);
    } else if constexpr (std::is_same_v<T, PostedPrice>) {
      hints.push_back(mm.unit_price);
    }
  }, setup.rules.mechanism);
  for (const auto& s : strategies) {
    const auto b = s.bid->breakpoints();
    hints.insert(hints.end(), b.begin(), b.end());
  }
  const std::vector<MarginalValuation> profile = setup.market.build_profile(draws);
  const std::size_t n = strategies.size();
  std::vector<std::vector<WeightedBid>> mixes(n);
  for (std::size_t i = 0; i < n; ++i) mixes[i] = strategies[i].bid->bids(profile[i]);
  std::vector<CombinedAction> acts(n);
  for (std::size_t i = 0; i < n; ++i) acts[i].aftermarket = strategies[i].aftermarket;
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == n) {
      const CombinedOutcome o = play_actions(setup.rules, acts, profile);
      hints.insert(hints.end(), o.thresholds.begin(), o.thresholds.end());
      return;
    }
    for (const WeightedBid& c : mixes[i]) {
      acts[i].bid = c.bid;
      self(self, i + 1);
    }
  };
  rec(rec, 0);
  std::sort(hints.begin(), hints.end());
  hints.erase(std::unique(hints.begin(), hints.end()), hints.end());
  return hints;
}

QuadratureResult integrate_outcomes(const CombinedSetup& setup, const StrategyProfile& strategies,
                                    std::span<const std::size_t> free_dims, std::vector<double> base,
                                    const QuadratureSpec& spec) {
  const MarketModel& mk = setup.market;
  const auto all = mk.dims();
  std::vector<const UnitDistribution*> dims;
  for (std::size_t d : free_dims) dims.push_back(all.at(d));
  const std::size_t width = 2 + 2 * mk.agent_count();
  std::vector<double> draws = std::move(base);
  const VectorIntegrandND f = [&](std::span<const double> x, std::span<double> out) {
    for (std::size_t k = 0; k < free_dims.size(); ++k) draws[free_dims[k]] = x[k];
    const std::vector<MarginalValuation> profile = mk.build_profile(draws);
    mixture_average(setup, strategies, profile, out);
  };
  std::vector<double> hints = jump_hints(setup, strategies, draws);
  hints.insert(hints.end(), spec.hints.begin(), spec.hints.end());
  QuadratureOptions opts;
  opts.abs_tol = spec.tol;
  return expect_over(dims, f, width, opts, hints);
}

ExpectedOutcome expected_outcome(const CombinedSetup& setup, const StrategyProfile& strategies,
                                 const Integration& integration) {
  const MarketModel& mk = setup.market;
  const std::size_t n = mk.agent_count();
  if (strategies.size() != n) throw std::invalid_argument("strategy arity does not match agent count");
  ExpectedOutcome res;
  res.utilities.assign(n, 0.0);
  res.utility_errors.assign(n, 0.0);

  if (const auto* mc = std::get_if<MonteCarloSpec>(&integration)) {
    const auto dims = mk.dims();
    const VectorIntegrandND f = [&](std::span<const double> x, std::span<double> out) {
      const std::vector<MarginalValuation> profile = mk.build_profile(x);
      mixture_average(setup, strategies, profile, out);
    };
    MonteCarloOptions o;
    o.samples = mc->samples;
    o.seed = mc->seed;
    o.replicates = mc->replicates;
    const MonteCarloResult r = stratified_monte_carlo(dims, f, 2 + 2 * n, o);
    res.welfare = r.mean[0];
    res.revenue = r.mean[1];
    res.welfare_error = r.std_error[0];
    res.revenue_error = r.std_error[1];
    for (std::size_t i = 0; i < n; ++i) {
      res.utilities[i] = r.mean[2 + i];
      res.utility_errors[i] = r.std_error[2 + i];
    }
    res.method = "monte_carlo(N=" + std::to_string(r.samples) + ",seed=" + std::to_string(mc->seed) + ")";
    res.evaluations = r.samples;
    return res;
  }

  const auto& q = std::get<QuadratureSpec>(integration);
  const std::size_t dcount = mk.dim_count();
  if (dcount <= 2) {
    std::vector<std::size_t> all(dcount);
    for (std::size_t d = 0; d < dcount; ++d) all[d] = d;
    const QuadratureResult r = integrate_outcomes(setup, strategies, all, mk.median_draws(), q);
    res.welfare = r.value[0];
    res.revenue = r.value[1];
    for (std::size_t i = 0; i < n; ++i) res.utilities[i] = r.value[2 + i];
    res.welfare_error = res.revenue_error = r.error;
    res.utility_errors.assign(n, r.error);
    res.method = "quadrature(tol=" + fmt(q.tol) + ")";
    res.evaluations = r.evaluations;
    return res;
  }
  if (!group_separable(setup, strategies)) {
    throw std::domain_error("quadrature needs at most two random dimensions or a group-separable profile");
  }
  const std::vector<int> owner = mk.dim_owner();
  bool revenue_done = false;
  for (const auto& g : mk.groups) {
    std::vector<std::size_t> free;
    for (std::size_t d = 0; d < owner.size(); ++d)
      if (std::find(g.begin(), g.end(), owner[d]) != g.end()) free.push_back(d);
    if (free.size() > 2) throw std::domain_error("a group has more than two random dimensions");
    QuadratureSpec qs = q;
    qs.tol = q.tol / static_cast<double>(mk.groups.size());
    const QuadratureResult r = integrate_outcomes(setup, strategies, free, mk.median_draws(), qs);
    for (int a : g) {
      const auto i = static_cast<std::size_t>(a);
      res.utilities[i] = r.value[2 + i];
      res.utility_errors[i] = r.error;
      res.welfare += r.value[2 + n + i];
    }
    res.welfare_error += r.error;
    if (!revenue_done) {
      res.revenue = r.value[1];
      res.revenue_error = r.error;
      revenue_done = true;
    }
    res.evaluations += r.evaluations;
  }
  res.method = "quadrature_by_group(tol=" + fmt(q.tol) + ")";
  return res;
}

Estimate expected_opt(const MarketModel& market, const Integration& integration, std::int64_t k) {
  const std::int64_t units = k < 0 ? market.m : k;
  const auto dims = market.dims();
  const VectorIntegrandND f = [&](std::span<const double> x, std::span<double> out) {
    const std::vector<MarginalValuation> profile = market.build_profile(x);
    out[0] = opt_allocation(profile, units).welfare;
  };
  if (const auto* mc = std::get_if<MonteCarloSpec>(&integration)) {
    MonteCarloOptions o;
    o.samples = mc->samples;
    o.seed = mc->seed;
    o.replicates = mc->replicates;
    const MonteCarloResult r = stratified_monte_carlo(dims, f, 1, o);
    return {r.mean[0], r.std_error[0]};
  }
  const auto& q = std::get<QuadratureSpec>(integration);
  if (dims.size() > 2) throw std::domain_error("quadrature needs at most two random dimensions");
  QuadratureOptions opts;
  opts.abs_tol = q.tol;
  // OPT has kinks where two marginals cross; the landmarks of every dimension
  // are natural places for them.
  std::vector<double> hints = q.hints;
  for (const auto* d : dims) {
    const auto lm = d->landmarks();
    hints.insert(hints.end(), lm.begin(), lm.end());
  }
  const QuadratureResult r = expect_over(dims, f, 1, opts, hints);
  return {r.value[0], r.error};
}

namespace {

class PriorOptimalSeller final : public AftermarketPolicy {
 public:
  PriorOptimalSeller(std::shared_ptr<const MarketModel> market, ResaleSpec spec, std::vector<double> candidates,
                     double tol)
      : market_(std::move(market)), spec_(std::move(spec)), candidates_(std::move(candidates)), tol_(tol) {
    std::sort(candidates_.begin(), candidates_.end());
    candidates_.erase(std::unique(candidates_.begin(), candidates_.end()), candidates_.end());
    for (double c : candidates_)
      if (!(c >= 0.0)) throw std::invalid_argument("candidate prices must be non-negative");
  }

  AftermarketAction act(const MarginalValuation& own, const Observation& obs) const override {
    const int s = obs.agent;
    const std::int64_t held = obs.allocation[static_cast<std::size_t>(s)];
    if (!spec_.sellers.empty() && std::find(spec_.sellers.begin(), spec_.sellers.end(), s) == spec_.sellers.end()) {
      return AftermarketAction::buyer();
    }
    if (held == 0) return AftermarketAction::buyer();
    Key key{s, obs.allocation.units, own.runs()};
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second ? AftermarketAction::seller(*it->second) : AftermarketAction::opt_out();
    }
    const std::optional<double> best = best_price(own, obs);
    {
      std::lock_guard<std::mutex> lock(mu_);
      cache_.emplace(std::move(key), best);
    }
    return best ? AftermarketAction::seller(*best) : AftermarketAction::opt_out();
  }

  std::string describe() const override {
    return "prior_optimal_seller(" + std::to_string(candidates_.size()) + " candidates)";
  }

 private:
  struct Key {
    int seller;
    std::vector<std::int64_t> alloc;
    std::vector<Run> own;
    bool operator<(const Key& o) const {
      if (seller != o.seller) return seller < o.seller;
      if (alloc != o.alloc) return alloc < o.alloc;
      return std::lexicographical_compare(own.begin(), own.end(), o.own.begin(), o.own.end(),
                                          [](const Run& a, const Run& b) {
                                            return std::tie(a.value, a.count) < std::tie(b.value, b.count);
                                          });
    }
  };

  std::optional<double> best_price(const MarginalValuation& own, const Observation& obs) const {
    const MarketModel& mk = *market_;
    const int s = obs.agent;
    const std::size_t n = mk.agent_count();
    std::vector<int> members;
    for (const auto& g : spec_.groups)
      if (std::find(g.begin(), g.end(), s) != g.end()) members = g;
    if (members.empty())
      for (std::size_t i = 0; i < n; ++i) members.push_back(static_cast<int>(i));
    const std::vector<int> owner = mk.dim_owner();
    std::vector<std::size_t> free;
    for (std::size_t d = 0; d < owner.size(); ++d)
      if (owner[d] != s && std::find(members.begin(), members.end(), owner[d]) != members.end()) free.push_back(d);
    if (free.size() > 2) throw std::domain_error("seller pricing needs at most two buyer dimensions");
    const auto all = mk.dims();
    std::vector<const UnitDistribution*> dims;
    std::vector<double> prices = candidates_;
    for (std::size_t d : free) {
      dims.push_back(all[d]);
      const auto lm = all[d]->landmarks();
      prices.insert(prices.end(), lm.begin(), lm.end());
    }
    std::sort(prices.begin(), prices.end());
    prices.erase(std::unique(prices.begin(), prices.end()), prices.end());

    std::vector<double> draws = mk.median_draws();
    std::vector<AftermarketAction> acts(n, AftermarketAction::opt_out());
    for (int b : members)
      if (b != s) acts[static_cast<std::size_t>(b)] = AftermarketAction::buyer();
    const std::int64_t held = obs.allocation[static_cast<std::size_t>(s)];
    const double hold = own.prefix_sum(held);
    // Trades never depend on the seller's own values, so for small stocks the
    // revenue and sold-unit distribution per price are shared by every own type.
    const bool tabulate = held <= kTabulateUnits;
    const Table* table = nullptr;
    if (tabulate) {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = tables_.find({s, obs.allocation.units});
      if (it != tables_.end()) table = &it->second;
    }
    if (tabulate && !table) {
      Table t;
      t.prices = prices;
      const std::size_t width = static_cast<std::size_t>(held) + 2;
      for (double p : prices) {
        acts[static_cast<std::size_t>(s)] = AftermarketAction::seller(p);
        const VectorIntegrandND f = [&](std::span<const double> x, std::span<double> out) {
          for (std::size_t k = 0; k < free.size(); ++k) draws[free[k]] = x[k];
          const std::vector<MarginalValuation> profile = mk.build_profile(draws);
          const TradeOutcome tr = run_posted_resale(obs.allocation, spec_, acts, profile);
          std::fill(out.begin(), out.end(), 0.0);
          out[0] = -tr.transfers[static_cast<std::size_t>(s)];
          out[1 + static_cast<std::size_t>(tr.final_alloc[static_cast<std::size_t>(s)])] = 1.0;
        };
        QuadratureOptions o;
        o.abs_tol = tol_;
        const std::array<double, 1> hint{p};
        t.rows.push_back(expect_over(dims, f, width, o, hint).value);
      }
      std::lock_guard<std::mutex> lock(mu_);
      table = &tables_.emplace(std::make_pair(s, obs.allocation.units), std::move(t)).first->second;
    }

    double best_val = hold;
    std::optional<double> best;
    for (std::size_t pi = 0; pi < prices.size(); ++pi) {
      const double p = prices[pi];
      if (p < 0.0) continue;
      double val = 0.0;
      if (table) {
        const std::vector<double>& row = table->rows[pi];
        val = row[0];
        for (std::int64_t k = 0; k <= held; ++k) {
          const double w = row[1 + static_cast<std::size_t>(k)];
          if (w != 0.0) val += w * own.prefix_sum(k);
        }
      } else {
        acts[static_cast<std::size_t>(s)] = AftermarketAction::seller(p);
        const VectorIntegrandND f = [&](std::span<const double> x, std::span<double> out) {
          for (std::size_t k = 0; k < free.size(); ++k) draws[free[k]] = x[k];
          std::vector<MarginalValuation> profile = mk.build_profile(draws);
          profile[static_cast<std::size_t>(s)] = own;
          const TradeOutcome t = run_posted_resale(obs.allocation, spec_, acts, profile);
          out[0] = own.prefix_sum(t.final_alloc[static_cast<std::size_t>(s)]) - t.transfers[static_cast<std::size_t>(s)];
        };
        QuadratureOptions o;
        o.abs_tol = tol_;
        const std::array<double, 1> hint{p};
        val = expect_over(dims, f, 1, o, hint).value[0];
      }
      if (val > best_val + 1e-12 * std::max(1.0, std::abs(best_val))) {
        best_val = val;
        best = p;
      }
    }
    return best;
  }

  static constexpr std::int64_t kTabulateUnits = 8;
  struct Table {
    std::vector<double> prices;
    std::vector<std::vector<double>> rows;  // expected revenue, then P[seller keeps k units]
  };
  mutable std::map<std::pair<int, std::vector<std::int64_t>>, Table> tables_;

  std::shared_ptr<const MarketModel> market_;
  ResaleSpec spec_;
  std::vector<double> candidates_;
  double tol_;
  mutable std::mutex mu_;
  mutable std::map<Key, std::optional<double>> cache_;
};

}  // namespace

AftermarketPolicyPtr prior_optimal_seller_policy(std::shared_ptr<const MarketModel> market, ResaleSpec spec,
                                                 std::vector<double> candidates, double tol) {
  return std::make_shared<PriorOptimalSeller>(std::move(market), std::move(spec), std::move(candidates), tol);
}

}  // namespace cmkt
