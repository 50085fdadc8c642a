#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cmkt/equilibrium.hpp"

namespace cmkt {

namespace {

struct GroupLayout {
  std::int64_t r = 0;  // units per group
  std::vector<std::array<int, 3>> groups;
};

GroupLayout layout_of(const MarketModel& mk) {
  GroupLayout g;
  if (mk.groups.empty()) {
    if (mk.agent_count() != 3) throw std::invalid_argument("not a lower-bound market");
    g.r = mk.m;
    g.groups.push_back({0, 1, 2});
    return g;
  }
  g.r = mk.m / static_cast<std::int64_t>(mk.groups.size());
  for (const auto& grp : mk.groups) {
    if (grp.size() != 3) throw std::invalid_argument("not a lower-bound market");
    g.groups.push_back({grp[0], grp[1], grp[2]});
  }
  return g;
}

ResaleSpec speculator_resale(const MarketModel& mk) {
  const GroupLayout g = layout_of(mk);
  ResaleSpec spec;
  for (const auto& grp : g.groups) {
    spec.sellers.push_back(grp[2]);
    spec.buyer_order.push_back(grp[0]);
    spec.buyer_order.push_back(grp[1]);
  }
  spec.groups = mk.groups;
  return spec;
}

}  // namespace

LowerBoundClosedForm lower_bound_closed_form(std::int64_t m) {
  if (m <= 3) throw std::invalid_argument("lower-bound market needs m > 3");
  const double md = static_cast<double>(m);
  LowerBoundClosedForm c;
  c.expected_z = std::log(2.0 * md) / (2.0 * md - 1.0) + 1.0 / (8.0 * md * md);
  c.eq_welfare = 5.25 + (md - 3.0) * (1.0 / (2.0 * md) + 1.0 / (8.0 * md * md));
  c.opt_welfare = 5.25 + (md - 3.0) * c.expected_z;
  c.ratio = c.opt_welfare / c.eq_welfare;
  c.speculator_utility = 1.0 + (md - 3.0) / (2.0 * md);
  return c;
}

CombinedSetup lower_bound_setup(std::int64_t m, std::optional<double> reserve) {
  MarketModel mk = lower_bound_market(m);
  ResaleSpec spec = speculator_resale(mk);
  return make_setup(std::move(mk), UniformPrice{reserve, std::nullopt}, {std::move(spec)});
}

CombinedSetup grouped_setup(std::int64_t m, double gamma) {
  MarketModel mk = grouped_market(m, gamma);
  ResaleSpec spec = speculator_resale(mk);
  // Nobody may win more than a gamma share of the supply.
  const auto cap = static_cast<std::int64_t>(std::floor(gamma * static_cast<double>(m) + 1e-9));
  return make_setup(std::move(mk), UniformPrice{std::nullopt, cap}, {std::move(spec)});
}

std::vector<double> speculator_price_candidates() {
  std::vector<double> c;
  for (int k = 1; k <= 50; ++k) c.push_back(0.05 * k);
  for (double x : {0.99, 0.999, 1.001, 1.01, 1.5}) c.push_back(x);
  return c;
}

AftermarketPolicyPtr speculator_policy(const CombinedSetup& setup) {
  return prior_optimal_seller_policy(std::make_shared<MarketModel>(setup.market), setup.rules.aftermarkets.at(0),
                                     speculator_price_candidates());
}

StrategyProfile scripted_profile_for(const CombinedSetup& setup) {
  const MarketModel& mk = setup.market;
  const GroupLayout g = layout_of(mk);
  if (g.r <= 3) throw std::invalid_argument("each group needs more than 3 units");
  StrategyProfile p(mk.agent_count());
  const AftermarketPolicyPtr seller = speculator_policy(setup);
  const AftermarketPolicyPtr buyer = buyer_policy();
  for (const auto& grp : g.groups) {
    p[static_cast<std::size_t>(grp[0])] = {fixed_bid_policy(BidVector::block(2.0, 1, mk.m)), {buyer}};
    p[static_cast<std::size_t>(grp[1])] = {fixed_bid_policy(BidVector::block(2.0, 1, mk.m)), {buyer}};
    p[static_cast<std::size_t>(grp[2])] = {fixed_bid_policy(BidVector::block(1.0, g.r - 2, mk.m)), {seller}};
  }
  return p;
}

StrategyProfile scripted_lower_bound_equilibrium(std::int64_t m) { return scripted_profile_for(lower_bound_setup(m)); }

StrategyProfile scripted_grouped_equilibrium(std::int64_t m, double gamma) {
  return scripted_profile_for(grouped_setup(m, gamma));
}

std::vector<DeviationGrid> lower_bound_deviation_grids(const CombinedSetup& setup, const StrategyProfile& strategies) {
  const MarketModel& mk = setup.market;
  const GroupLayout g = layout_of(mk);
  const std::int64_t m = mk.m;
  const std::int64_t r = g.r;
  const std::vector<double> levels{0.01, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0, 1.01, 1.1,
                                   1.25, 1.5, 1.75, 1.99, 2.0, 2.01, 2.5, 3.0};
  std::vector<std::int64_t> first{1, 2, 3, r / 2, r - 3, r - 2, r - 1, r};
  if (m != r) first.push_back(m);
  const std::vector<std::int64_t> second{1, 2, r - 3, r - 2};
  // Two-step bids only start with one or two units; longer heads are covered
  // by the single-step bids.
  std::vector<BidVector> bids = step_bid_grid(m, levels, first, {});
  const std::vector<std::int64_t> short_head{1, 2};
  const std::vector<BidVector> two = step_bid_grid(m, levels, short_head, second);
  std::set<std::vector<std::pair<double, std::int64_t>>> seen;
  auto key = [](const BidVector& b) {
    std::vector<std::pair<double, std::int64_t>> k;
    for (const Run& run : b.runs()) k.emplace_back(run.value, run.count);
    return k;
  };
  for (const auto& b : bids) seen.insert(key(b));
  for (const auto& b : two)
    if (seen.insert(key(b)).second) bids.push_back(b);

  std::ostringstream lv;
  lv << "levels{";
  for (std::size_t i = 0; i < levels.size(); ++i) lv << (i ? "," : "") << levels[i];
  lv << "} counts{";
  for (std::size_t i = 0; i < first.size(); ++i) lv << (i ? "," : "") << first[i];
  lv << "} second{";
  for (std::size_t i = 0; i < second.size(); ++i) lv << (i ? "," : "") << second[i];
  lv << "}";

  const double rd = static_cast<double>(r);
  std::vector<DeviationGrid> grids(mk.agent_count());
  for (const auto& grp : g.groups) {
    const std::vector<std::vector<AftermarketPolicyPtr>> buyer_alts{
        {opt_out_policy()}, {buyer_policy(0.5)}, {buyer_policy(-0.5)}};
    std::vector<std::vector<AftermarketPolicyPtr>> seller_alts{{opt_out_policy()}};
    for (double p : {0.5, 0.9, 0.99, 1.01, 1.1, 1.25, 1.5, 2.0, 2.5}) seller_alts.push_back({fixed_ask_policy(p)});

    std::vector<std::vector<double>> a_nodes;
    for (double a : {1.0, 1.125, 1.25, 1.375, 1.5}) a_nodes.push_back({a});
    std::vector<std::vector<double>> b_nodes;
    for (double z : {0.0, 0.01, 0.5, 0.999, 1.0, 1.0 + 1.0 / (4.0 * rd), 1.0 + 1.0 / (2.0 * rd)}) b_nodes.push_back({z});

    const auto a = static_cast<std::size_t>(grp[0]);
    const auto b = static_cast<std::size_t>(grp[1]);
    const auto c = static_cast<std::size_t>(grp[2]);
    grids[a] = make_deviation_grid(strategies[a], bids, buyer_alts, a_nodes,
                                   lv.str() + "; aftermarket{opt_out,margin+-0.5}; a2 nodes{1..1.5 step 0.125}");
    grids[b] = make_deviation_grid(strategies[b], bids, buyer_alts, b_nodes,
                                   lv.str() + "; aftermarket{opt_out,margin+-0.5}; z nodes{0,0.01,0.5,0.999,1,1+1/4r,1+1/2r}");
    grids[c] = make_deviation_grid(strategies[c], bids, seller_alts, {},
                                   lv.str() + "; asks{0.5..2.5},opt_out");
  }
  return grids;
}

std::vector<WitnessFamily> lower_bound_witness_families(std::int64_t m) {
  if (m <= 3) throw std::invalid_argument("lower-bound market needs m > 3");
  const double eps = 1.0 / (10.0 * static_cast<double>(m));
  const double low = 0.5;
  const BidVector zero = BidVector::zeros(m);
  const BidVector two_one = BidVector::block(2.0, 1, m);
  const BidVector c_script = BidVector::block(1.0, m - 2, m);
  std::vector<WitnessFamily> out;

  out.push_back({"C: fewer units", 2, c_script, BidVector::block(1.0, m - 3, m),
                 {{"A bids eps on two units, B bids 1 on one",
                   {BidVector::block(eps, 2, m), BidVector::block(1.0, 1, m), zero}}}});
  out.push_back({"C: lower bid", 2, c_script, BidVector::block(low, m - 2, m),
                 {{"A bids b+eps on two units, B bids 1 on one",
                   {BidVector::block(low + eps, 2, m), BidVector::block(1.0, 1, m), zero}}}});
  out.push_back({"C: positive bids on extra units", 2, c_script,
                 BidVector::from_runs({{1.0, m - 2}, {0.1, 2}}),
                 {{"A and B bid 2 on one unit", {two_one, two_one, zero}}}});
  for (int agent : {0, 1}) {
    const std::string name = agent == 0 ? "A" : "B";
    const int other = 1 - agent;
    std::vector<BidVector> w1(3, zero);
    w1[static_cast<std::size_t>(other)] = BidVector::block((1.5 + 2.0) / 2.0, m, m);
    out.push_back({name + ": first bid below 2", agent, two_one, BidVector::block(1.5, 1, m),
                   {{"competitor bids (b+2)/2 on every unit", w1}}});
    std::vector<BidVector> w2(3, zero);
    w2[static_cast<std::size_t>(other)] = BidVector::block(2.0, m - 1, m);
    out.push_back({name + ": positive second bid", agent, two_one, BidVector::from_runs({{2.0, 1}, {0.5, 1}, {0.0, m - 2}}),
                   {{"competitor bids 2 on m-1 units", w2}}});
  }
  return out;
}

}  // namespace cmkt
