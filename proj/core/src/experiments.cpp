#include "cmkt/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace cmkt {

namespace {

GapOptions gap_options(double tol, std::size_t workers) {
  GapOptions g;
  g.quadrature = QuadratureSpec{tol, {}};
  g.workers = workers;
  return g;
}

}  // namespace

std::vector<LowerBoundRow> lower_bound_sweep(const LowerBoundSweepOptions& opts) {
  std::vector<LowerBoundRow> rows;
  for (std::int64_t m : opts.ms) {
    const CombinedSetup setup = lower_bound_setup(m);
    const StrategyProfile prof = scripted_profile_for(setup);
    LowerBoundRow row;
    row.m = m;
    row.closed = lower_bound_closed_form(m);
    const ExpectedOutcome eq = expected_outcome(setup, prof, opts.integration);
    row.eq_welfare = eq.welfare;
    row.eq_error = eq.welfare_error;
    row.speculator_utility = eq.utilities.at(2);
    row.method = eq.method;
    const Estimate opt = expected_opt(setup.market, opts.integration);
    row.opt_welfare = opt.value;
    row.opt_error = opt.error;
    row.ratio = opt.value / eq.welfare;
    if (opts.verify) {
      const double tol = std::holds_alternative<QuadratureSpec>(opts.integration)
                             ? std::get<QuadratureSpec>(opts.integration).tol
                             : 1e-10;
      row.bne = verify_bne(setup, prof, lower_bound_deviation_grids(setup, prof), opts.epsilon,
                           gap_options(tol, opts.workers));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<GroupedRow> grouped_sweep(const GroupedSweepOptions& opts) {
  std::vector<GroupedRow> rows;
  for (double gamma : opts.gammas) {
    const CombinedSetup setup = grouped_setup(opts.m, gamma);
    const StrategyProfile prof = scripted_profile_for(setup);
    GroupedRow row;
    row.m = opts.m;
    row.gamma = gamma;
    row.groups = static_cast<std::int64_t>(setup.market.groups.size());
    row.units_per_group = opts.m / row.groups;

    const QuadratureSpec quad{opts.tol, {}};
    const ExpectedOutcome eq = expected_outcome(setup, prof, quad);
    row.eq_welfare = eq.welfare;
    row.group_eq_welfare = eq.welfare / static_cast<double>(row.groups);
    // Units cannot move across groups on path, so each group is measured
    // against the optimum over its own share of the supply.
    row.group_opt_welfare = expected_opt(lower_bound_market(row.units_per_group), quad).value;
    row.ratio = row.group_opt_welfare / row.group_eq_welfare;
    row.closed_ratio = lower_bound_closed_form(row.units_per_group).ratio;

    const auto profile = setup.market.build_profile(setup.market.median_draws());
    const CombinedOutcome o = play(setup, prof, profile);
    for (const auto& g : setup.market.groups)
      row.max_speculator_units = std::max(row.max_speculator_units, o.auction.alloc[static_cast<std::size_t>(g[2])]);

    if (opts.verify)
      row.bne = verify_bne(setup, prof, lower_bound_deviation_grids(setup, prof), opts.epsilon,
                           gap_options(opts.tol, opts.workers));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<WitnessResult> run_lower_bound_witnesses(std::int64_t m, double tol) {
  const CombinedSetup setup = lower_bound_setup(m);
  const StrategyProfile prof = scripted_profile_for(setup);
  std::vector<WitnessResult> out;
  for (const WitnessFamily& f : lower_bound_witness_families(m)) {
    WitnessResult r;
    r.label = f.label;
    r.agent = f.agent;
    r.verdict = weak_dominance_witnesses(setup, prof, f.agent, f.scripted, f.alternative, f.witnesses,
                                         QuadratureSpec{tol, {}});
    out.push_back(std::move(r));
  }
  return out;
}

PostedPriceEquilibrium posted_price_equilibrium(const MarketModel& market, double price, double tol,
                                                std::size_t workers) {
  if (market.agent_count() != 2 || market.m != 1) throw std::invalid_argument("posted-price check needs two buyers, one item");
  const CombinedSetup setup = make_setup(market, PostedPrice{price, {0, 1}}, {ResaleSpec{}});
  std::vector<double> asks;
  for (int k = 1; k <= 20; ++k) asks.push_back(0.05 * k);
  const AftermarketPolicyPtr resale =
      prior_optimal_seller_policy(std::make_shared<MarketModel>(market), ResaleSpec{}, asks, tol);

  const std::vector<Strategy> first{
      {truthful_policy(), {resale}},
      {fixed_bid_policy(BidVector::from_runs({{price, 1}})), {resale}},
      {fixed_bid_policy(BidVector::zeros(1)), {resale}},
  };
  const std::vector<Strategy> second{{truthful_policy(), {resale}}};

  BrdOptions bo;
  bo.quadrature = QuadratureSpec{tol, {price}};
  bo.workers = workers;
  const BrdResult brd = best_response_dynamics(setup, {first, second}, {{0, 0}, {1, 0}, {2, 0}}, bo);

  PostedPriceEquilibrium eq;
  eq.price = price;
  eq.equilibria = brd.equilibria;
  eq.diagnostics = brd.diagnostics;
  if (!eq.equilibria.empty()) eq.welfare = eq.equilibria.front().outcome.welfare;
  return eq;
}

std::vector<PostedFailsRow> posted_fails(const PostedFailsOptions& opts) {
  std::vector<PostedFailsRow> rows;
  for (double cap : opts.caps) {
    const MarketModel mk = posted_fails_market(opts.eps, cap);
    PostedFailsRow row;
    row.eps = opts.eps;
    row.cap = cap;
    const Estimate opt = expected_opt(mk, QuadratureSpec{opts.tol, {}});
    row.opt_welfare = opt.value;
    row.opt_error = opt.error;
    row.median = posted_price_equilibrium(mk, 1.0 / (2.0 * (1.0 - opts.eps)), opts.tol, opts.workers);
    row.balanced = posted_price_equilibrium(mk, 0.5 * opt.value, opts.tol, opts.workers);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::vector<Strategy>> reserve_strategy_sets(const CombinedSetup& setup) {
  const MarketModel& mk = setup.market;
  if (mk.agent_count() != 3) throw std::invalid_argument("reserve strategy sets need a single lower-bound group");
  const auto* up = std::get_if<UniformPrice>(&setup.rules.mechanism);
  const double r = up && up->reserve ? *up->reserve : 0.0;
  const std::int64_t m = mk.m;
  const AftermarketPolicyPtr seller = speculator_policy(setup);
  const AftermarketPolicyPtr buyer = buyer_policy();
  auto fixed = [&](double b, std::int64_t k) { return fixed_bid_policy(BidVector::block(b, k, m)); };

  std::vector<std::vector<Strategy>> sets(3);
  sets[0] = {{demand_at_price_policy(r, 2), {buyer}},
             {truthful_policy(), {buyer}},
             {fixed(2.0, 1), {buyer}},
             {fixed(0.0, 0), {buyer}}};
  sets[1] = {{demand_at_price_policy(r, m), {buyer}},
             {truthful_policy(), {buyer}},
             {fixed(2.0, 1), {buyer}},
             {fixed(0.0, 0), {buyer}}};
  sets[2] = {{fixed(0.0, 0), {seller}},
             {fixed(1.0, m - 2), {seller}},
             {fixed(r, m - 2), {seller}},
             {fixed(1.0, m - 3), {seller}}};
  return sets;
}

BalancedFixResult balanced_fix(const BalancedFixOptions& opts) {
  const MarketModel mk = lower_bound_market(opts.m);
  const QuadratureSpec quad{opts.tol, {}};
  const BalancedReserve br = uniform_with_balanced_reserve(mk, quad);
  BalancedFixResult res;
  res.m = opts.m;
  res.expected_opt = br.expected_opt;
  res.reserve = br.reserve;
  res.reserve_error = br.error;

  struct Variant {
    const char* label;
    double psi_scale;
  };
  for (const Variant v : {Variant{"exact", 1.0}, Variant{"estimate_low", 0.9}, Variant{"estimate_high", 1.1}}) {
    const NoisyReserve nr = noisy_reserve(opts.m, v.psi_scale * br.expected_opt, 0.0, 0.0);
    const CombinedSetup setup = lower_bound_setup(opts.m, nr.reserve);
    const auto sets = reserve_strategy_sets(setup);
    BrdOptions bo;
    bo.quadrature = quad;
    bo.workers = opts.workers;
    ReserveAudit ra;
    ra.label = v.label;
    ra.reserve = nr.reserve;
    ra.eps_price = std::abs(nr.reserve - br.reserve);
    ra.brd = best_response_dynamics(setup, sets, random_inits(sets, opts.inits, opts.seed), bo);
    std::vector<AuditCandidate> cands;
    for (const BrdCandidate& c : ra.brd.equilibria) {
      std::string label;
      for (std::size_t i = 0; i < c.choice.size(); ++i) {
        if (i) label += "|";
        label += sets[i][c.choice[i]].describe();
      }
      cands.push_back({label, c.outcome.welfare, c.outcome.welfare_error});
    }
    ra.audit = welfare_guarantee_audit(br.expected_opt, opts.m, std::move(cands), 1.0, 1.0, ra.eps_price,
                                       opts.audit_tol);
    res.audits.push_back(std::move(ra));
  }
  return res;
}

SmoothAuditResult smooth_audit(const SmoothAuditOptions& opts) {
  SmoothAuditResult res;
  const double lambda = 1.0 - std::exp(-1.0);
  MarketRules fpa;
  fpa.mechanism = FirstPrice{};
  fpa.m = 1;
  const CheckDomain dom = fpa_grid_domain();
  res.fpa = check_smooth(fpa, fpa_certificate(lambda, 1.0, opts.fpa_cells), dom, opts.tol, opts.workers);
  res.fpa_too_strong = check_smooth(fpa, fpa_certificate(0.99, 1.0, opts.fpa_cells), dom, opts.tol, opts.workers);

  const std::vector<double> asks{0.2, 0.5, 0.8, 1.1};
  {
    MarketRules lifted = fpa;
    lifted.aftermarkets = {ResaleSpec{}};
    std::vector<std::vector<AftermarketPolicyPtr>> pol{{opt_out_policy()}, {buyer_policy()}};
    for (double a : asks) pol.push_back({fixed_ask_policy(a)});
    const auto cert =
        lift_certificate_to_combined(fpa_certificate(lambda, 1.0, opts.fpa_cells), lifted.aftermarkets, 2, 1);
    res.lifted = check_smooth(lifted, cert, with_aftermarket_actions(dom, pol), opts.tol, opts.workers);
  }
  {
    // Two posted-resale rounds; the second runs in reverse buyer order.
    MarketRules chain = fpa;
    chain.aftermarkets = {ResaleSpec{}, ResaleSpec{{}, {1, 0}, {}, 0.0}};
    const AftermarketPolicyPtr out = opt_out_policy();
    const AftermarketPolicyPtr buy = buyer_policy();
    const AftermarketPolicyPtr lo = fixed_ask_policy(asks[1]);
    const AftermarketPolicyPtr hi = fixed_ask_policy(asks[3]);
    const std::vector<std::vector<AftermarketPolicyPtr>> pol{{out, out}, {buy, buy}, {lo, buy}, {buy, lo},
                                                             {hi, out}, {out, hi}, {lo, hi}, {hi, lo}};
    const auto cert =
        lift_certificate_to_combined(fpa_certificate(lambda, 1.0, opts.fpa_cells), chain.aftermarkets, 2, 1);
    res.double_lifted = check_smooth(chain, cert, with_aftermarket_actions(dom, pol), opts.tol, opts.workers);
  }
  {
    MarketRules disc;
    disc.mechanism = Discriminatory{};
    disc.m = 3;
    res.discriminatory = check_semi_smooth(disc, discriminatory_certificate(opts.discriminatory_cells),
                                           correlated_discriminatory_domain(), opts.tol, opts.workers);
  }
  res.poa_fpa = poa_bound(lambda, 1.0);
  res.poa_all_pay = poa_bound(0.5, 1.0);
  return res;
}

SymmetricFpaReport symmetric_fpa_uniform(const SymmetricFpaOptions& opts) {
  return symmetric_fpa_check(UnitDistribution::uniform(0.0, 1.0), ResaleSpec{}, opts);
}

}  // namespace cmkt
