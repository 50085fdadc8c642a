#include "cmkt/smoothness.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cmkt/allocation.hpp"
#include "cmkt/parallel.hpp"

namespace cmkt {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// Mixed-radix index of a profile of action choices, skipping agent `skip`.
std::size_t others_index(std::span<const std::size_t> choice, std::span<const std::size_t> sizes, std::size_t skip) {
  std::size_t idx = 0;
  for (std::size_t j = 0; j < choice.size(); ++j) {
    if (j == skip) continue;
    idx = idx * sizes[j] + choice[j];
  }
  return idx;
}

bool next_choice(std::vector<std::size_t>& choice, std::span<const std::size_t> sizes, std::size_t skip) {
  for (std::size_t j = choice.size(); j-- > 0;) {
    if (j == skip) continue;
    if (++choice[j] < sizes[j]) return true;
    choice[j] = 0;
  }
  return false;
}

}  // namespace

SmoothnessCertificate SemiSmoothCertificate::as_smooth() const {
  SmoothnessCertificate c;
  c.lambda = lambda;
  c.mu = mu;
  c.description = description;
  const SemiSmoothGenerator gen = deviation;
  c.deviation = [gen](std::span<const MarginalValuation> profile, int agent) {
    return gen(profile[static_cast<std::size_t>(agent)], agent);
  };
  return c;
}

std::size_t CheckDomain::action_profile_count() const {
  std::size_t n = 1;
  for (const auto& a : actions) n *= a.size();
  return n;
}

SmoothReport check_smooth(const MarketRules& rules, const SmoothnessCertificate& cert, const CheckDomain& domain,
                          double tol, std::size_t workers) {
  if (!(cert.lambda > 0.0 && cert.lambda <= 1.0) || !(cert.mu >= 1.0 - 1e-15))
    throw std::invalid_argument("certificate needs lambda in (0,1] and mu >= 1");
  if (domain.profiles.empty() || domain.actions.empty()) throw std::invalid_argument("empty check domain");
  const std::size_t n = domain.actions.size();
  std::vector<std::size_t> sizes(n);
  for (std::size_t i = 0; i < n; ++i) {
    sizes[i] = domain.actions[i].size();
    if (sizes[i] == 0) throw std::invalid_argument("empty action set");
  }
  const std::size_t total = domain.action_profile_count();

  struct Worst {
    double slack = HUGE_VAL;
    std::vector<std::size_t> choice;
    double dev = 0.0, opt = 0.0, rev = 0.0;
  };
  std::vector<Worst> worst(domain.profiles.size());

  parallel_for(domain.profiles.size(), workers, [&](std::size_t p) {
    const std::vector<MarginalValuation>& v = domain.profiles[p];
    if (v.size() != n) throw std::invalid_argument("profile arity does not match the action sets");
    const double opt = opt_allocation(v, rules.m).welfare;

    // Expected deviation utility of each agent against every a_-i.
    std::vector<std::vector<double>> dev(n);
    std::vector<CombinedAction> acts(n);
    for (std::size_t i = 0; i < n; ++i) {
      const ActionDistribution d = cert.deviation(v, static_cast<int>(i));
      double wsum = 0.0;
      for (const auto& w : d) wsum += w.weight;
      if (d.empty() || std::abs(wsum - 1.0) > 1e-9) throw std::invalid_argument("deviation weights must sum to 1");
      std::size_t others = 1;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) others *= sizes[j];
      dev[i].assign(others, 0.0);
      std::vector<std::size_t> choice(n, 0);
      do {
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) acts[j] = domain.actions[j][choice[j]];
        double u = 0.0;
        for (const auto& w : d) {
          if (w.weight == 0.0) continue;
          acts[i] = w.action;
          u += w.weight * play_actions(rules, acts, v).utilities[i];
        }
        dev[i][others_index(choice, sizes, i)] = u;
      } while (next_choice(choice, sizes, i));
    }

    std::vector<std::size_t> choice(n, 0);
    for (std::size_t k = 0; k < total; ++k) {
      for (std::size_t j = 0; j < n; ++j) acts[j] = domain.actions[j][choice[j]];
      const CombinedOutcome o = play_actions(rules, acts, v);
      const double rev = o.revenue + o.transfer_sum();
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += dev[i][others_index(choice, sizes, i)];
      const double slack = sum - cert.lambda * opt + cert.mu * rev;
      if (slack < worst[p].slack) worst[p] = {slack, choice, sum, opt, rev};
      next_choice(choice, sizes, n);
    }
  });

  SmoothReport rep;
  rep.lambda = cert.lambda;
  rep.mu = cert.mu;
  rep.points_checked = domain.profiles.size() * total;
  rep.domain = domain.description;
  rep.min_slack = HUGE_VAL;
  for (std::size_t p = 0; p < worst.size(); ++p) {
    if (worst[p].slack < rep.min_slack) {
      rep.min_slack = worst[p].slack;
      rep.worst_profile = p;
      rep.worst_actions = worst[p].choice;
      rep.worst_deviation_utility = worst[p].dev;
      rep.worst_opt = worst[p].opt;
      rep.worst_revenue = worst[p].rev;
    }
  }
  rep.pass = rep.min_slack >= -tol;
  return rep;
}

SmoothReport check_semi_smooth(const MarketRules& rules, const SemiSmoothCertificate& cert,
                               const CheckDomain& domain, double tol, std::size_t workers) {
  return check_smooth(rules, cert.as_smooth(), domain, tol, workers);
}

std::vector<WeightedBid> fpa_deviation(double v, std::size_t cells) {
  if (!(v > 0.0)) throw std::invalid_argument("fpa deviation needs v > 0");
  if (cells == 0) throw std::invalid_argument("need at least one cell");
  std::vector<WeightedBid> out;
  out.reserve(cells);
  const double w = 1.0 / static_cast<double>(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    const double y = v * -std::expm1(-static_cast<double>(k) / static_cast<double>(cells));
    out.push_back({w, BidVector::from_runs({{y, 1}})});
  }
  return out;
}

std::vector<WeightedBid> discriminatory_deviation(const MarginalValuation& v, std::size_t cells) {
  if (cells == 0) throw std::invalid_argument("need at least one cell");
  std::vector<WeightedBid> out;
  out.reserve(cells);
  const double w = 1.0 / static_cast<double>(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    const double f = -std::expm1(-static_cast<double>(k) / static_cast<double>(cells));
    std::vector<Run> runs = v.runs();
    for (Run& r : runs) r.value *= f;
    out.push_back({w, BidVector::from_runs(std::move(runs))});
  }
  return out;
}

SmoothnessCertificate fpa_certificate(double lambda, double mu, std::size_t cells) {
  SmoothnessCertificate c;
  c.lambda = lambda;
  c.mu = mu;
  c.description = "fpa(" + fmt(lambda) + "," + fmt(mu) + ") highest value deviates, " + std::to_string(cells) + " cells";
  c.deviation = [cells](std::span<const MarginalValuation> v, int agent) {
    std::size_t top = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (v[i].at(0) > v[top].at(0)) top = i;
    ActionDistribution d;
    if (static_cast<std::size_t>(agent) == top && v[top].at(0) > 0.0) {
      for (auto& wb : fpa_deviation(v[top].at(0), cells)) d.push_back({wb.weight, {std::move(wb.bid), {}}});
    } else {
      d.push_back({1.0, {BidVector::zeros(v[static_cast<std::size_t>(agent)].size()), {}}});
    }
    return d;
  };
  return c;
}

SemiSmoothCertificate discriminatory_certificate(std::size_t cells) {
  SemiSmoothCertificate c;
  c.lambda = 1.0 - std::exp(-1.0);
  c.mu = 1.0;
  c.description = "discriminatory(1-1/e,1) shared-u deviation, " + std::to_string(cells) + " cells";
  c.deviation = [cells](const MarginalValuation& own, int) {
    ActionDistribution d;
    for (auto& wb : discriminatory_deviation(own, cells)) d.push_back({wb.weight, {std::move(wb.bid), {}}});
    return d;
  };
  return c;
}

AxiomProbe probe_trade_axioms(const std::vector<ResaleSpec>& rounds, std::size_t agents, std::int64_t m,
                              std::size_t instances, std::uint64_t seed) {
  AxiomProbe probe;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_int_distribution<int> level(0, 6);
  std::uniform_int_distribution<std::size_t> who(0, agents - 1);
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    for (std::size_t t = 0; t < instances; ++t) {
      ++probe.instances;
      Allocation init(agents);
      for (std::int64_t u = 0; u < m; ++u) ++init[who(rng)];
      std::vector<MarginalValuation> vals;
      for (std::size_t i = 0; i < agents; ++i) {
        std::vector<double> x(static_cast<std::size_t>(m));
        for (double& e : x) e = 0.5 * level(rng);
        std::sort(x.begin(), x.end(), std::greater<>());
        vals.push_back(MarginalValuation::from_values(x));
      }
      std::vector<AftermarketAction> acts(agents);
      for (auto& a : acts) {
        switch (kind(rng)) {
          case 0: a = AftermarketAction::opt_out(); break;
          case 1: a = AftermarketAction::buyer(0.25 * (level(rng) - 3)); break;
          default: a = AftermarketAction::seller(0.5 * level(rng)); break;
        }
      }
      const TradeOutcome base = run_posted_resale(init, rounds[r], acts, vals);
      if (!check_weak_budget_balance(base) && probe.weak_budget_balance) {
        probe.weak_budget_balance = false;
        probe.failure = "round " + std::to_string(r) + ": transfers sum to " + fmt(base.net_transfer());
      }
      for (std::size_t i = 0; i < agents; ++i) {
        std::vector<AftermarketAction> alt = acts;
        alt[i] = AftermarketAction::opt_out();
        const TradeOutcome o = run_posted_resale(init, rounds[r], alt, vals);
        const double u = vals[i].prefix_sum(o.final_alloc[i]) - o.transfers[i];
        if (u != vals[i].prefix_sum(init[i]) && probe.voluntary_participation) {
          probe.voluntary_participation = false;
          probe.failure = "round " + std::to_string(r) + ": opting out changed agent " + std::to_string(i) + "'s utility";
        }
      }
    }
  }
  return probe;
}

SmoothnessCertificate lift_certificate_to_combined(const SmoothnessCertificate& cert,
                                                   const std::vector<ResaleSpec>& rounds, std::size_t agents,
                                                   std::int64_t m) {
  const AxiomProbe probe = probe_trade_axioms(rounds, agents, m, 1000, 7);
  if (!probe.voluntary_participation || !probe.weak_budget_balance)
    throw std::invalid_argument("aftermarket is not a trade mechanism: " + probe.failure);
  SmoothnessCertificate lifted = cert;
  const std::size_t k = rounds.size();
  const SmoothGenerator inner = cert.deviation;
  lifted.deviation = [inner, k](std::span<const MarginalValuation> v, int agent) {
    ActionDistribution d = inner(v, agent);
    for (auto& w : d) w.action.aftermarket.assign(k, opt_out_policy());
    return d;
  };
  lifted.description = cert.description + " + opt_out x" + std::to_string(k);
  return lifted;
}

double poa_bound(double lambda, double mu) {
  if (!(lambda > 0.0 && lambda <= 1.0) || !(mu >= 1.0)) throw std::invalid_argument("need lambda in (0,1], mu >= 1");
  return mu / lambda;
}

CheckDomain fpa_grid_domain() {
  CheckDomain d;
  for (int a = 1; a <= 10; ++a)
    for (int b = 1; b <= 10; ++b)
      d.profiles.push_back({MarginalValuation::from_runs({{0.1 * a, 1}}), MarginalValuation::from_runs({{0.1 * b, 1}})});
  std::vector<CombinedAction> bids;
  for (int k = 0; k <= 24; ++k) bids.push_back({BidVector::from_runs({{0.05 * k, 1}}), {}});
  d.actions = {bids, bids};
  d.description = "v in {0.1..1.0}^2, opposing bids {0,0.05,..,1.2}^2";
  return d;
}

CheckDomain with_aftermarket_actions(const CheckDomain& base,
                                     const std::vector<std::vector<AftermarketPolicyPtr>>& policies) {
  CheckDomain d;
  d.profiles = base.profiles;
  for (const auto& set : base.actions) {
    std::vector<CombinedAction> out;
    for (const auto& a : set)
      for (const auto& p : policies) out.push_back({a.bid, p});
    d.actions.push_back(std::move(out));
  }
  std::string pol;
  for (std::size_t i = 0; i < policies.size(); ++i) {
    pol += i ? ";" : "";
    for (std::size_t r = 0; r < policies[i].size(); ++r) pol += (r ? "/" : "") + policies[i][r]->describe();
  }
  d.description = base.description + " x aftermarket{" + pol + "}";
  return d;
}

CheckDomain correlated_discriminatory_domain() {
  auto mv = [](double a, double b, double c) { return MarginalValuation::from_values(std::vector<double>{a, b, c}); };
  CheckDomain d;
  d.profiles = {
      {mv(1, 1, 0.5), mv(1, 0.5, 0), mv(0.5, 0, 0)},
      {mv(1, 0.5, 0), mv(1, 1, 0.5), mv(0.5, 0.5, 0.5)},
      {mv(1, 1, 1), mv(1, 1, 1), mv(1, 1, 1)},
      {mv(1, 0, 0), mv(0, 0, 0), mv(0, 0, 0)},
  };
  std::vector<CombinedAction> bids;
  const double lv[] = {1.0, 0.5, 0.0};
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b)
      for (int c = b; c < 3; ++c) bids.push_back({BidVector::from_values(std::vector<double>{lv[a], lv[b], lv[c]}), {}});
  d.actions = {bids, bids, bids};
  d.description = "4 correlated joint profiles, n=3, m=3, opposing bids non-increasing over {0,0.5,1}";
  return d;
}

std::vector<UniformProbeRow> uniform_price_probe(std::span<const std::int64_t> ms, double delta) {
  std::vector<UniformProbeRow> rows;
  for (std::int64_t m : ms) {
    if (m < 1) throw std::invalid_argument("m must be positive");
    const std::vector<MarginalValuation> v{MarginalValuation::from_runs({{1.0, m}}),
                                           MarginalValuation::block(1.0 + delta, 1, m)};
    const double opt = opt_allocation(v, m).welfare;
    std::vector<BidVector> a1{BidVector::zeros(m)};
    for (double c : {0.5, 1.0})
      for (std::int64_t k : {std::int64_t{1}, m / 2, m - 1, m})
        if (k >= 1) a1.push_back(BidVector::block(c, k, m));
    std::vector<BidVector> a2{BidVector::zeros(m)};
    for (double c : {0.5, 1.0, 1.0 + delta}) a2.push_back(BidVector::block(c, 1, m));
    UniformProbeRow row;
    row.m = m;
    row.opt = opt;
    row.lambda_star = HUGE_VAL;
    for (const auto& b1 : a1) {
      for (const auto& b2 : a2) {
        const std::vector<BidVector> a{b1, b2};
        const double rev = uniform_price(a, m).revenue();
        const std::vector<BidVector> d1{truthful_bid(v[0]), b2};
        const std::vector<BidVector> d2{b1, truthful_bid(v[1])};
        const AuctionOutcome o1 = uniform_price(d1, m);
        const AuctionOutcome o2 = uniform_price(d2, m);
        const double u = v[0].prefix_sum(o1.alloc[0]) - o1.payments[0] + v[1].prefix_sum(o2.alloc[1]) - o2.payments[1];
        const double ls = (u + rev) / opt;
        if (ls < row.lambda_star) {
          row.lambda_star = ls;
          row.deviation_utility = u;
          row.revenue = rev;
        }
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace cmkt
