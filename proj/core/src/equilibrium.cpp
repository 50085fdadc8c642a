#include "cmkt/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cmkt/parallel.hpp"

namespace cmkt {

namespace {

std::vector<std::size_t> own_dims(const MarketModel& mk, int agent) {
  std::vector<std::size_t> out;
  const std::vector<int> owner = mk.dim_owner();
  for (std::size_t d = 0; d < owner.size(); ++d)
    if (owner[d] == agent) out.push_back(d);
  return out;
}

StrategyProfile with_strategy(const StrategyProfile& base, int agent, const Strategy& s) {
  StrategyProfile p = base;
  p.at(static_cast<std::size_t>(agent)) = s;
  return p;
}

}  // namespace

Estimate agent_utility(const CombinedSetup& setup, const StrategyProfile& strategies, int agent,
                       std::span<const double> own_draws, bool ex_ante, const QuadratureSpec& quad) {
  const MarketModel& mk = setup.market;
  const std::vector<std::size_t> own = own_dims(mk, agent);
  std::vector<double> base = mk.median_draws();
  std::vector<std::size_t> free;
  const std::vector<std::size_t> rel = relevant_dims(setup, strategies, agent);
  if (ex_ante) {
    free = rel;
  } else {
    if (own_draws.size() != own.size()) throw std::invalid_argument("own draw count does not match agent inputs");
    for (std::size_t k = 0; k < own.size(); ++k) base[own[k]] = own_draws[k];
    for (std::size_t d : rel)
      if (std::find(own.begin(), own.end(), d) == own.end()) free.push_back(d);
  }
  if (free.size() > 2) throw std::domain_error("utility integration needs at most two random dimensions");
  const QuadratureResult r = integrate_outcomes(setup, strategies, free, std::move(base), quad);
  return {r.value[2 + static_cast<std::size_t>(agent)], r.error};
}

GapResult best_response_gap(const CombinedSetup& setup, const StrategyProfile& strategies, int agent,
                            const DeviationGrid& grid, const GapOptions& opts) {
  const MarketModel& mk = setup.market;
  const bool has_type = !own_dims(mk, agent).empty();
  const bool ex_ante = has_type && grid.type_nodes.empty();
  std::vector<std::vector<double>> nodes = grid.type_nodes;
  if (!has_type || ex_ante) nodes = {std::vector<double>{}};

  GapResult res;
  res.agent = agent;
  res.deviations_checked = grid.deviations.size();
  std::vector<double> on_path(nodes.size());
  double err = 0.0;
  for (std::size_t t = 0; t < nodes.size(); ++t) {
    const Estimate e = agent_utility(setup, strategies, agent, nodes[t], ex_ante, opts.quadrature);
    on_path[t] = e.value;
    err = std::max(err, e.error);
  }

  struct Best {
    double gap = -HUGE_VAL;
    std::size_t node = 0;
    double util = 0.0;
    double err = 0.0;
  };
  std::vector<Best> best(grid.deviations.size());
  parallel_for(grid.deviations.size(), opts.workers, [&](std::size_t d) {
    const StrategyProfile dev = with_strategy(strategies, agent, grid.deviations[d]);
    for (std::size_t t = 0; t < nodes.size(); ++t) {
      const Estimate e = agent_utility(setup, dev, agent, nodes[t], ex_ante, opts.quadrature);
      const double g = e.value - on_path[t];
      best[d].err = std::max(best[d].err, e.error);
      if (g > best[d].gap) best[d] = {g, t, e.value, best[d].err};
    }
  });

  res.gap = 0.0;
  res.on_path_utility = on_path[0];
  res.deviation_utility = on_path[0];
  if (has_type && !ex_ante) res.witness_type = nodes[0];
  for (std::size_t d = 0; d < best.size(); ++d) {
    err = std::max(err, best[d].err);
    if (best[d].gap > res.gap) {
      res.gap = best[d].gap;
      res.witness = d;
      res.on_path_utility = on_path[best[d].node];
      res.deviation_utility = best[d].util;
      res.witness_type = nodes[best[d].node];
    }
  }
  res.integration_error = err;
  res.witness_description = res.witness == kOnPath ? "on_path" : grid.deviations[res.witness].describe();
  return res;
}

double BneReport::max_gap() const {
  double g = 0.0;
  for (const auto& a : agents) g = std::max(g, a.gap);
  return g;
}

BneReport verify_bne(const CombinedSetup& setup, const StrategyProfile& strategies,
                     const std::vector<DeviationGrid>& grids, double epsilon, const GapOptions& opts) {
  if (grids.size() != strategies.size()) throw std::invalid_argument("need one deviation grid per agent");
  BneReport rep;
  rep.epsilon = epsilon;
  rep.verdict = true;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    rep.agents.push_back(best_response_gap(setup, strategies, static_cast<int>(i), grids[i], opts));
    rep.grids.push_back(grids[i].description);
    if (!(rep.agents.back().gap <= epsilon)) rep.verdict = false;
  }
  return rep;
}

std::vector<BidVector> step_bid_grid(std::int64_t m, std::span<const double> levels,
                                     std::span<const std::int64_t> first_counts,
                                     std::span<const std::int64_t> second_counts) {
  std::vector<double> lv(levels.begin(), levels.end());
  std::sort(lv.begin(), lv.end());
  lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
  std::set<std::vector<std::pair<double, std::int64_t>>> seen;
  std::vector<BidVector> out;
  auto add = [&](std::vector<Run> runs) {
    const BidVector b = BidVector::from_runs(std::move(runs));
    std::vector<std::pair<double, std::int64_t>> key;
    for (const Run& r : b.runs()) key.emplace_back(r.value, r.count);
    if (seen.insert(key).second) out.push_back(b);
  };
  add({{0.0, m}});
  for (double b1 : lv) {
    if (b1 <= 0.0) continue;
    for (std::int64_t k1 : first_counts) {
      if (k1 < 1 || k1 > m) continue;
      add({{b1, k1}, {0.0, m - k1}});
      for (double b2 : lv) {
        if (!(b2 > 0.0 && b2 < b1)) continue;
        for (std::int64_t k2 : second_counts) {
          if (k2 < 1 || k1 + k2 > m) continue;
          add({{b1, k1}, {b2, k2}, {0.0, m - k1 - k2}});
        }
      }
    }
  }
  return out;
}

DeviationGrid make_deviation_grid(const Strategy& on_path, const std::vector<BidVector>& bids,
                                  const std::vector<std::vector<AftermarketPolicyPtr>>& aftermarket_alternatives,
                                  std::vector<std::vector<double>> type_nodes, std::string description) {
  DeviationGrid g;
  g.deviations.push_back(on_path);
  for (const auto& b : bids) g.deviations.push_back(Strategy{fixed_bid_policy(b), on_path.aftermarket});
  for (const auto& alt : aftermarket_alternatives) g.deviations.push_back(Strategy{on_path.bid, alt});
  g.type_nodes = std::move(type_nodes);
  g.description = std::move(description);
  return g;
}

DominanceVerdict weak_dominance_witnesses(const CombinedSetup& setup, const StrategyProfile& strategies, int agent,
                                          const BidVector& s, const BidVector& alternative,
                                          std::span<const WitnessCase> witnesses, const QuadratureSpec& quad) {
  DominanceVerdict v;
  v.never_worse = true;
  auto utility = [&](const WitnessCase& w, const BidVector& own) {
    if (w.bids.size() != strategies.size()) throw std::invalid_argument("witness arity mismatch");
    StrategyProfile p = strategies;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const BidVector& b = static_cast<int>(i) == agent ? own : w.bids[i];
      p[i].bid = fixed_bid_policy(b);
    }
    return expected_outcome(setup, p, quad).utilities.at(static_cast<std::size_t>(agent));
  };
  for (const WitnessCase& w : witnesses) {
    const double us = utility(w, s);
    const double ua = utility(w, alternative);
    const double diff = us - ua;
    const double scale = 1e-9 * std::max(1.0, std::abs(us));
    v.differences.push_back(diff);
    if (diff > scale) v.strictly_better_somewhere = true;
    if (diff < -scale) v.never_worse = false;
  }
  return v;
}

InterimCurves interim_curves(const CombinedSetup& setup, const StrategyProfile& strategies, int agent,
                             std::span<const double> value_grid, const QuadratureSpec& quad) {
  const MarketModel& mk = setup.market;
  if (mk.m != 1) throw std::invalid_argument("interim curves need a single-item market");
  const std::vector<std::size_t> own = own_dims(mk, agent);
  if (own.size() != 1) throw std::invalid_argument("interim curves need one value input for the agent");
  const double lo = mk.dims()[own[0]]->lower();

  // (value, utility) of the agent at own value v.
  auto point = [&](double v) {
    std::vector<double> base = mk.median_draws();
    base[own[0]] = v;
    std::vector<std::size_t> free;
    for (std::size_t d : relevant_dims(setup, strategies, agent))
      if (d != own[0]) free.push_back(d);
    if (free.size() > 2) throw std::domain_error("too many opponent dimensions");
    // With symmetric monotone bids the outcome jumps where an opponent's value
    // equals v.
    QuadratureSpec q = quad;
    q.hints.push_back(v);
    const QuadratureResult r = integrate_outcomes(setup, strategies, free, base, q);
    const std::size_t n = mk.agent_count();
    return std::pair<double, double>{r.value[2 + n + static_cast<std::size_t>(agent)],
                                     r.value[2 + static_cast<std::size_t>(agent)]};
  };
  auto alloc_at = [&](double v) {
    if (v <= 0.0) return 0.0;
    return point(v).first / v;
  };

  InterimCurves c;
  const auto [val0, u0] = point(lo);
  const double p0 = val0 - u0;
  // int_lo^v x, accumulated over the sorted grid.
  std::vector<double> sorted(value_grid.begin(), value_grid.end());
  std::sort(sorted.begin(), sorted.end());
  std::map<double, double> area_at;
  double acc = 0.0, prev = lo;
  for (double v : sorted) {
    if (v > prev) {
      acc += integrate_scalar(alloc_at, prev, v, 0.1 * quad.tol + 1e-12);
      prev = v;
    }
    area_at[v] = v <= lo ? 0.0 : acc;
  }
  for (double v : value_grid) {
    const auto [val, u] = point(v);
    const double x = v > 0.0 ? val / v : 0.0;
    const double p = val - u;
    const double area = area_at.at(v);
    const double res = p - (v * x - area + p0);
    c.values.push_back(v);
    c.allocation.push_back(x);
    c.payment.push_back(p);
    c.residual.push_back(res);
    c.max_residual = std::max(c.max_residual, std::abs(res));
  }
  return c;
}

BidPolicyPtr conditional_expectation_bid(const UnitDistribution& dist, std::size_t table_size) {
  if (table_size < 2) throw std::invalid_argument("table too small");
  const double lo = dist.lower();
  const double hi = dist.upper();
  auto xs = std::make_shared<std::vector<double>>(table_size);
  auto bs = std::make_shared<std::vector<double>>(table_size);
  double acc = 0.0;  // int_lo^x F
  for (std::size_t k = 0; k < table_size; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(table_size - 1);
    if (k > 0) {
      acc += integrate_scalar([&](double t) { return dist.cdf(t); }, (*xs)[k - 1], x, 1e-14);
    }
    const double F = dist.cdf(x);
    (*xs)[k] = x;
    (*bs)[k] = F > 0.0 ? x - acc / F : lo;
  }
  auto map = [xs, bs, lo, hi](double v) {
    if (v <= lo) return (*bs)[0];
    if (v >= hi) return bs->back();
    const double pos = (v - lo) / (hi - lo) * static_cast<double>(xs->size() - 1);
    const auto k = std::min(static_cast<std::size_t>(pos), xs->size() - 2);
    const double t = pos - static_cast<double>(k);
    return (1.0 - t) * (*bs)[k] + t * (*bs)[k + 1];
  };
  return mapped_bid_policy(map, "conditional_expectation_bid(" + dist.describe() + ")");
}

SymmetricFpaReport symmetric_fpa_check(const UnitDistribution& dist, const ResaleSpec& resale,
                                       const SymmetricFpaOptions& opts) {
  if (dist.has_atoms()) throw std::invalid_argument("symmetric first-price check needs an atomless distribution");
  const CombinedSetup setup = make_setup(symmetric_fpa_market(dist), FirstPrice{}, {resale});
  const BidPolicyPtr bid = conditional_expectation_bid(dist);
  const Strategy on_path{bid, {value_floor_seller_policy()}};
  const StrategyProfile profile{on_path, on_path};
  const double lo = dist.lower();
  const double hi = dist.upper();

  SymmetricFpaReport rep;
  for (std::size_t k = 0; k <= 10; ++k) {
    const double v = lo + (hi - lo) * static_cast<double>(k) / 10.0;
    rep.values.push_back(v);
    rep.bids.push_back(bid->bids(MarginalValuation::from_runs({{v, 1}}))[0].bid.at(0));
  }

  std::vector<BidVector> bids;
  for (std::size_t k = 0; k < opts.bid_levels; ++k) {
    const double b = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(opts.bid_levels - 1);
    bids.push_back(BidVector::from_runs({{b, 1}}));
  }
  std::vector<std::vector<double>> nodes;
  for (std::size_t k = 0; k < opts.type_nodes; ++k) {
    nodes.push_back({lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(opts.type_nodes - 1)});
  }
  const std::vector<std::vector<AftermarketPolicyPtr>> alts{{opt_out_policy()}, {buyer_policy()}};
  std::ostringstream desc;
  desc << opts.bid_levels << " constant bids on [" << lo << "," << hi << "] x {value_floor_seller}; opt_out; buyer; "
       << opts.type_nodes << " type nodes";
  std::vector<DeviationGrid> grids{make_deviation_grid(on_path, bids, alts, nodes, desc.str()),
                                   make_deviation_grid(on_path, bids, alts, nodes, desc.str())};
  GapOptions go;
  go.quadrature = opts.quadrature;
  go.workers = opts.workers;
  rep.bne = verify_bne(setup, profile, grids, opts.epsilon, go);

  std::mt19937_64 rng(opts.seed);
  for (std::size_t s = 0; s < opts.efficiency_samples; ++s) {
    const std::vector<MarginalValuation> v = sample_profile(setup.market, rng());
    const double v1 = v[0].at(0);
    const double v2 = v[1].at(0);
    ++rep.samples;
    if (std::abs(v1 - v2) <= 1e-12) {
      ++rep.ties;
      continue;
    }
    const CombinedOutcome o = play(setup, profile, v, s);
    const std::size_t winner = o.final_alloc[0] == 1 ? 0 : 1;
    if ((winner == 0) == (v1 > v2)) ++rep.efficient;
  }
  const std::size_t decided = rep.samples - rep.ties;
  rep.efficiency = decided == 0 ? 1.0 : static_cast<double>(rep.efficient) / static_cast<double>(decided);

  std::vector<double> grid;
  for (std::size_t k = 0; k <= 5; ++k) grid.push_back(lo + (hi - lo) * static_cast<double>(k) / 5.0);
  const InterimCurves c = interim_curves(setup, profile, 0, grid, opts.quadrature);
  rep.max_payment_residual = c.max_residual;
  return rep;
}

std::vector<std::vector<std::size_t>> random_inits(const std::vector<std::vector<Strategy>>& strategy_sets,
                                                   std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t c = 0; c < count; ++c) {
    std::vector<std::size_t> choice;
    for (const auto& set : strategy_sets) {
      if (set.empty()) throw std::invalid_argument("empty strategy set");
      std::uniform_int_distribution<std::size_t> d(0, set.size() - 1);
      choice.push_back(d(rng));
    }
    out.push_back(std::move(choice));
  }
  return out;
}

BrdResult best_response_dynamics(const CombinedSetup& setup, const std::vector<std::vector<Strategy>>& strategy_sets,
                                 const std::vector<std::vector<std::size_t>>& inits, const BrdOptions& opts) {
  const std::size_t n = strategy_sets.size();
  if (n != setup.market.agent_count()) throw std::invalid_argument("need one strategy set per agent");
  std::map<std::vector<std::size_t>, ExpectedOutcome> cache;
  auto profile_of = [&](const std::vector<std::size_t>& c) {
    StrategyProfile p;
    for (std::size_t i = 0; i < n; ++i) p.push_back(strategy_sets[i].at(c[i]));
    return p;
  };
  auto eval = [&](const std::vector<std::size_t>& c) -> const ExpectedOutcome& {
    auto it = cache.find(c);
    if (it != cache.end()) return it->second;
    return cache.emplace(c, expected_outcome(setup, profile_of(c), opts.quadrature)).first->second;
  };
  auto choice_text = [](const std::vector<std::size_t>& c) {
    std::string s = "(";
    for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + std::to_string(c[i]);
    return s + ")";
  };

  BrdResult res;
  std::set<std::vector<std::size_t>> accepted;
  for (std::size_t run = 0; run < inits.size(); ++run) {
    std::vector<std::size_t> choice = inits[run];
    if (choice.size() != n) throw std::invalid_argument("init arity mismatch");
    std::set<std::vector<std::size_t>> seen{choice};
    bool fixed = false;
    bool cycled = false;
    for (std::size_t round = 0; round < opts.max_rounds && !fixed && !cycled; ++round) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        double best = eval(choice).utilities[i];
        std::size_t best_k = choice[i];
        for (std::size_t k = 0; k < strategy_sets[i].size(); ++k) {
          if (k == choice[i]) continue;
          std::vector<std::size_t> c2 = choice;
          c2[i] = k;
          const double u = eval(c2).utilities[i];
          if (u > best + opts.improvement_tol) {
            best = u;
            best_k = k;
          }
        }
        if (best_k != choice[i]) {
          choice[i] = best_k;
          changed = true;
        }
      }
      if (!changed) {
        fixed = true;
      } else if (!seen.insert(choice).second) {
        cycled = true;
      }
    }
    if (cycled) {
      ++res.cycles;
      res.diagnostics.push_back("init " + std::to_string(run) + ": cycle revisiting " + choice_text(choice));
      continue;
    }
    if (!fixed) {
      ++res.non_converged;
      res.diagnostics.push_back("init " + std::to_string(run) + ": no fixed point within round limit");
      continue;
    }
    if (accepted.count(choice)) continue;
    std::vector<DeviationGrid> grids;
    for (std::size_t i = 0; i < n; ++i) {
      DeviationGrid g;
      g.deviations = strategy_sets[i];
      g.description = "strategy set of agent " + std::to_string(i) + " (ex-ante)";
      grids.push_back(std::move(g));
    }
    GapOptions go;
    go.quadrature = opts.quadrature;
    go.workers = opts.workers;
    const StrategyProfile p = profile_of(choice);
    BneReport rep = verify_bne(setup, p, grids, opts.epsilon, go);
    if (!rep.verdict) {
      res.diagnostics.push_back("init " + std::to_string(run) + ": fixed point " + choice_text(choice) +
                                " failed verification");
      continue;
    }
    accepted.insert(choice);
    res.equilibria.push_back({choice, p, eval(choice), std::move(rep)});
  }
  return res;
}

}  // namespace cmkt
