#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cmkt/combined_market.hpp"

namespace cmkt {

struct WeightedAction {
  double weight = 1.0;
  CombinedAction action;
};
using ActionDistribution = std::vector<WeightedAction>;

// Deviation of `agent` given the whole valuation profile.
using SmoothGenerator = std::function<ActionDistribution(std::span<const MarginalValuation> profile, int agent)>;
// Deviation of `agent` given its own valuation only.
using SemiSmoothGenerator = std::function<ActionDistribution(const MarginalValuation& own, int agent)>;

struct SmoothnessCertificate {
  double lambda = 1.0;
  double mu = 1.0;
  SmoothGenerator deviation;
  std::string description;
};

// The generator cannot see the other agents' valuations.
struct SemiSmoothCertificate {
  double lambda = 1.0;
  double mu = 1.0;
  SemiSmoothGenerator deviation;
  std::string description;

  SmoothnessCertificate as_smooth() const;
};

// Opposing action profiles are the product of per-agent action sets.
struct CheckDomain {
  std::vector<std::vector<MarginalValuation>> profiles;
  std::vector<std::vector<CombinedAction>> actions;  // one set per agent
  std::string description;

  std::size_t action_profile_count() const;
};

struct SmoothReport {
  bool pass = false;
  double lambda = 0.0;
  double mu = 0.0;
  double min_slack = 0.0;
  std::size_t worst_profile = 0;
  std::vector<std::size_t> worst_actions;  // index into each agent's action set
  double worst_deviation_utility = 0.0;
  double worst_opt = 0.0;
  double worst_revenue = 0.0;
  std::size_t points_checked = 0;
  std::string domain;
};

// min over (v, a) of sum_i E[u_i(a'_i, a_-i)] - lambda OPT(v) + mu Rev(a), where
// Rev counts auction payments plus net aftermarket transfers.
SmoothReport check_smooth(const MarketRules& rules, const SmoothnessCertificate& cert, const CheckDomain& domain,
                          double tol, std::size_t workers = 1);
SmoothReport check_semi_smooth(const MarketRules& rules, const SemiSmoothCertificate& cert,
                               const CheckDomain& domain, double tol, std::size_t workers = 1);

// Bids y_k = v (1 - exp(-k/K)), k < K, each with weight 1/K: the quantiles of
// the density 1/(v - y) on [0, (1 - 1/e) v] taken at the left end of each cell.
std::vector<WeightedBid> fpa_deviation(double v, std::size_t cells);
// Unit j bids v_j (1 - exp(-u)) with one u shared by every unit.
std::vector<WeightedBid> discriminatory_deviation(const MarginalValuation& v, std::size_t cells);

// Highest-value agent (lowest index on ties) plays fpa_deviation, everyone
// else bids 0.
SmoothnessCertificate fpa_certificate(double lambda, double mu, std::size_t cells = 1000);
SemiSmoothCertificate discriminatory_certificate(std::size_t cells = 4000);

struct AxiomProbe {
  bool voluntary_participation = true;
  bool weak_budget_balance = true;
  std::size_t instances = 0;
  std::string failure;
};
// Random instances of each resale round: opting out must leave utility
// unchanged and transfers must sum to at least zero.
AxiomProbe probe_trade_axioms(const std::vector<ResaleSpec>& rounds, std::size_t agents, std::int64_t m,
                              std::size_t instances, std::uint64_t seed);

// Appends an opt-out policy per aftermarket round to every deviation. Throws
// std::invalid_argument when a round fails the axiom probe.
SmoothnessCertificate lift_certificate_to_combined(const SmoothnessCertificate& cert,
                                                   const std::vector<ResaleSpec>& rounds, std::size_t agents,
                                                   std::int64_t m);

double poa_bound(double lambda, double mu);

// Domains used by the audit.
CheckDomain fpa_grid_domain();
// Same valuations; every opposing bid is paired with each aftermarket policy
// vector in `policies`.
CheckDomain with_aftermarket_actions(const CheckDomain& base,
                                     const std::vector<std::vector<AftermarketPolicyPtr>>& policies);
// Correlated joint profiles with n = 3, m = 3 and bids over {0, 0.5, 1}.
CheckDomain correlated_discriminatory_domain();

struct UniformProbeRow {
  std::int64_t m = 0;
  double lambda_star = 0.0;  // largest lambda passing with mu = 1
  double opt = 0.0;
  double deviation_utility = 0.0;
  double revenue = 0.0;
};
// Truthful deviations in the uniform-price auction on a two-agent family:
// agent 1 values every unit at 1, agent 2 values one unit at 1 + delta.
std::vector<UniformProbeRow> uniform_price_probe(std::span<const std::int64_t> ms, double delta = 0.01);

}  // namespace cmkt
