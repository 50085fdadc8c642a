#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmkt/combined_market.hpp"

namespace cmkt {

struct DeviationGrid {
  std::vector<Strategy> deviations;
  // Own-type points (one draw per input dimension of the agent) at which
  // interim utilities are compared. Empty: compare ex-ante expected utility.
  // Agents without inputs always use their single (known) type.
  std::vector<std::vector<double>> type_nodes;
  std::string description;
};

struct GapOptions {
  QuadratureSpec quadrature{1e-10, {}};
  std::size_t workers = 1;
};

inline constexpr std::size_t kOnPath = std::numeric_limits<std::size_t>::max();

struct GapResult {
  int agent = 0;
  double gap = 0.0;
  std::size_t witness = kOnPath;  // index into the grid; kOnPath if nothing beats the profile
  std::string witness_description;
  std::vector<double> witness_type;
  double on_path_utility = 0.0;
  double deviation_utility = 0.0;
  double integration_error = 0.0;
  std::size_t deviations_checked = 0;
};

// Expected utility of `agent` with its own draws pinned (interim), or with
// `own_draws` empty and the agent's inputs integrated as well (ex-ante).
Estimate agent_utility(const CombinedSetup& setup, const StrategyProfile& strategies, int agent,
                       std::span<const double> own_draws, bool ex_ante, const QuadratureSpec& quad);

// max over grid deviations and type nodes of (deviation utility - on-path utility).
GapResult best_response_gap(const CombinedSetup& setup, const StrategyProfile& strategies, int agent,
                            const DeviationGrid& grid, const GapOptions& opts = {});

struct BneReport {
  double epsilon = 0.0;
  std::vector<GapResult> agents;
  std::vector<std::string> grids;
  bool verdict = false;

  double max_gap() const;
};

BneReport verify_bne(const CombinedSetup& setup, const StrategyProfile& strategies,
                     const std::vector<DeviationGrid>& grids, double epsilon, const GapOptions& opts = {});

// All bids "b1 on k1 units, then b2 on k2 units" with b1 >= b2 drawn from
// `levels` and k1, k2 from `counts` (k2 = 0 allowed), plus the zero bid.
std::vector<BidVector> step_bid_grid(std::int64_t m, std::span<const double> levels,
                                     std::span<const std::int64_t> first_counts,
                                     std::span<const std::int64_t> second_counts);

// Every bid with the on-path aftermarket policies, plus the on-path bid with
// each alternative aftermarket policy (one per round).
DeviationGrid make_deviation_grid(const Strategy& on_path, const std::vector<BidVector>& bids,
                                  const std::vector<std::vector<AftermarketPolicyPtr>>& aftermarket_alternatives,
                                  std::vector<std::vector<double>> type_nodes, std::string description);

// Lower-bound market (three agents A, B, C) -----------------------------------

struct LowerBoundClosedForm {
  double expected_z = 0.0;
  double eq_welfare = 0.0;
  double opt_welfare = 0.0;  // 5.25 + (m-3) E[z]
  double ratio = 0.0;
  double speculator_utility = 0.0;
};
LowerBoundClosedForm lower_bound_closed_form(std::int64_t m);

// Posted resale where C sells to A then B (per group for grouped markets).
CombinedSetup lower_bound_setup(std::int64_t m, std::optional<double> reserve = std::nullopt);
// Grouped market: one uniform-price auction where nobody wins more than floor(gamma m) units.
CombinedSetup grouped_setup(std::int64_t m, double gamma);

// A and B bid 2 on one unit, C bids 1 on m-2 units (r-2 per group) and posts
// the prior-optimal resale price; A and B buy iff marginal >= price.
StrategyProfile scripted_lower_bound_equilibrium(std::int64_t m);
StrategyProfile scripted_grouped_equilibrium(std::int64_t m, double gamma);
// Same strategies for an arbitrary lower-bound-shaped setup (e.g. with a reserve).
StrategyProfile scripted_profile_for(const CombinedSetup& setup);

// Candidate asks for speculator pricing.
std::vector<double> speculator_price_candidates();
AftermarketPolicyPtr speculator_policy(const CombinedSetup& setup);

// At least 10^3 deviations per agent: two-step bids over price levels around
// 0, 1, 2 and unit breakpoints {1, 2, 3, r/2, r-3, r-2, r-1, r}, plus
// alternative aftermarket policies.
std::vector<DeviationGrid> lower_bound_deviation_grids(const CombinedSetup& setup, const StrategyProfile& strategies);

// Weak-dominance witnesses ------------------------------------------------------

struct WitnessCase {
  std::string label;
  // Bid of every agent; the tested agent's entry is replaced.
  std::vector<BidVector> bids;
};

struct DominanceVerdict {
  std::vector<double> differences;  // u(s) - u(alternative) per witness
  bool strictly_better_somewhere = false;
  bool never_worse = false;

  bool holds() const { return strictly_better_somewhere && never_worse; }
};

// Compares ex-ante expected utilities of bids `s` and `alternative` for
// `agent` against each witness, with every agent keeping the aftermarket
// policies of `strategies`.
DominanceVerdict weak_dominance_witnesses(const CombinedSetup& setup, const StrategyProfile& strategies, int agent,
                                          const BidVector& s, const BidVector& alternative,
                                          std::span<const WitnessCase> witnesses, const QuadratureSpec& quad = {});

struct WitnessFamily {
  std::string label;
  int agent = 0;
  BidVector scripted;
  BidVector alternative;
  std::vector<WitnessCase> witnesses;
};
std::vector<WitnessFamily> lower_bound_witness_families(std::int64_t m);

// Single-item payoff curves ----------------------------------------------------

struct InterimCurves {
  std::vector<double> values;
  std::vector<double> allocation;  // probability of ending with the item
  std::vector<double> payment;     // auction payment plus aftermarket transfers
  std::vector<double> residual;    // p(v) - [v x(v) - int_lo^v x - p(lo)]
  double max_residual = 0.0;
};

InterimCurves interim_curves(const CombinedSetup& setup, const StrategyProfile& strategies, int agent,
                             std::span<const double> value_grid, const QuadratureSpec& quad = {});

// b(v) = E[V' | V' < v], tabulated and linearly interpolated.
BidPolicyPtr conditional_expectation_bid(const UnitDistribution& dist, std::size_t table_size = 4097);

struct SymmetricFpaOptions {
  double epsilon = 1e-6;
  std::size_t bid_levels = 1001;
  std::size_t type_nodes = 11;
  std::size_t efficiency_samples = 100'000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  QuadratureSpec quadrature{1e-10, {}};
};

struct SymmetricFpaReport {
  std::vector<double> values;
  std::vector<double> bids;
  BneReport bne;
  std::size_t samples = 0;
  std::size_t ties = 0;
  std::size_t efficient = 0;
  double efficiency = 0.0;  // efficient / (samples - ties)
  double max_payment_residual = 0.0;
};

// Two i.i.d. single-unit buyers, first-price auction, then the given resale
// round where a holder asks its own value.
SymmetricFpaReport symmetric_fpa_check(const UnitDistribution& dist, const ResaleSpec& resale,
                                       const SymmetricFpaOptions& opts = {});

// Best-response dynamics -----------------------------------------------------

struct BrdOptions {
  std::size_t max_rounds = 50;
  double improvement_tol = 1e-9;
  double epsilon = 1e-6;
  QuadratureSpec quadrature{1e-10, {}};
  std::size_t workers = 1;
};

struct BrdCandidate {
  std::vector<std::size_t> choice;
  StrategyProfile profile;
  ExpectedOutcome outcome;
  BneReport report;
};

struct BrdResult {
  std::vector<BrdCandidate> equilibria;
  std::vector<std::string> diagnostics;
  std::size_t cycles = 0;
  std::size_t non_converged = 0;
};

BrdResult best_response_dynamics(const CombinedSetup& setup, const std::vector<std::vector<Strategy>>& strategy_sets,
                                 const std::vector<std::vector<std::size_t>>& inits, const BrdOptions& opts = {});

std::vector<std::vector<std::size_t>> random_inits(const std::vector<std::vector<Strategy>>& strategy_sets,
                                                   std::size_t count, std::uint64_t seed);

}  // namespace cmkt
