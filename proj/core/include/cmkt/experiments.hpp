#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmkt/balanced_pricing.hpp"
#include "cmkt/equilibrium.hpp"
#include "cmkt/smoothness.hpp"

namespace cmkt {

// Lower-bound market ------------------------------------------------------------

struct LowerBoundRow {
  std::int64_t m = 0;
  double eq_welfare = 0.0;
  double eq_error = 0.0;
  double opt_welfare = 0.0;
  double opt_error = 0.0;
  double ratio = 0.0;
  LowerBoundClosedForm closed;
  double speculator_utility = 0.0;
  std::optional<BneReport> bne;
  std::string method;
};

struct LowerBoundSweepOptions {
  std::vector<std::int64_t> ms{1000, 10000, 100000};
  Integration integration = QuadratureSpec{1e-10, {}};
  bool verify = false;
  double epsilon = 1e-6;
  std::size_t workers = 1;
};

std::vector<LowerBoundRow> lower_bound_sweep(const LowerBoundSweepOptions& opts);

struct GroupedRow {
  std::int64_t m = 0;
  double gamma = 0.0;
  std::int64_t groups = 0;
  std::int64_t units_per_group = 0;
  std::int64_t max_speculator_units = 0;  // on path, per speculator
  double eq_welfare = 0.0;                // whole market
  double group_eq_welfare = 0.0;
  double group_opt_welfare = 0.0;         // E[OPT] of one group's units
  double ratio = 0.0;
  double closed_ratio = 0.0;              // lower-bound closed form with m = units per group
  std::optional<BneReport> bne;
};

struct GroupedSweepOptions {
  std::int64_t m = 1000;
  std::vector<double> gammas{0.1};
  double tol = 1e-10;
  bool verify = false;
  double epsilon = 1e-6;
  std::size_t workers = 1;
};

std::vector<GroupedRow> grouped_sweep(const GroupedSweepOptions& opts);

struct WitnessResult {
  std::string label;
  int agent = 0;
  DominanceVerdict verdict;
};
std::vector<WitnessResult> run_lower_bound_witnesses(std::int64_t m, double tol = 1e-10);

// Posted prices -------------------------------------------------------------------

struct PostedPriceEquilibrium {
  double price = 0.0;
  std::vector<BrdCandidate> equilibria;
  std::vector<std::string> diagnostics;
  double welfare = 0.0;  // of the first equilibrium found
};

struct PostedFailsRow {
  double eps = 0.0;
  double cap = 0.0;
  double opt_welfare = 0.0;
  double opt_error = 0.0;
  PostedPriceEquilibrium median;
  PostedPriceEquilibrium balanced;
};

struct PostedFailsOptions {
  double eps = 0.01;
  std::vector<double> caps{1000.0};
  double tol = 1e-9;
  std::size_t workers = 1;
};

// Buyer 1 may bid truthfully, always buy, or never buy; buyer 2 bids
// truthfully. Both post prior-optimal resale asks when holding the item.
PostedPriceEquilibrium posted_price_equilibrium(const MarketModel& market, double price, double tol,
                                                std::size_t workers);
std::vector<PostedFailsRow> posted_fails(const PostedFailsOptions& opts);

// Balanced reserve on the lower-bound market ------------------------------------

struct ReserveAudit {
  std::string label;
  double reserve = 0.0;
  double eps_price = 0.0;
  BrdResult brd;
  AuditReport audit;
};

struct BalancedFixResult {
  std::int64_t m = 0;
  double expected_opt = 0.0;
  double reserve = 0.0;
  double reserve_error = 0.0;
  std::vector<ReserveAudit> audits;  // exact, estimate 10% low, estimate 10% high
};

struct BalancedFixOptions {
  std::int64_t m = 100;
  std::size_t inits = 20;
  std::uint64_t seed = 1;
  double tol = 1e-10;
  double audit_tol = 1e-3;
  std::size_t workers = 1;
};

// Strategy sets for best-response dynamics under a reserve.
std::vector<std::vector<Strategy>> reserve_strategy_sets(const CombinedSetup& setup);
BalancedFixResult balanced_fix(const BalancedFixOptions& opts);

// Smoothness --------------------------------------------------------------------

struct SmoothAuditResult {
  SmoothReport fpa;
  SmoothReport fpa_too_strong;  // (0.99, 1)
  SmoothReport lifted;
  SmoothReport double_lifted;
  SmoothReport discriminatory;
  double poa_fpa = 0.0;
  double poa_all_pay = 0.0;
};

struct SmoothAuditOptions {
  double tol = 1e-3;
  std::size_t fpa_cells = 1000;
  std::size_t discriminatory_cells = 4000;
  std::size_t workers = 1;
};

SmoothAuditResult smooth_audit(const SmoothAuditOptions& opts);

// Symmetric first-price auction with resale --------------------------------------

SymmetricFpaReport symmetric_fpa_uniform(const SymmetricFpaOptions& opts);

}  // namespace cmkt
