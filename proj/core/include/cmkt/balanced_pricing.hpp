#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmkt/allocation.hpp"
#include "cmkt/auctions.hpp"
#include "cmkt/combined_market.hpp"

namespace cmkt {

enum class PriceSource { kRealization, kStatic, kPerturbed };

struct ExactPrice {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

// Linear per-unit price: p(x) = unit_price * |x|.
struct PriceFunction {
  double unit_price = 0.0;
  PriceSource source = PriceSource::kRealization;
  // Set when the price is a ratio of integers (integer marginals).
  std::optional<ExactPrice> exact;
  double error = 0.0;  // integration error of a static price

  double total(std::int64_t units) const { return unit_price * static_cast<double>(units); }
  std::string describe() const;
};

// w^v = OPT(v; m) / m.
PriceFunction realization_price(std::span<const MarginalValuation> profile);

// alpha / (1 + alpha beta) * E[OPT] / m.
PriceFunction static_price(const MarketModel& market, double alpha, double beta, const Integration& integration);

struct BalancedCheck {
  bool condition1 = false;  // price of x covers (1/alpha) of the welfare it removes
  bool condition2 = false;  // price of x' is at most beta times the residual optimum
  double lhs1 = 0.0, rhs1 = 0.0;
  double lhs2 = 0.0, rhs2 = 0.0;
  bool exact = false;  // decided in integer arithmetic
};

// x and x' are allocations of disjoint unit sets: sum |x| + sum |x'| <= m.
BalancedCheck check_balanced_conditions(const PriceFunction& price, std::span<const MarginalValuation> profile,
                                        const Allocation& x, const Allocation& x_prime, double alpha, double beta);

struct BalancedReserve {
  double reserve = 0.0;
  double expected_opt = 0.0;
  double error = 0.0;
  Mechanism mechanism;
};
BalancedReserve uniform_with_balanced_reserve(const MarketModel& market, const Integration& integration);

struct AuditCandidate {
  std::string label;
  double welfare = 0.0;
  double welfare_error = 0.0;
};

struct AuditReport {
  double expected_opt = 0.0;
  double bound = 0.0;  // E[OPT]/(1+alpha beta) - m eps_price - tol
  std::vector<AuditCandidate> candidates;
  std::vector<std::size_t> violations;
  bool pass = false;
};

AuditReport welfare_guarantee_audit(double expected_opt, std::int64_t m, std::vector<AuditCandidate> candidates,
                                    double alpha, double beta, double eps_price, double tol);

struct NoisyReserve {
  double reserve = 0.0;   // psi / (2m)
  double fraction = 0.0;  // (1 - eps) / 2
  double delta = 0.0;     // failure probability of the estimate
};
NoisyReserve noisy_reserve(std::int64_t m, double psi, double eps, double delta);

}  // namespace cmkt
