#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmkt/valuations.hpp"

namespace cmkt {

struct Allocation {
  std::vector<std::int64_t> units;

  Allocation() = default;
  explicit Allocation(std::size_t n) : units(n, 0) {}
  explicit Allocation(std::vector<std::int64_t> u) : units(std::move(u)) {}

  std::size_t size() const { return units.size(); }
  std::int64_t total() const;
  std::int64_t operator[](std::size_t i) const { return units[i]; }
  std::int64_t& operator[](std::size_t i) { return units[i]; }

  bool operator==(const Allocation&) const = default;
};

// Number of units of the market the profile is defined on; all schedules must agree.
std::int64_t profile_units(std::span<const MarginalValuation> profile);

double welfare(std::span<const MarginalValuation> profile, const Allocation& alloc);

struct OptResult {
  Allocation alloc;
  double welfare = 0.0;
};

// Greedy: hand out the k largest marginals, ties to the lower agent index.
OptResult opt_allocation(std::span<const MarginalValuation> profile, std::int64_t k);

// Exhaustive search over allocations of at most k units (independent check of
// opt_allocation). Throws std::length_error beyond 10^7 allocations.
double brute_force_opt(std::span<const MarginalValuation> profile, std::int64_t k);

// OPT(v; m) / m.
double per_unit_avg_welfare(std::span<const MarginalValuation> profile);

}  // namespace cmkt
