#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "cmkt/allocation.hpp"
#include "cmkt/valuations.hpp"

namespace cmkt::testgen {

// Non-increasing marginals over m units, drawn from a small value lattice so
// that ties show up often.
inline MarginalValuation random_valuation(std::mt19937_64& rng, std::int64_t m, bool integral = false) {
  std::uniform_int_distribution<int> lattice(0, 8);
  std::uniform_real_distribution<double> cont(0.0, 4.0);
  std::bernoulli_distribution use_lattice(0.5);
  std::vector<double> xs(static_cast<std::size_t>(m));
  for (double& x : xs) x = (integral || use_lattice(rng)) ? static_cast<double>(lattice(rng)) : cont(rng);
  std::sort(xs.begin(), xs.end(), std::greater<>());
  return MarginalValuation::from_values(xs);
}

inline std::vector<MarginalValuation> random_profile(std::mt19937_64& rng, std::size_t n, std::int64_t m,
                                                     bool integral = false) {
  std::vector<MarginalValuation> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back(random_valuation(rng, m, integral));
  return p;
}

inline BidVector random_bid(std::mt19937_64& rng, std::int64_t m) {
  return truthful_bid(random_valuation(rng, m));
}

// Random allocation of at most `budget` units over n agents.
inline Allocation random_allocation(std::mt19937_64& rng, std::size_t n, std::int64_t budget) {
  Allocation a(n);
  std::uniform_int_distribution<std::int64_t> total(0, budget);
  std::uniform_int_distribution<std::size_t> who(0, n - 1);
  const std::int64_t t = total(rng);
  for (std::int64_t k = 0; k < t; ++k) ++a[who(rng)];
  return a;
}

}  // namespace cmkt::testgen
