#include "cmkt/allocation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace cmkt {

std::int64_t Allocation::total() const { return std::accumulate(units.begin(), units.end(), std::int64_t{0}); }

std::int64_t profile_units(std::span<const MarginalValuation> profile) {
  if (profile.empty()) throw std::invalid_argument("empty profile");
  const std::int64_t m = profile.front().size();
  for (const auto& v : profile) {
    if (v.size() != m) throw std::invalid_argument("valuations disagree on the number of units");
  }
  return m;
}

double welfare(std::span<const MarginalValuation> profile, const Allocation& alloc) {
  const std::int64_t m = profile_units(profile);
  if (alloc.size() != profile.size()) throw std::invalid_argument("allocation size does not match profile");
  if (alloc.total() > m) throw std::invalid_argument("allocation exceeds supply");
  double w = 0.0;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (alloc[i] < 0) throw std::invalid_argument("negative allocation");
    w += profile[i].prefix_sum(alloc[i]);
  }
  return w;
}

namespace {

struct Block {
  double value;
  std::size_t agent;
  std::int64_t count;
};

}  // namespace

OptResult opt_allocation(std::span<const MarginalValuation> profile, std::int64_t k) {
  const std::int64_t m = profile_units(profile);
  if (k < 0 || k > m) throw std::invalid_argument("k must lie in [0, m]");
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < profile.size(); ++i)
    for (const Run& r : profile[i].runs()) blocks.push_back({r.value, i, r.count});
  // Within an agent, runs are strictly decreasing, so a stable sort keeps unit order.
  std::stable_sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.agent < b.agent;
  });
  OptResult res;
  res.alloc = Allocation(profile.size());
  std::int64_t left = k;
  for (const Block& b : blocks) {
    if (left == 0) break;
    const std::int64_t take = std::min(left, b.count);
    res.alloc[b.agent] += take;
    left -= take;
  }
  res.welfare = welfare(profile, res.alloc);
  return res;
}

double brute_force_opt(std::span<const MarginalValuation> profile, std::int64_t k) {
  const std::int64_t m = profile_units(profile);
  if (k < 0 || k > m) throw std::invalid_argument("k must lie in [0, m]");
  const std::size_t n = profile.size();
  // Count allocations with sum <= k: C(k + n, n).
  double count = 1.0;
  for (std::size_t i = 1; i <= n; ++i) {
    count = count * static_cast<double>(k + static_cast<std::int64_t>(i)) / static_cast<double>(i);
    if (count > 1e7) throw std::length_error("instance too large for brute force");
  }
  std::vector<std::vector<double>> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    values[i].resize(static_cast<std::size_t>(k) + 1);
    for (std::int64_t x = 0; x <= k; ++x) values[i][static_cast<std::size_t>(x)] = profile[i].prefix_sum(x);
  }
  double best = 0.0;
  // Odometer over all x with sum <= k.
  auto rec = [&](auto&& self, std::size_t i, std::int64_t left, double acc) -> void {
    if (i == n) {
      best = std::max(best, acc);
      return;
    }
    for (std::int64_t q = 0; q <= left; ++q) self(self, i + 1, left - q, acc + values[i][static_cast<std::size_t>(q)]);
  };
  rec(rec, 0, k, 0.0);
  return best;
}

double per_unit_avg_welfare(std::span<const MarginalValuation> profile) {
  const std::int64_t m = profile_units(profile);
  if (m < 1) throw std::invalid_argument("need at least one unit");
  return opt_allocation(profile, m).welfare / static_cast<double>(m);
}

}  // namespace cmkt
