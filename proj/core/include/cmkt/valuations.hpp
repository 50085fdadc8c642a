#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace cmkt {

// A run of `count` consecutive units that share one marginal value.
struct Run {
  double value = 0.0;
  std::int64_t count = 0;

  bool operator==(const Run&) const = default;
};

// Non-increasing, non-negative per-unit schedule stored run-length encoded so
// that markets with 10^5 units stay cheap. The tag keeps valuations and bids
// from being mixed up.
template <class Tag>
class StepSchedule {
 public:
  StepSchedule() = default;

  static StepSchedule from_runs(std::vector<Run> runs) {
    StepSchedule s;
    for (const Run& r : runs) {
      if (r.count < 0 || !std::isfinite(r.value) || r.value < 0.0) {
        throw std::invalid_argument("schedule entries must be finite and non-negative");
      }
      if (r.count == 0) continue;
      if (!s.runs_.empty()) {
        Run& last = s.runs_.back();
        if (r.value > last.value) {
          throw std::invalid_argument("schedule must be non-increasing");
        }
        if (r.value == last.value) {
          last.count += r.count;
          s.size_ += r.count;
          continue;
        }
      }
      s.runs_.push_back(r);
      s.size_ += r.count;
    }
    return s;
  }

  static StepSchedule from_values(std::span<const double> values) {
    std::vector<Run> runs;
    runs.reserve(values.size());
    for (double v : values) runs.push_back({v, 1});
    return from_runs(std::move(runs));
  }

  static StepSchedule zeros(std::int64_t m) { return from_runs({{0.0, m}}); }

  // Same shape on `m` units: `head` on the first `k` units, zero after.
  static StepSchedule block(double head, std::int64_t k, std::int64_t m) {
    if (k > m) throw std::invalid_argument("block longer than schedule");
    return from_runs({{head, k}, {0.0, m - k}});
  }

  std::int64_t size() const { return size_; }
  const std::vector<Run>& runs() const { return runs_; }

  // Marginal of unit j (0-based).
  double at(std::int64_t j) const {
    if (j < 0 || j >= size_) throw std::out_of_range("unit index out of range");
    for (const Run& r : runs_) {
      if (j < r.count) return r.value;
      j -= r.count;
    }
    return 0.0;
  }

  // Sum of the first k marginals, i.e. the value of holding k units.
  double prefix_sum(std::int64_t k) const {
    if (k < 0 || k > size_) throw std::out_of_range("unit count out of range");
    double total = 0.0;
    for (const Run& r : runs_) {
      if (k <= 0) break;
      const std::int64_t take = std::min(k, r.count);
      total += r.value * static_cast<double>(take);
      k -= take;
    }
    return total;
  }

  // Number of units, starting at unit `from`, whose marginal passes `keep`.
  // Marginals are non-increasing, so the passing units form a prefix.
  template <class Pred>
  std::int64_t count_prefix_from(std::int64_t from, Pred keep) const {
    std::int64_t skipped = 0;
    std::int64_t n = 0;
    for (const Run& r : runs_) {
      std::int64_t avail = r.count;
      if (skipped < from) {
        const std::int64_t s = std::min(from - skipped, avail);
        skipped += s;
        avail -= s;
        if (avail == 0) continue;
      }
      if (!keep(r.value)) break;
      n += avail;
    }
    return n;
  }

  std::vector<double> expand() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(size_));
    for (const Run& r : runs_) out.insert(out.end(), static_cast<std::size_t>(r.count), r.value);
    return out;
  }

  bool operator==(const StepSchedule&) const = default;

 private:
  std::vector<Run> runs_;
  std::int64_t size_ = 0;
};

struct ValueTag;
struct BidTag;
using MarginalValuation = StepSchedule<ValueTag>;
using BidVector = StepSchedule<BidTag>;

// Bid each marginal value as is.
BidVector truthful_bid(const MarginalValuation& v);
MarginalValuation as_valuation(const BidVector& b);

// CDF building blocks. Pieces are listed in increasing x and carry the
// probability mass they add to the CDF.
struct AtomPiece {
  double x;
  double mass;
};
struct UniformPiece {
  double lo, hi, mass;
};
// F(x) = level - scale / (x + shift) on [lo, hi).
struct HyperbolicPiece {
  double lo, hi, level, scale, shift;
};
using CdfPiece = std::variant<AtomPiece, UniformPiece, HyperbolicPiece>;

class UnitDistribution {
 public:
  enum class Kind { kPointMass, kUniform, kEqualRevenueCapped, kPiecewise };

  static UnitDistribution point_mass(double c);
  static UnitDistribution uniform(double lo, double hi);
  // CDF (v-1)/v on [1, cap) with the remaining mass 1/cap at cap.
  static UnitDistribution equal_revenue_capped(double cap);
  static UnitDistribution piecewise(std::vector<CdfPiece> pieces);

  Kind kind() const { return kind_; }
  const std::vector<CdfPiece>& pieces() const { return pieces_; }
  std::size_t piece_count() const { return pieces_.size(); }

  double cdf(double x) const;
  // Left-continuous inverse: smallest x with F(x) >= u.
  double quantile(double u) const;
  double sample(std::mt19937_64& rng) const;

  double lower() const;
  double upper() const;
  bool has_atoms() const;

  // Cumulative mass before piece k; entry piece_count() is 1.
  double mass_before(std::size_t k) const { return cum_[k]; }
  double piece_mass(std::size_t k) const { return cum_[k + 1] - cum_[k]; }
  // Quantile restricted to piece k for u in [mass_before(k), mass_before(k+1)].
  double quantile_in_piece(std::size_t k, double u) const;
  // Support endpoints and atom locations.
  std::vector<double> landmarks() const;

  std::string describe() const;

 private:
  UnitDistribution(Kind kind, std::vector<CdfPiece> pieces);

  Kind kind_;
  std::vector<CdfPiece> pieces_;
  std::vector<double> cum_;
};

// Distribution of the bulk buyer's per-unit value z in the lower-bound market:
// F(z) = 1 - 1/(1+(2m-1)z) on [0,1), then uniform on [1, 1+1/(2m)].
UnitDistribution bulk_buyer_distribution(std::int64_t m);

// E[Z] by adaptive quadrature of the survival function.
double expected_scalar(const UnitDistribution& dist, double tol);

struct AgentValuationModel {
  std::string name;
  std::vector<UnitDistribution> inputs;
  // Maps one draw per input (in value space) to marginals over m units.
  std::function<MarginalValuation(std::span<const double> draws, std::int64_t m)> build;

  MarginalValuation generate(std::span<const double> draws, std::int64_t m) const;
};

AgentValuationModel constant_agent(std::string name, std::vector<Run> runs);
// Value v ~ dist for the first unit and nothing for further units.
AgentValuationModel single_unit_agent(std::string name, UnitDistribution dist);
// Value v ~ dist for every unit.
AgentValuationModel per_unit_agent(std::string name, UnitDistribution dist);

struct MarketModel {
  std::string name;
  std::int64_t m = 1;
  std::vector<AgentValuationModel> agents;
  // Optional partition of agents; aftermarket trade may be restricted to it.
  std::vector<std::vector<int>> groups;

  std::size_t agent_count() const { return agents.size(); }
  std::size_t dim_count() const;
  // Index of the first input dimension of agent i in the flattened draw vector.
  std::size_t dim_offset(int agent) const;
  std::vector<const UnitDistribution*> dims() const;
  std::vector<int> dim_owner() const;
  std::vector<MarginalValuation> build_profile(std::span<const double> draws) const;
  // Draw vector with every input at its median.
  std::vector<double> median_draws() const;
  int group_of(int agent) const;
  void validate() const;
};

// Three agents A, B, C over m > 3 units (A: 2 then a2 ~ U[1,1.5];
// B: 2 then z for every further unit; C: zero value).
MarketModel lower_bound_market(std::int64_t m);
// ceil(1/gamma) independent copies of the lower-bound market with m/k units each
// as far as values go; all groups share one auction over m units.
MarketModel grouped_market(std::int64_t m, double gamma);
std::int64_t group_count_for(double gamma);
// Single item; buyer 1 ~ U[0,1], buyer 2 is 0 w.p. 1-eps, otherwise z/eps with
// z equal-revenue capped at H.
MarketModel posted_fails_market(double eps, double cap);
// Two i.i.d. single-unit buyers.
MarketModel symmetric_fpa_market(const UnitDistribution& dist);
// No randomness: fixed marginals per agent.
MarketModel deterministic_market(std::int64_t m, std::vector<std::vector<Run>> agents);

std::vector<MarginalValuation> sample_profile(const MarketModel& model, std::uint64_t seed);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream);

}  // namespace cmkt
