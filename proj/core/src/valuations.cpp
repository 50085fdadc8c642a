#include "cmkt/valuations.hpp"

#include <cmath>
#include <sstream>

#include "cmkt/quadrature.hpp"

namespace cmkt {

BidVector truthful_bid(const MarginalValuation& v) { return BidVector::from_runs(v.runs()); }
MarginalValuation as_valuation(const BidVector& b) { return MarginalValuation::from_runs(b.runs()); }

namespace {

constexpr double kMassTol = 1e-9;

double hyperbolic_f(const HyperbolicPiece& p, double x) { return p.level - p.scale / (x + p.shift); }

double piece_lo(const CdfPiece& p) {
  return std::visit([](const auto& q) -> double {
    using T = std::decay_t<decltype(q)>;
    if constexpr (std::is_same_v<T, AtomPiece>) return q.x;
    else return q.lo;
  }, p);
}

double piece_hi(const CdfPiece& p) {
  return std::visit([](const auto& q) -> double {
    using T = std::decay_t<decltype(q)>;
    if constexpr (std::is_same_v<T, AtomPiece>) return q.x;
    else return q.hi;
  }, p);
}

double piece_total(const CdfPiece& p) {
  return std::visit([](const auto& q) -> double {
    using T = std::decay_t<decltype(q)>;
    if constexpr (std::is_same_v<T, HyperbolicPiece>) return hyperbolic_f(q, q.hi) - hyperbolic_f(q, q.lo);
    else return q.mass;
  }, p);
}

}  // namespace

UnitDistribution::UnitDistribution(Kind kind, std::vector<CdfPiece> pieces)
    : kind_(kind), pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw std::invalid_argument("distribution needs at least one piece");
  cum_.assign(pieces_.size() + 1, 0.0);
  double prev_hi = -HUGE_VAL;
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    const CdfPiece& p = pieces_[k];
    const double lo = piece_lo(p);
    const double hi = piece_hi(p);
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw std::invalid_argument("non-finite support");
    if (std::holds_alternative<AtomPiece>(p)) {
      if (!(lo >= prev_hi) || (k > 0 && lo == prev_hi && std::holds_alternative<AtomPiece>(pieces_[k - 1]))) {
        throw std::invalid_argument("atoms must be strictly increasing and not overlap pieces");
      }
    } else {
      if (!(hi > lo)) throw std::invalid_argument("continuous piece needs lo < hi");
      if (lo < prev_hi) throw std::invalid_argument("pieces overlap");
    }
    if (const auto* h = std::get_if<HyperbolicPiece>(&p)) {
      if (!(h->scale > 0.0) || !(lo + h->shift > 0.0)) throw std::invalid_argument("bad hyperbolic piece");
      if (std::abs(hyperbolic_f(*h, lo) - cum_[k]) > kMassTol) {
        throw std::invalid_argument("hyperbolic piece does not continue the CDF");
      }
    }
    const double mass = piece_total(p);
    if (!(mass > 0.0)) throw std::invalid_argument("pieces need positive mass");
    cum_[k + 1] = cum_[k] + mass;
    prev_hi = hi;
  }
  if (std::abs(cum_.back() - 1.0) > kMassTol) throw std::invalid_argument("total mass must be 1");
  cum_.back() = 1.0;
}

UnitDistribution UnitDistribution::point_mass(double c) {
  if (!std::isfinite(c)) throw std::invalid_argument("point mass must be finite");
  return UnitDistribution(Kind::kPointMass, {AtomPiece{c, 1.0}});
}

UnitDistribution UnitDistribution::uniform(double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("uniform needs lo < hi");
  return UnitDistribution(Kind::kUniform, {UniformPiece{lo, hi, 1.0}});
}

UnitDistribution UnitDistribution::equal_revenue_capped(double cap) {
  if (!(cap > 1.0) || !std::isfinite(cap)) throw std::invalid_argument("equal-revenue cap must exceed 1");
  return UnitDistribution(Kind::kEqualRevenueCapped,
                          {HyperbolicPiece{1.0, cap, 1.0, 1.0, 0.0}, AtomPiece{cap, 1.0 / cap}});
}

UnitDistribution UnitDistribution::piecewise(std::vector<CdfPiece> pieces) {
  return UnitDistribution(Kind::kPiecewise, std::move(pieces));
}

double UnitDistribution::cdf(double x) const {
  double total = 0.0;
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    const CdfPiece& p = pieces_[k];
    if (const auto* a = std::get_if<AtomPiece>(&p)) {
      if (x >= a->x) total = cum_[k + 1];
      else break;
    } else if (const auto* u = std::get_if<UniformPiece>(&p)) {
      if (x >= u->hi) total = cum_[k + 1];
      else if (x > u->lo) {
        total = cum_[k] + u->mass * (x - u->lo) / (u->hi - u->lo);
        break;
      } else break;
    } else {
      const auto& h = std::get<HyperbolicPiece>(p);
      if (x >= h.hi) total = cum_[k + 1];
      else if (x > h.lo) {
        total = hyperbolic_f(h, x);
        break;
      } else break;
    }
  }
  return std::clamp(total, 0.0, 1.0);
}

double UnitDistribution::quantile_in_piece(std::size_t k, double u) const {
  const CdfPiece& p = pieces_.at(k);
  if (const auto* a = std::get_if<AtomPiece>(&p)) return a->x;
  if (const auto* un = std::get_if<UniformPiece>(&p)) {
    const double t = std::clamp((u - cum_[k]) / un->mass, 0.0, 1.0);
    return un->lo + t * (un->hi - un->lo);
  }
  const auto& h = std::get<HyperbolicPiece>(p);
  const double x = h.scale / (h.level - u) - h.shift;
  return std::clamp(x, h.lo, h.hi);
}

double UnitDistribution::quantile(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("quantile level outside [0,1]");
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    if (u <= cum_[k + 1] || k + 1 == pieces_.size()) return quantile_in_piece(k, std::max(u, cum_[k]));
  }
  return upper();
}

double UnitDistribution::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  // u in [cum_k, cum_{k+1}) belongs to piece k, so u >= 1 - top atom maps to the atom.
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    if (u < cum_[k + 1]) return quantile_in_piece(k, u);
  }
  return upper();
}

double UnitDistribution::lower() const { return piece_lo(pieces_.front()); }
double UnitDistribution::upper() const { return piece_hi(pieces_.back()); }

bool UnitDistribution::has_atoms() const {
  return std::any_of(pieces_.begin(), pieces_.end(),
                     [](const CdfPiece& p) { return std::holds_alternative<AtomPiece>(p); });
}

std::vector<double> UnitDistribution::landmarks() const {
  std::vector<double> out;
  for (const CdfPiece& p : pieces_) {
    out.push_back(piece_lo(p));
    out.push_back(piece_hi(p));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string UnitDistribution::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::kPointMass: os << "point_mass(" << lower() << ")"; break;
    case Kind::kUniform: os << "uniform(" << lower() << "," << upper() << ")"; break;
    case Kind::kEqualRevenueCapped: os << "equal_revenue_capped(" << upper() << ")"; break;
    case Kind::kPiecewise: {
      os << "piecewise[";
      for (std::size_t k = 0; k < pieces_.size(); ++k) {
        if (k) os << ";";
        os << piece_lo(pieces_[k]) << ".." << piece_hi(pieces_[k]) << ":" << piece_mass(k);
      }
      os << "]";
      break;
    }
  }
  return os.str();
}

UnitDistribution bulk_buyer_distribution(std::int64_t m) {
  if (m < 1) throw std::invalid_argument("m must be positive");
  const double md = static_cast<double>(m);
  const double c = 1.0 / (2.0 * md - 1.0);
  return UnitDistribution::piecewise({HyperbolicPiece{0.0, 1.0, 1.0, c, c},
                                      UniformPiece{1.0, 1.0 + 1.0 / (2.0 * md), 1.0 / (2.0 * md)}});
}

double expected_scalar(const UnitDistribution& dist, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const double lo = dist.lower();
  const double hi = dist.upper();
  if (hi == lo) return lo;
  // E[Z] = lo + int_lo^hi (1 - F). Split at every landmark so each piece is smooth.
  const std::vector<double> marks = dist.landmarks();
  const VectorIntegrand1D g = [&](double x, std::span<double> out) { out[0] = 1.0 - dist.cdf(x); };
  QuadratureOptions opts;
  opts.abs_tol = tol;
  const QuadratureResult r = integrate_intervals(g, 1, marks, opts);
  return lo + r.value[0];
}

MarginalValuation AgentValuationModel::generate(std::span<const double> draws, std::int64_t m) const {
  if (draws.size() != inputs.size()) throw std::invalid_argument("draw count does not match model inputs");
  MarginalValuation v = build(draws, m);
  if (v.size() != m) throw std::logic_error("valuation model produced the wrong number of units");
  return v;
}

AgentValuationModel constant_agent(std::string name, std::vector<Run> runs) {
  AgentValuationModel a;
  a.name = std::move(name);
  a.build = [runs](std::span<const double>, std::int64_t m) {
    std::vector<Run> r = runs;
    std::int64_t used = 0;
    for (const Run& x : r) used += x.count;
    if (used > m) throw std::invalid_argument("constant agent longer than market");
    r.push_back({0.0, m - used});
    return MarginalValuation::from_runs(std::move(r));
  };
  return a;
}

AgentValuationModel single_unit_agent(std::string name, UnitDistribution dist) {
  AgentValuationModel a;
  a.name = std::move(name);
  a.inputs.push_back(std::move(dist));
  a.build = [](std::span<const double> d, std::int64_t m) {
    return MarginalValuation::from_runs({{d[0], 1}, {0.0, m - 1}});
  };
  return a;
}

AgentValuationModel per_unit_agent(std::string name, UnitDistribution dist) {
  AgentValuationModel a;
  a.name = std::move(name);
  a.inputs.push_back(std::move(dist));
  a.build = [](std::span<const double> d, std::int64_t m) { return MarginalValuation::from_runs({{d[0], m}}); };
  return a;
}

std::size_t MarketModel::dim_count() const {
  std::size_t n = 0;
  for (const auto& a : agents) n += a.inputs.size();
  return n;
}

std::size_t MarketModel::dim_offset(int agent) const {
  std::size_t n = 0;
  for (int i = 0; i < agent; ++i) n += agents.at(static_cast<std::size_t>(i)).inputs.size();
  return n;
}

std::vector<const UnitDistribution*> MarketModel::dims() const {
  std::vector<const UnitDistribution*> out;
  for (const auto& a : agents)
    for (const auto& d : a.inputs) out.push_back(&d);
  return out;
}

std::vector<int> MarketModel::dim_owner() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < agents.size(); ++i)
    for (std::size_t j = 0; j < agents[i].inputs.size(); ++j) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<MarginalValuation> MarketModel::build_profile(std::span<const double> draws) const {
  if (draws.size() != dim_count()) throw std::invalid_argument("draw vector has the wrong length");
  std::vector<MarginalValuation> out;
  out.reserve(agents.size());
  std::size_t off = 0;
  for (const auto& a : agents) {
    out.push_back(a.generate(draws.subspan(off, a.inputs.size()), m));
    off += a.inputs.size();
  }
  return out;
}

std::vector<double> MarketModel::median_draws() const {
  std::vector<double> out;
  for (const auto* d : dims()) out.push_back(d->quantile(0.5));
  return out;
}

int MarketModel::group_of(int agent) const {
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (int a : groups[g])
      if (a == agent) return static_cast<int>(g);
  return -1;
}

void MarketModel::validate() const {
  if (m < 1) throw std::invalid_argument("market needs at least one unit");
  if (agents.empty()) throw std::invalid_argument("market needs agents");
  if (!groups.empty()) {
    std::vector<int> seen(agents.size(), 0);
    for (const auto& g : groups)
      for (int a : g) {
        if (a < 0 || static_cast<std::size_t>(a) >= agents.size()) throw std::invalid_argument("group member out of range");
        ++seen[static_cast<std::size_t>(a)];
      }
    for (int s : seen)
      if (s != 1) throw std::invalid_argument("groups must partition the agents");
  }
}

namespace {

void add_lower_bound_group(MarketModel& mk, std::int64_t group_units, const std::string& suffix) {
  AgentValuationModel a;
  a.name = "A" + suffix;
  a.inputs.push_back(UnitDistribution::uniform(1.0, 1.5));
  a.build = [](std::span<const double> d, std::int64_t m) {
    return MarginalValuation::from_runs({{2.0, 1}, {d[0], 1}, {0.0, m - 2}});
  };
  AgentValuationModel b;
  b.name = "B" + suffix;
  b.inputs.push_back(bulk_buyer_distribution(group_units));
  b.build = [](std::span<const double> d, std::int64_t m) {
    return MarginalValuation::from_runs({{2.0, 1}, {d[0], m - 1}});
  };
  const int base = static_cast<int>(mk.agents.size());
  mk.agents.push_back(std::move(a));
  mk.agents.push_back(std::move(b));
  mk.agents.push_back(constant_agent("C" + suffix, {}));
  mk.groups.push_back({base, base + 1, base + 2});
}

}  // namespace

MarketModel lower_bound_market(std::int64_t m) {
  if (m <= 3) throw std::invalid_argument("lower-bound market needs m > 3");
  MarketModel mk;
  mk.name = "lower_bound(m=" + std::to_string(m) + ")";
  mk.m = m;
  add_lower_bound_group(mk, m, "");
  mk.groups.clear();
  return mk;
}

std::int64_t group_count_for(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0,1]");
  return static_cast<std::int64_t>(std::ceil(1.0 / gamma - 1e-9));
}

MarketModel grouped_market(std::int64_t m, double gamma) {
  const std::int64_t k = group_count_for(gamma);
  if (m % k != 0) throw std::invalid_argument("m must be divisible by ceil(1/gamma)");
  const std::int64_t r = m / k;
  if (r <= 3) throw std::invalid_argument("each group needs more than 3 units");
  MarketModel mk;
  std::ostringstream os;
  os << "grouped(m=" << m << ",gamma=" << gamma << ")";
  mk.name = os.str();
  mk.m = m;
  for (std::int64_t g = 0; g < k; ++g) add_lower_bound_group(mk, r, std::to_string(g + 1));
  return mk;
}

MarketModel posted_fails_market(double eps, double cap) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  if (!(cap > 1.0)) throw std::invalid_argument("cap must exceed 1");
  MarketModel mk;
  std::ostringstream os;
  os << "posted_fails(eps=" << eps << ",H=" << cap << ")";
  mk.name = os.str();
  mk.m = 1;
  mk.agents.push_back(single_unit_agent("buyer1", UnitDistribution::uniform(0.0, 1.0)));
  // Zero w.p. 1-eps; otherwise z/eps where P[z <= t] = 1 - 1/t on [1,H), atom 1/H at H.
  // On [1/eps, H/eps): F(x) = 1 - eps * (1/(eps x)) = 1 - 1/x.
  UnitDistribution v2 = UnitDistribution::piecewise(
      {AtomPiece{0.0, 1.0 - eps}, HyperbolicPiece{1.0 / eps, cap / eps, 1.0, 1.0, 0.0},
       AtomPiece{cap / eps, eps / cap}});
  mk.agents.push_back(single_unit_agent("buyer2", std::move(v2)));
  return mk;
}

MarketModel symmetric_fpa_market(const UnitDistribution& dist) {
  MarketModel mk;
  mk.name = "symmetric_fpa(" + dist.describe() + ")";
  mk.m = 1;
  mk.agents.push_back(single_unit_agent("buyer1", dist));
  mk.agents.push_back(single_unit_agent("buyer2", dist));
  return mk;
}

MarketModel deterministic_market(std::int64_t m, std::vector<std::vector<Run>> agents) {
  MarketModel mk;
  mk.name = "deterministic(m=" + std::to_string(m) + ")";
  mk.m = m;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    mk.agents.push_back(constant_agent("agent" + std::to_string(i + 1), agents[i]));
  }
  return mk;
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
  // splitmix64 finalizer over (root, stream)
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<MarginalValuation> sample_profile(const MarketModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> draws;
  for (const auto* d : model.dims()) draws.push_back(d->sample(rng));
  return model.build_profile(draws);
}

}  // namespace cmkt
