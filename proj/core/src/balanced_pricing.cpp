#include "cmkt/balanced_pricing.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cmkt {

namespace {

__extension__ using i128 = __int128;

bool integral(double x) { return std::isfinite(x) && std::floor(x) == x && std::abs(x) < 1e15; }

std::optional<std::int64_t> exact_opt(std::span<const MarginalValuation> profile, std::int64_t k) {
  for (const auto& v : profile)
    for (const Run& r : v.runs())
      if (!integral(r.value)) return std::nullopt;
  // Integer marginals: the double sum is exact below 2^53.
  return static_cast<std::int64_t>(opt_allocation(profile, k).welfare);
}

}  // namespace

std::string PriceFunction::describe() const {
  std::ostringstream os;
  os.precision(17);
  const char* src = source == PriceSource::kRealization ? "realization" : source == PriceSource::kStatic ? "static"
                                                                                                          : "perturbed";
  os << src << "(" << unit_price;
  if (exact) os << "=" << exact->num << "/" << exact->den;
  os << ")";
  return os.str();
}

PriceFunction realization_price(std::span<const MarginalValuation> profile) {
  const std::int64_t m = profile_units(profile);
  if (m < 1) throw std::invalid_argument("need m >= 1");
  PriceFunction p;
  p.source = PriceSource::kRealization;
  p.unit_price = opt_allocation(profile, m).welfare / static_cast<double>(m);
  if (const auto o = exact_opt(profile, m)) {
    const std::int64_t g = std::gcd(*o, m);
    p.exact = ExactPrice{*o / (g ? g : 1), m / (g ? g : 1)};
  }
  return p;
}

PriceFunction static_price(const MarketModel& market, double alpha, double beta, const Integration& integration) {
  if (!(alpha >= 1.0 && beta >= 1.0)) throw std::invalid_argument("need alpha, beta >= 1");
  const Estimate e = expected_opt(market, integration);
  const double scale = alpha / (1.0 + alpha * beta) / static_cast<double>(market.m);
  PriceFunction p;
  p.source = PriceSource::kStatic;
  p.unit_price = scale * e.value;
  p.error = scale * e.error;
  return p;
}

BalancedCheck check_balanced_conditions(const PriceFunction& price, std::span<const MarginalValuation> profile,
                                        const Allocation& x, const Allocation& x_prime, double alpha, double beta) {
  const std::int64_t m = profile_units(profile);
  if (x.size() != profile.size() || x_prime.size() != profile.size())
    throw std::invalid_argument("allocation arity does not match profile");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < 0 || x_prime[i] < 0) throw std::invalid_argument("negative allocation");
  const std::int64_t used = x.total();
  const std::int64_t used2 = x_prime.total();
  if (used + used2 > m) throw std::invalid_argument("x and x' are not jointly feasible");

  BalancedCheck c;
  const double opt = opt_allocation(profile, m).welfare;
  const double rest = opt_allocation(profile, m - used).welfare;
  c.lhs1 = price.total(used);
  c.rhs1 = (opt - rest) / alpha;
  c.lhs2 = price.total(used2);
  c.rhs2 = beta * rest;

  const auto eo = exact_opt(profile, m);
  const auto er = exact_opt(profile, m - used);
  if (price.exact && eo && er && integral(alpha) && integral(beta)) {
    // p = num/den: alpha * num * |x| >= den * (OPT - rest) and num * |x'| <= beta * den * rest.
    const auto a = static_cast<std::int64_t>(alpha);
    const auto b = static_cast<std::int64_t>(beta);
    const i128 num = price.exact->num;
    const i128 den = price.exact->den;
    c.condition1 = static_cast<i128>(a) * num * used >= den * (*eo - *er);
    c.condition2 = num * used2 <= static_cast<i128>(b) * den * *er;
    c.exact = true;
  } else {
    const double tol = 1e-12 * std::max(1.0, opt);
    c.condition1 = c.lhs1 >= c.rhs1 - tol;
    c.condition2 = c.lhs2 <= c.rhs2 + tol;
  }
  return c;
}

BalancedReserve uniform_with_balanced_reserve(const MarketModel& market, const Integration& integration) {
  const Estimate e = expected_opt(market, integration);
  BalancedReserve r;
  r.expected_opt = e.value;
  r.reserve = e.value / (2.0 * static_cast<double>(market.m));
  r.error = e.error / (2.0 * static_cast<double>(market.m));
  r.mechanism = UniformPrice{r.reserve, std::nullopt};
  return r;
}

AuditReport welfare_guarantee_audit(double expected_opt, std::int64_t m, std::vector<AuditCandidate> candidates,
                                    double alpha, double beta, double eps_price, double tol) {
  if (!(alpha >= 1.0 && beta >= 1.0)) throw std::invalid_argument("need alpha, beta >= 1");
  if (!(eps_price >= 0.0)) throw std::invalid_argument("eps_price must be non-negative");
  AuditReport rep;
  rep.expected_opt = expected_opt;
  rep.bound = expected_opt / (1.0 + alpha * beta) - static_cast<double>(m) * eps_price - tol;
  rep.candidates = std::move(candidates);
  for (std::size_t i = 0; i < rep.candidates.size(); ++i)
    if (rep.candidates[i].welfare < rep.bound) rep.violations.push_back(i);
  rep.pass = rep.violations.empty();
  return rep;
}

NoisyReserve noisy_reserve(std::int64_t m, double psi, double eps, double delta) {
  if (!(psi >= 0.0)) throw std::invalid_argument("psi must be non-negative");
  if (m < 1) throw std::invalid_argument("need m >= 1");
  if (!(eps >= 0.0 && eps < 1.0) || !(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("eps, delta in [0,1)");
  return {psi / (2.0 * static_cast<double>(m)), (1.0 - eps) / 2.0, delta};
}

}  // namespace cmkt
