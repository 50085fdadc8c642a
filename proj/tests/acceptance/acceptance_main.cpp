// One PASS/FAIL line per acceptance criterion. Tolerances and runtime budgets
// are fixed here; run with --criterion N to check a single one.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmkt/experiments.hpp"
#include "properties.hpp"

using namespace cmkt;

namespace {

namespace tol {
constexpr double kLowerBoundQuadRel = 1e-3;
constexpr double kLowerBoundMcRel = 1e-2;
constexpr double kRatioAt1e4 = 1.774;
constexpr double kRatioAt1e4Tol = 0.005;
constexpr double kEqWelfareCap = 6.0;
constexpr double kBneEpsilon = 1e-6;
constexpr std::size_t kMinDeviations = 1000;
constexpr double kGroupedRatioRel = 1e-3;
constexpr double kReserveTarget = 0.039148;
constexpr double kReserveTol = 1e-5;
constexpr double kReserveWelfareSlack = 1e-3;
constexpr double kPostedMedianWelfare = 1.5;
constexpr double kPostedOpt = 8.40;
constexpr double kPostedTol = 0.05;
constexpr double kPaymentResidual = 1e-6;
constexpr double kEfficiency = 0.999;
constexpr double kPoa = 1e-12;
}  // namespace tol

// Seconds; criterion 3 has no budget.
constexpr double kBudget[] = {0, 60, 120, 0, 300, 60, 300, 60, 180};

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8g", x);
  return buf;
}

bool rel_close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

void lower_bound(Check& c) {
  LowerBoundSweepOptions q;
  const auto rows = lower_bound_sweep(q);
  double worst_eq = 0.0, worst_opt = 0.0;
  std::vector<double> ln_m, ratio;
  for (const auto& r : rows) {
    worst_eq = std::max(worst_eq, std::abs(r.eq_welfare / r.closed.eq_welfare - 1));
    worst_opt = std::max(worst_opt, std::abs(r.opt_welfare / r.closed.opt_welfare - 1));
    c.require(r.eq_welfare <= tol::kEqWelfareCap, "eq welfare <= 6 at m=" + std::to_string(r.m));
    ln_m.push_back(std::log(static_cast<double>(r.m)));
    ratio.push_back(r.ratio);
    if (r.m == 10000) {
      c.require(std::abs(r.ratio - tol::kRatioAt1e4) <= tol::kRatioAt1e4Tol, "ratio at m=1e4");
      c.detail << " ratio(1e4)=" << fmt(r.ratio);
    }
  }
  c.require(worst_eq <= tol::kLowerBoundQuadRel && worst_opt <= tol::kLowerBoundQuadRel, "quadrature vs closed form");
  c.detail << " quad rel err eq=" << fmt(worst_eq) << " opt=" << fmt(worst_opt);

  LowerBoundSweepOptions mc;
  mc.integration = MonteCarloSpec{1'000'000, 1, 10};
  double worst_mc = 0.0;
  for (const auto& r : lower_bound_sweep(mc)) {
    worst_mc = std::max({worst_mc, std::abs(r.eq_welfare / r.closed.eq_welfare - 1),
                         std::abs(r.opt_welfare / r.closed.opt_welfare - 1)});
  }
  c.require(worst_mc <= tol::kLowerBoundMcRel, "Monte Carlo vs closed form");
  c.detail << " mc rel err=" << fmt(worst_mc);

  // Least-squares slope of the ratio against ln m.
  const double n = static_cast<double>(ln_m.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ln_m.size(); ++i) {
    sx += ln_m[i];
    sy += ratio[i];
    sxx += ln_m[i] * ln_m[i];
    sxy += ln_m[i] * ratio[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  bool monotone = true;
  for (std::size_t i = 1; i < ratio.size(); ++i) monotone = monotone && ratio[i] > ratio[i - 1];
  c.require(monotone && slope > 0, "ratio grows with ln m");
  c.detail << " slope/ln m=" << fmt(slope);
}

void certification(Check& c) {
  for (std::int64_t m : {10, 100, 10000}) {
    const auto setup = lower_bound_setup(m);
    const auto strategies = scripted_lower_bound_equilibrium(m);
    const auto grids = lower_bound_deviation_grids(setup, strategies);
    std::size_t fewest = grids.empty() ? 0 : grids[0].deviations.size();
    for (const auto& g : grids) fewest = std::min(fewest, g.deviations.size());
    c.require(fewest >= tol::kMinDeviations, "deviations per agent at m=" + std::to_string(m));
    const auto rep = verify_bne(setup, strategies, grids, tol::kBneEpsilon);
    c.require(rep.verdict, "verify_bne at m=" + std::to_string(m));
    const auto wit = run_lower_bound_witnesses(m);
    bool all = !wit.empty();
    for (const auto& w : wit) all = all && w.verdict.holds();
    c.require(all, "dominance witnesses at m=" + std::to_string(m));
    c.detail << " m=" << m << ": gap=" << fmt(rep.max_gap()) << " devs>=" << fewest << " witnesses=" << wit.size();
  }
}

void grouped(Check& c) {
  GroupedSweepOptions o;
  o.m = 1000;
  o.gammas = {0.1};
  o.verify = true;
  o.epsilon = tol::kBneEpsilon;
  const auto rows = grouped_sweep(o);
  c.require(rows.size() == 1 && rows[0].bne.has_value(), "one verified row");
  if (!c.ok) return;
  const auto& r = rows[0];
  c.require(r.bne->verdict, "verify_bne");
  c.require(rel_close(r.ratio, r.closed_ratio, tol::kGroupedRatioRel), "per-group closed-form ratio");
  c.detail << " agents=" << r.bne->agents.size() << " max gap=" << fmt(r.bne->max_gap()) << " ratio=" << fmt(r.ratio)
           << " closed=" << fmt(r.closed_ratio);
}

void smoothness(Check& c) {
  const auto a = smooth_audit(SmoothAuditOptions{});
  c.require(a.fpa.pass, "fpa (1-1/e,1)");
  c.require(a.lifted.pass, "lifted");
  c.require(a.double_lifted.pass, "double lifted");
  c.require(a.discriminatory.pass, "discriminatory semi-smooth");
  c.require(!a.fpa_too_strong.pass && a.fpa_too_strong.min_slack < -SmoothAuditOptions{}.tol,
            "(0.99,1) exhibits a violation");
  const double e = std::exp(1.0);
  c.require(std::abs(a.poa_fpa - e / (e - 1)) <= tol::kPoa, "poa e/(e-1)");
  c.require(std::abs(a.poa_all_pay - 2.0) <= tol::kPoa, "poa 2");
  c.detail << " slack fpa=" << fmt(a.fpa.min_slack) << " lifted=" << fmt(a.lifted.min_slack)
           << " double=" << fmt(a.double_lifted.min_slack) << " disc=" << fmt(a.discriminatory.min_slack)
           << " (0.99,1)=" << fmt(a.fpa_too_strong.min_slack) << " poa=" << fmt(a.poa_fpa) << "," << fmt(a.poa_all_pay);
}

void balancedness(Check& c) {
  std::mt19937_64 rng(20240501);
  std::uniform_int_distribution<int> nd(1, 5), md(1, 12);
  std::size_t cond_fail = 0, greedy_fail = 0, inexact = 0;
  const std::size_t runs = 1000;
  for (std::size_t t = 0; t < runs; ++t) {
    const auto n = static_cast<std::size_t>(nd(rng));
    const std::int64_t m = md(rng);
    std::uniform_int_distribution<int> val(0, 9);
    std::vector<MarginalValuation> p;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> xs(static_cast<std::size_t>(m));
      for (double& x : xs) x = val(rng);
      std::sort(xs.begin(), xs.end(), std::greater<>());
      p.push_back(MarginalValuation::from_values(xs));
    }
    Allocation x(n), xp(n);
    std::uniform_int_distribution<std::size_t> who(0, 2 * n);  // >= n: unit unused
    for (std::int64_t k = 0; k < m; ++k) {
      const std::size_t w = who(rng);
      if (w < n) ++x[w];
      else if (w < 2 * n) ++xp[w - n];
    }
    const auto chk = check_balanced_conditions(realization_price(p), p, x, xp, 1.0, 1.0);
    if (!chk.exact) ++inexact;
    if (!(chk.condition1 && chk.condition2)) ++cond_fail;
    if (opt_allocation(p, m).welfare != brute_force_opt(p, m)) ++greedy_fail;
  }
  c.require(inexact == 0, "decided exactly");
  c.require(cond_fail == 0, "both conditions");
  c.require(greedy_fail == 0, "greedy = brute force");
  c.detail << " instances=" << runs << " condition failures=" << cond_fail << " greedy mismatches=" << greedy_fail;
}

void reserve_fix(Check& c) {
  const auto r = balanced_fix(BalancedFixOptions{});
  c.require(std::abs(r.reserve - tol::kReserveTarget) <= tol::kReserveTol, "reserve 0.039148 +- 1e-5");
  c.detail << " reserve=" << fmt(r.reserve) << " E[OPT]=" << fmt(r.expected_opt);
  for (const auto& a : r.audits) {
    std::size_t found = a.brd.equilibria.size();
    c.require(found > 0, a.label + " found an equilibrium");
    double worst = HUGE_VAL;
    for (const auto& e : a.brd.equilibria) worst = std::min(worst, e.outcome.welfare);
    const double bound = 0.5 * r.expected_opt - static_cast<double>(r.m) * a.eps_price - tol::kReserveWelfareSlack;
    c.require(worst >= bound, a.label + " welfare bound");
    c.require(a.audit.pass, a.label + " audit");
    c.detail << " " << a.label << ": eq=" << found << " min welfare=" << fmt(worst) << " bound=" << fmt(bound);
  }
}

void posted(Check& c) {
  const auto rows = posted_fails(PostedFailsOptions{});
  c.require(rows.size() == 1, "one row");
  if (!c.ok) return;
  const auto& r = rows[0];
  c.require(std::abs(r.opt_welfare - tol::kPostedOpt) <= tol::kPostedTol, "E[OPT] ~ 8.40");
  c.require(!r.median.equilibria.empty(), "median-price equilibrium found");
  for (const auto& e : r.median.equilibria)
    c.require(std::abs(e.outcome.welfare - tol::kPostedMedianWelfare) <= tol::kPostedTol, "median welfare ~ 1.5");
  c.require(!r.balanced.equilibria.empty(), "balanced-price equilibrium found");
  double worst = HUGE_VAL;
  for (const auto& e : r.balanced.equilibria) worst = std::min(worst, e.outcome.welfare);
  c.require(worst >= 0.5 * r.opt_welfare, "balanced price >= E[OPT]/2");
  c.detail << " E[OPT]=" << fmt(r.opt_welfare) << " median price=" << fmt(r.median.price)
           << " welfare=" << fmt(r.median.welfare) << " balanced price=" << fmt(r.balanced.price)
           << " min welfare=" << fmt(worst);
}

void properties(Check& c) {
  const std::size_t runs = 10000;
  const std::pair<const char*, props::PropertyResult> suites[] = {
      {"budget balance", props::strong_budget_balance(runs, 101)},
      {"voluntary participation", props::voluntary_participation(runs, 102)},
      {"accounting identity", props::accounting_identity(runs, 103)},
      {"welfare monotone", props::aftermarket_welfare_monotone(runs, 104)},
  };
  for (const auto& [name, r] : suites) {
    c.require(r.ok() && r.runs == runs, std::string(name) + (r.first_failure.empty() ? "" : ": " + r.first_failure));
    c.detail << " " << name << "=" << r.runs - r.failures << "/" << r.runs;
  }
  const auto fpa = symmetric_fpa_uniform(SymmetricFpaOptions{});
  double bid_err = 0.0;
  for (std::size_t k = 0; k < fpa.values.size(); ++k) bid_err = std::max(bid_err, std::abs(fpa.bids[k] - fpa.values[k] / 2));
  c.require(bid_err <= 1e-6, "b(v) = v/2");
  c.require(fpa.max_payment_residual <= tol::kPaymentResidual, "payment identity");
  c.require(fpa.efficiency >= tol::kEfficiency, "efficiency");
  c.detail << " payment residual=" << fmt(fpa.max_payment_residual) << " efficiency=" << fmt(fpa.efficiency)
           << " (" << fpa.efficient << "/" << fpa.samples - fpa.ties << ")";
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Check&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  app.add_option("--criterion", only, "run only these criteria (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "lower-bound reproduction", lower_bound},  {2, "equilibrium certification", certification},
      {3, "gamma-bounded variant", grouped},         {4, "smoothness certification", smoothness},
      {5, "balancedness", balancedness},             {6, "balanced reserve fix", reserve_fix},
      {7, "posted-price failure and fix", posted},   {8, "property suites", properties},
  };
  const std::set<int> chosen(only.begin(), only.end());
  bool ok = true;
  for (const auto& cr : all) {
    if (!chosen.empty() && !chosen.count(cr.id)) continue;
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double budget = kBudget[cr.id];
    if (budget > 0) c.require(secs < budget, "runtime under " + fmt(budget) + " s");
    std::cout << (c.ok ? "PASS" : "FAIL") << " criterion " << cr.id << " (" << cr.name << "):" << c.detail.str()
              << " [" << fmt(secs) << " s]" << std::endl;
    ok = ok && c.ok;
  }
  return ok ? 0 : 1;
}
