#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cmkt/experiments.hpp"
#include "cmkt/report.hpp"
#include "config.hpp"

using namespace cmkt;
using cmkt::cli::Config;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitViolation = 3;

struct Outcome {
  Table table;
  std::vector<std::string> notes;
  nlohmann::json violations = nlohmann::json::array();
};

double tol_or(const Config& c, double fallback) {
  const std::string t = c.text("run.tol");
  return t.empty() ? fallback : c.real("run.tol");
}

std::size_t workers(const Config& c) { return static_cast<std::size_t>(std::max<std::int64_t>(1, c.integer("run.workers"))); }

std::string join(const std::vector<std::int64_t>& xs) {
  std::string s;
  for (auto x : xs) s += (s.empty() ? "" : " ") + std::to_string(x);
  return s;
}

Outcome lower_bound_cmd(const Config& c) {
  LowerBoundSweepOptions o;
  o.ms = c.integers("lower_bound.ms");
  const double tol = tol_or(c, 1e-10);
  const std::string integ = c.text("lower_bound.integration");
  if (integ == "quadrature") {
    o.integration = QuadratureSpec{tol, {}};
  } else if (integ == "monte_carlo") {
    o.integration = MonteCarloSpec{static_cast<std::size_t>(c.integer("lower_bound.samples")), c.u64("run.seed"),
                                   static_cast<std::size_t>(c.integer("lower_bound.replicates"))};
  } else {
    throw std::invalid_argument("lower_bound.integration must be quadrature or monte_carlo");
  }
  o.verify = c.boolean("lower_bound.verify");
  o.epsilon = c.real("lower_bound.epsilon");
  o.workers = workers(c);
  const auto rows = lower_bound_sweep(o);
  Outcome out{lower_bound_table(rows), {"ms: " + join(o.ms), "integration: " + integ}, {}};
  if (o.verify) out.notes.push_back("deviation grid: two-step bids over 17 price levels, unit breakpoints, resale alternatives");
  for (const auto& r : rows) {
    if (r.eq_welfare > 6.0) out.violations.push_back({{"m", r.m}, {"check", "eq_welfare<=6"}, {"value", r.eq_welfare}});
    if (r.bne && !r.bne->verdict)
      out.violations.push_back({{"m", r.m}, {"check", "verify_bne"}, {"max_gap", r.bne->max_gap()}});
  }
  return out;
}

Outcome grouped_cmd(const Config& c) {
  GroupedSweepOptions o;
  o.m = c.integer("grouped.m");
  o.gammas = c.reals("grouped.gammas");
  o.tol = tol_or(c, 1e-10);
  o.verify = c.boolean("grouped.verify");
  o.epsilon = c.real("grouped.epsilon");
  o.workers = workers(c);
  const auto rows = grouped_sweep(o);
  Outcome out{grouped_table(rows), {"per-bidder unit cap: floor(gamma m)", "ratio: per-group E[OPT] / per-group welfare"}, {}};
  for (const auto& r : rows) {
    if (r.bne && !r.bne->verdict)
      out.violations.push_back({{"gamma", r.gamma}, {"check", "verify_bne"}, {"max_gap", r.bne->max_gap()}});
  }
  return out;
}

Outcome posted_cmd(const Config& c) {
  PostedFailsOptions o;
  o.eps = c.real("posted_fails.eps");
  o.caps = c.reals("posted_fails.caps");
  o.tol = tol_or(c, 1e-9);
  o.workers = workers(c);
  const auto rows = posted_fails(o);
  Outcome out{posted_fails_table(rows),
              {"strategies: buyer 1 in {truthful, always buy, never}, buyer 2 truthful; prior-optimal resale asks"},
              {}};
  for (const auto& r : rows) {
    if (r.balanced.equilibria.empty())
      out.violations.push_back({{"H", r.cap}, {"check", "balanced equilibrium found"}});
    for (const auto& e : r.balanced.equilibria)
      if (e.outcome.welfare < 0.5 * r.opt_welfare - o.tol)
        out.violations.push_back({{"H", r.cap}, {"check", "welfare>=E[OPT]/2"}, {"welfare", e.outcome.welfare}});
  }
  return out;
}

Outcome balanced_cmd(const Config& c) {
  BalancedFixOptions o;
  o.m = c.integer("balanced_fix.m");
  o.inits = static_cast<std::size_t>(c.integer("balanced_fix.inits"));
  o.seed = c.u64("run.seed");
  o.tol = tol_or(c, 1e-10);
  o.audit_tol = c.real("balanced_fix.audit_tol");
  o.workers = workers(c);
  const auto res = balanced_fix(o);
  Outcome out{balanced_fix_table(res), {}, {}};
  out.notes.push_back("reserve=" + format_double(res.reserve) + " expected_opt=" + format_double(res.expected_opt));
  out.notes.push_back("best-response dynamics from " + std::to_string(o.inits) + " random starts");
  for (const auto& a : res.audits) {
    for (std::size_t v : a.audit.violations) {
      const auto& cand = a.audit.candidates[v];
      out.violations.push_back({{"variant", a.label}, {"check", "welfare>=bound"}, {"candidate", cand.label},
                                {"welfare", cand.welfare}, {"bound", a.audit.bound}});
    }
  }
  return out;
}

Outcome smooth_cmd(const Config& c) {
  SmoothAuditOptions o;
  o.tol = tol_or(c, 1e-3);
  o.fpa_cells = static_cast<std::size_t>(c.integer("smooth_audit.fpa_cells"));
  o.discriminatory_cells = static_cast<std::size_t>(c.integer("smooth_audit.discriminatory_cells"));
  o.workers = workers(c);
  const auto res = smooth_audit(o);
  Outcome out{smooth_audit_table(res), {"slack tolerance=" + format_double(o.tol)}, {}};
  const auto& t = out.table;
  for (const auto& row : t.rows)
    if (std::get<bool>(row[3]) != std::get<bool>(row[4]))
      out.violations.push_back({{"check", std::get<std::string>(row[0])}, {"min_slack", std::get<double>(row[5])}});
  return out;
}

Outcome verify_cmd(const Config& c) {
  const std::int64_t m = c.integer("verify_eq.m");
  const double tol = tol_or(c, 1e-10);
  const CombinedSetup setup = lower_bound_setup(m);
  const StrategyProfile prof = scripted_profile_for(setup);
  GapOptions g;
  g.quadrature = QuadratureSpec{tol, {}};
  g.workers = workers(c);
  const BneReport bne = verify_bne(setup, prof, lower_bound_deviation_grids(setup, prof), c.real("verify_eq.epsilon"), g);
  std::vector<WitnessResult> wit;
  if (c.boolean("verify_eq.witnesses")) wit = run_lower_bound_witnesses(m, tol);
  Outcome out{verify_eq_table(bne, wit), bne.grids, {}};
  if (!bne.verdict) out.violations.push_back({{"check", "verify_bne"}, {"max_gap", bne.max_gap()}});
  for (const auto& w : wit)
    if (!w.verdict.holds()) out.violations.push_back({{"check", "weak_dominance"}, {"family", w.label}});
  return out;
}

Outcome symmetric_cmd(const Config& c) {
  SymmetricFpaOptions o;
  o.bid_levels = static_cast<std::size_t>(c.integer("symmetric_fpa.bid_levels"));
  o.type_nodes = static_cast<std::size_t>(c.integer("symmetric_fpa.type_nodes"));
  o.efficiency_samples = static_cast<std::size_t>(c.integer("symmetric_fpa.samples"));
  o.epsilon = c.real("symmetric_fpa.epsilon");
  o.seed = c.u64("run.seed");
  o.workers = workers(c);
  o.quadrature = QuadratureSpec{tol_or(c, 1e-10), {}};
  const auto rep = symmetric_fpa_uniform(o);
  Outcome out{symmetric_fpa_table(rep), {"values U[0,1], bid E[V'|V'<v], resale ask = own value"}, {}};
  if (!rep.bne.verdict) out.violations.push_back({{"check", "verify_bne"}, {"max_gap", rep.bne.max_gap()}});
  if (rep.efficiency < 0.999) out.violations.push_back({{"check", "efficiency>=0.999"}, {"value", rep.efficiency}});
  if (rep.max_payment_residual > 1e-6)
    out.violations.push_back({{"check", "payment_residual<=1e-6"}, {"value", rep.max_payment_residual}});
  return out;
}

Outcome uniform_cmd(const Config& c) {
  const auto ms = c.integers("uniform_probe.ms");
  const auto rows = uniform_price_probe(ms, c.real("uniform_probe.delta"));
  return {uniform_probe_table(rows), {"ms: " + join(ms), "truthful deviations, mu = 1"}, {}};
}

Outcome dispatch(const Config& c) {
  const std::string& cmd = c.command();
  if (cmd == "lower-bound-sweep") return lower_bound_cmd(c);
  if (cmd == "grouped-sweep") return grouped_cmd(c);
  if (cmd == "posted-fails") return posted_cmd(c);
  if (cmd == "balanced-fix") return balanced_cmd(c);
  if (cmd == "smooth-audit") return smooth_cmd(c);
  if (cmd == "verify-eq") return verify_cmd(c);
  if (cmd == "symmetric-fpa") return symmetric_cmd(c);
  return uniform_cmd(c);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Combined-market experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::optional<std::int64_t> worker_count;
  std::optional<double> tol;
  app.add_option("--config", config_path, "INI file");
  app.add_option("--seed", seed, "root seed (required here or in [run])");
  app.add_option("--out", out_path, "CSV output path, - for stdout");
  app.add_option("--workers", worker_count, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--tol", tol, "integration tolerance (slack tolerance for smooth-audit)");
  app.fallthrough();
  for (const std::string& cmd : Config::commands()) app.add_subcommand(cmd);
  CLI11_PARSE(app, argc, argv);

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    Config cfg(cmd);
    if (!config_path.empty()) cfg.load_file(config_path);
    if (seed) cfg.set("run.seed", std::to_string(*seed));
    if (!out_path.empty()) cfg.set("run.out", out_path);
    if (worker_count) cfg.set("run.workers", std::to_string(*worker_count));
    if (tol) cfg.set("run.tol", format_double(*tol));
    if (cfg.text("run.seed").empty()) throw std::invalid_argument("a seed is required (--seed or run.seed)");
    cfg.u64("run.seed");

    const auto t0 = std::chrono::steady_clock::now();
    std::clog << "cmkt " << cmd << ": config " << cfg.hash() << "\n";
    Outcome res = dispatch(cfg);
    std::clog << "cmkt " << cmd << ": done in "
              << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";

    const CsvMeta meta{cmd, cfg.hash(), cfg.u64("run.seed"), res.notes};
    const std::string out = cfg.text("run.out");
    if (out == "-") {
      write_csv(std::cout, meta, res.table);
    } else {
      std::ofstream f(out);
      if (!f) throw std::runtime_error("cannot write " + out);
      write_csv(f, meta, res.table);
    }
    if (!res.violations.empty()) {
      const nlohmann::json record{{"error", "audit_violation"}, {"command", cmd}, {"config_hash", cfg.hash()},
                                  {"seed", cfg.u64("run.seed")}, {"violations", res.violations}};
      std::cerr << record.dump() << "\n";
      return kExitViolation;
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    const nlohmann::json record{{"error", "invalid_argument"}, {"command", cmd}, {"message", e.what()}};
    std::cerr << record.dump() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    const nlohmann::json record{{"error", "failure"}, {"command", cmd}, {"message", e.what()}};
    std::cerr << record.dump() << "\n";
    return 1;
  }
}
