#include "cmkt/report.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>

namespace cmkt {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  std::array<char, 17> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + 16, x, 16);
  std::string s(buf.data(), res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string render(const Cell& c) {
  return std::visit([](const auto& v) -> std::string {
    using T = std::decay_t<decltype(v)>;
    if constexpr (std::is_same_v<T, std::string>) return quote(v);
    else if constexpr (std::is_same_v<T, double>) return format_double(v);
    else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
    else return std::to_string(v);
  }, c);
}

Cell num(double x) { return Cell{x}; }
Cell cnt(std::size_t x) { return Cell{static_cast<std::int64_t>(x)}; }
Cell str(std::string s) { return Cell{std::move(s)}; }

}  // namespace

void write_csv(std::ostream& os, const CsvMeta& meta, const Table& table) {
  os << "# command=" << meta.command << "\n";
  os << "# config_hash=" << meta.config_hash << "\n";
  os << "# seed=" << meta.seed << "\n";
  for (const std::string& n : meta.notes) os << "# " << n << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << render(row[i]);
    os << "\n";
  }
}

Table lower_bound_table(const std::vector<LowerBoundRow>& rows) {
  Table t;
  t.columns = {"m",           "eq_welfare",         "opt_welfare",        "ratio",        "closed_form_ratio",
               "eq_error",    "opt_error",          "closed_eq_welfare",  "closed_opt_welfare",
               "speculator_utility", "bne_max_gap", "bne_verdict",        "method"};
  for (const auto& r : rows) {
    t.rows.push_back({Cell{r.m}, num(r.eq_welfare), num(r.opt_welfare), num(r.ratio), num(r.closed.ratio),
                      num(r.eq_error), num(r.opt_error), num(r.closed.eq_welfare), num(r.closed.opt_welfare),
                      num(r.speculator_utility), r.bne ? num(r.bne->max_gap()) : str(""),
                      r.bne ? str(r.bne->verdict ? "pass" : "fail") : str("skipped"), str(r.method)});
  }
  return t;
}

Table grouped_table(const std::vector<GroupedRow>& rows) {
  Table t;
  t.columns = {"m",          "gamma",          "groups",      "units_per_group", "group_eq_welfare", "group_opt_welfare",
               "ratio",      "closed_form_ratio", "eq_welfare", "max_speculator_units", "bne_max_gap", "bne_verdict"};
  for (const auto& r : rows) {
    t.rows.push_back({Cell{r.m}, num(r.gamma), Cell{r.groups}, Cell{r.units_per_group}, num(r.group_eq_welfare),
                      num(r.group_opt_welfare), num(r.ratio), num(r.closed_ratio), num(r.eq_welfare),
                      Cell{r.max_speculator_units}, r.bne ? num(r.bne->max_gap()) : str(""),
                      r.bne ? str(r.bne->verdict ? "pass" : "fail") : str("skipped")});
  }
  return t;
}

Table posted_fails_table(const std::vector<PostedFailsRow>& rows) {
  Table t;
  t.columns = {"eps",   "H",          "median_price", "median_price_welfare", "balanced_price", "balanced_price_welfare",
               "opt",   "opt_error",  "median_equilibria", "balanced_equilibria"};
  for (const auto& r : rows) {
    t.rows.push_back({num(r.eps), num(r.cap), num(r.median.price), num(r.median.welfare), num(r.balanced.price),
                      num(r.balanced.welfare), num(r.opt_welfare), num(r.opt_error), cnt(r.median.equilibria.size()),
                      cnt(r.balanced.equilibria.size())});
  }
  return t;
}

Table balanced_fix_table(const BalancedFixResult& res) {
  Table t;
  t.columns = {"variant", "reserve", "eps_price", "expected_opt", "bound", "candidates", "min_welfare", "violations",
               "pass"};
  for (const auto& a : res.audits) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& c : a.audit.candidates) lo = std::min(lo, c.welfare);
    t.rows.push_back({str(a.label), num(a.reserve), num(a.eps_price), num(res.expected_opt), num(a.audit.bound),
                      cnt(a.audit.candidates.size()), num(lo), cnt(a.audit.violations.size()), Cell{a.audit.pass}});
  }
  return t;
}

Table smooth_audit_table(const SmoothAuditResult& res) {
  Table t;
  t.columns = {"check", "lambda", "mu", "expected", "pass", "min_slack", "points_checked", "poa_bound", "domain"};
  auto add = [&](const char* name, const SmoothReport& r, bool expected) {
    t.rows.push_back({str(name), num(r.lambda), num(r.mu), Cell{expected}, Cell{r.pass}, num(r.min_slack),
                      cnt(r.points_checked), num(poa_bound(r.lambda, r.mu)), str(r.domain)});
  };
  add("fpa", res.fpa, true);
  add("fpa_too_strong", res.fpa_too_strong, false);
  add("fpa_lifted", res.lifted, true);
  add("fpa_double_lifted", res.double_lifted, true);
  add("discriminatory_semi_smooth", res.discriminatory, true);
  return t;
}

Table verify_eq_table(const BneReport& bne, const std::vector<WitnessResult>& witnesses) {
  Table t;
  t.columns = {"kind", "agent", "label", "value", "pass", "deviations", "detail"};
  for (const auto& g : bne.agents) {
    t.rows.push_back({str("gap"), Cell{static_cast<std::int64_t>(g.agent)}, str("best_response"), num(g.gap),
                      Cell{g.gap <= bne.epsilon}, cnt(g.deviations_checked), str(g.witness_description)});
  }
  for (const auto& w : witnesses) {
    double lo = std::numeric_limits<double>::infinity();
    for (double d : w.verdict.differences) lo = std::min(lo, d);
    t.rows.push_back({str("witness"), Cell{static_cast<std::int64_t>(w.agent)}, str(w.label), num(lo),
                      Cell{w.verdict.holds()}, cnt(w.verdict.differences.size()),
                      str(w.verdict.strictly_better_somewhere ? "strictly_better" : "not_strict")});
  }
  return t;
}

Table symmetric_fpa_table(const SymmetricFpaReport& rep) {
  Table t;
  t.columns = {"metric", "value"};
  t.rows.push_back({str("max_gap"), num(rep.bne.max_gap())});
  t.rows.push_back({str("epsilon"), num(rep.bne.epsilon)});
  t.rows.push_back({str("bne_verdict"), Cell{rep.bne.verdict}});
  t.rows.push_back({str("samples"), cnt(rep.samples)});
  t.rows.push_back({str("ties"), cnt(rep.ties)});
  t.rows.push_back({str("efficient"), cnt(rep.efficient)});
  t.rows.push_back({str("efficiency"), num(rep.efficiency)});
  t.rows.push_back({str("max_payment_residual"), num(rep.max_payment_residual)});
  for (std::size_t i = 0; i < rep.values.size(); ++i)
    t.rows.push_back({str("bid(v=" + format_double(rep.values[i]) + ")"), num(rep.bids[i])});
  return t;
}

Table uniform_probe_table(const std::vector<UniformProbeRow>& rows) {
  Table t;
  t.columns = {"m", "lambda_star", "opt", "deviation_utility", "revenue"};
  for (const auto& r : rows)
    t.rows.push_back({Cell{r.m}, num(r.lambda_star), num(r.opt), num(r.deviation_utility), num(r.revenue)});
  return t;
}

}  // namespace cmkt
