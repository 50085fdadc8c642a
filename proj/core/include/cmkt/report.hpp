#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cmkt/experiments.hpp"

namespace cmkt {

// Shortest decimal that parses back to the same double; "inf", "-inf", "nan".
std::string format_double(double x);

std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t x);

using Cell = std::variant<std::string, double, std::int64_t, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct CsvMeta {
  std::string command;
  std::string config_hash;  // hex of fnv1a64 over the canonical config text
  std::uint64_t seed = 0;
  std::vector<std::string> notes;  // grids, integration, ...
};

// '#'-prefixed header lines, the column row, then one line per row. Strings
// containing ',', '"' or newlines are quoted.
void write_csv(std::ostream& os, const CsvMeta& meta, const Table& table);

// Column layouts, one per subcommand.
Table lower_bound_table(const std::vector<LowerBoundRow>& rows);
Table grouped_table(const std::vector<GroupedRow>& rows);
Table posted_fails_table(const std::vector<PostedFailsRow>& rows);
Table balanced_fix_table(const BalancedFixResult& res);
Table smooth_audit_table(const SmoothAuditResult& res);
Table verify_eq_table(const BneReport& bne, const std::vector<WitnessResult>& witnesses);
Table symmetric_fpa_table(const SymmetricFpaReport& rep);
Table uniform_probe_table(const std::vector<UniformProbeRow>& rows);

}  // namespace cmkt
