#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cmkt/report.hpp"

namespace cmkt::cli {

namespace {

const std::map<std::string, std::vector<std::string>> kSections{
    {"lower-bound-sweep", {"run", "lower_bound"}},
    {"grouped-sweep", {"run", "grouped"}},
    {"posted-fails", {"run", "posted_fails"}},
    {"balanced-fix", {"run", "balanced_fix"}},
    {"smooth-audit", {"run", "smooth_audit"}},
    {"verify-eq", {"run", "verify_eq"}},
    {"symmetric-fpa", {"run", "symmetric_fpa"}},
    {"uniform-probe", {"run", "uniform_probe"}},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  const char* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw std::invalid_argument("bad number for " + key + ": '" + s + "'");
  return v;
}

}  // namespace

const std::vector<std::string>& Config::commands() {
  static const std::vector<std::string> c = [] {
    std::vector<std::string> out;
    for (const auto& [k, v] : kSections) out.push_back(k);
    return out;
  }();
  return c;
}

const std::map<std::string, std::map<std::string, std::string>>& Config::schema() {
  static const std::map<std::string, std::map<std::string, std::string>> s{
      {"run", {{"seed", ""}, {"workers", "1"}, {"tol", ""}, {"out", "-"}}},
      {"lower_bound",
       {{"ms", "1000,10000,100000"},
        {"integration", "quadrature"},
        {"samples", "1000000"},
        {"replicates", "10"},
        {"verify", "false"},
        {"epsilon", "1e-6"}}},
      {"grouped", {{"m", "1000"}, {"gammas", "0.1"}, {"verify", "true"}, {"epsilon", "1e-6"}}},
      {"posted_fails", {{"eps", "0.01"}, {"caps", "1000"}}},
      {"balanced_fix", {{"m", "100"}, {"inits", "20"}, {"audit_tol", "1e-3"}}},
      {"smooth_audit", {{"fpa_cells", "1000"}, {"discriminatory_cells", "4000"}}},
      {"verify_eq", {{"m", "100"}, {"epsilon", "1e-6"}, {"witnesses", "true"}}},
      {"symmetric_fpa",
       {{"bid_levels", "1001"}, {"type_nodes", "11"}, {"samples", "100000"}, {"epsilon", "1e-6"}}},
      {"uniform_probe", {{"ms", "1,2,4,16,256"}, {"delta", "0.01"}}},
  };
  return s;
}

Config::Config(const std::string& command) : command_(command) {
  const auto it = kSections.find(command);
  if (it == kSections.end()) throw std::invalid_argument("unknown command '" + command + "'");
  for (const auto& [section, keys] : schema())
    for (const auto& [k, v] : keys) values_[section + "." + k] = v;
}

void Config::load_ini(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config syntax: ") + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw std::invalid_argument("config key '" + section + "' outside a section");
    const auto sit = schema().find(section);
    if (sit == schema().end()) throw std::invalid_argument("unknown config section [" + section + "]");
    for (const auto& [key, node] : body) {
      if (!sit->second.contains(key)) throw std::invalid_argument("unknown config key " + section + "." + key);
      values_[section + "." + key] = trim(node.get_value<std::string>());
    }
  }
}

void Config::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  load_ini(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  if (!values_.contains(key)) throw std::invalid_argument("unknown config key " + key);
  values_[key] = value;
}

std::string Config::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("unknown config key " + key);
  return it->second;
}

double Config::real(const std::string& key) const { return parse_number<double>(key, text(key)); }
std::int64_t Config::integer(const std::string& key) const { return parse_number<std::int64_t>(key, text(key)); }
std::uint64_t Config::u64(const std::string& key) const { return parse_number<std::uint64_t>(key, text(key)); }

bool Config::boolean(const std::string& key) const {
  const std::string v = text(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("bad boolean for " + key + ": '" + v + "'");
}

std::vector<double> Config::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_list(text(key))) out.push_back(parse_number<double>(key, s));
  return out;
}

std::vector<std::int64_t> Config::integers(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& s : split_list(text(key))) out.push_back(parse_number<std::int64_t>(key, s));
  return out;
}

std::vector<std::string> Config::sections() const { return kSections.at(command_); }

std::string Config::canonical() const {
  std::string out = "command=" + command_ + "\n";
  const auto secs = sections();
  for (const auto& [k, v] : values_) {
    const std::string section = k.substr(0, k.find('.'));
    if (std::find(secs.begin(), secs.end(), section) == secs.end()) continue;
    if (k == "run.out" || k == "run.workers") continue;
    out += k + "=" + v + "\n";
  }
  return out;
}

std::string Config::hash() const { return hex64(fnv1a64(canonical())); }

}  // namespace cmkt::cli
