#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cmkt::cli {

// Effective settings of one subcommand: "section.key" -> text. Starts from the
// built-in defaults; a config file may only override keys that exist.
class Config {
 public:
  explicit Config(const std::string& command);

  static const std::vector<std::string>& commands();
  // Every section a config file may contain, with its keys and defaults.
  static const std::map<std::string, std::map<std::string, std::string>>& schema();

  // INI text. Throws std::invalid_argument on unknown sections or keys and on
  // syntax errors.
  void load_ini(const std::string& text);
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  const std::string& command() const { return command_; }
  std::string text(const std::string& key) const;
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::int64_t> integers(const std::string& key) const;

  // Sorted "key=value" lines of the sections the command reads, without
  // run.out and run.workers (they do not change results).
  std::string canonical() const;
  std::string hash() const;
  // Sections read by the command.
  std::vector<std::string> sections() const;

 private:
  std::string command_;
  std::map<std::string, std::string> values_;
};

}  // namespace cmkt::cli
