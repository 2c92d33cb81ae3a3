#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nwsd/errors.hpp"

namespace nwsd {

// Flat `key = value` config files. Blank lines and '#' comments allowed.
// Keys must be unique; callers reject unknown keys by name.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_text(const std::string& text, const std::string& origin);

  bool has(const std::string& key) const;
  // Every getter throws ConfigError naming the key on a malformed value.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  // Throws ConfigError naming the first key not in `allowed`.
  void reject_unknown_keys(const std::set<std::string>& allowed) const;

  // Applies `key=value` override strings (CLI --set).
  void apply_override(const std::string& key_equals_value);

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
  std::string origin_;
};

std::string trim(const std::string& s);

// Shortest decimal representation that round-trips the exact double.
std::string format_double(double v);

}  // namespace nwsd
