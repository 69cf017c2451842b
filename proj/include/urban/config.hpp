#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace urban {

/// Flat key=value experiment configuration. Lines starting with '#' are
/// comments. Command-line overrides are applied on top via set(). The
/// canonical form (sorted keys) feeds the config hash embedded in artifacts.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback = "") const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  uint64_t get_seed(const std::string& key, uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma separated
  std::vector<double> get_double_list(const std::string& key) const;

  std::string canonical() const;
  std::string hash() const;  // 16 hex chars over the canonical form

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace urban
