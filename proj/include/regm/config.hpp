#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace regm {

/// Flat key/value experiment configuration.
///
/// File syntax: one `key = value` per line, `#` starts a comment, lists are
/// comma separated. Keys are validated against a fixed table and values are
/// normalised on insertion, so two configs with the same meaning print the same.
class ExperimentConfig {
 public:
  static ExperimentConfig from_file(const std::filesystem::path& path);
  static ExperimentConfig parse(std::string_view text, const std::string& origin = "<config>");

  /// Validates and normalises; throws ConfigError naming the key on failure.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<long> get_ints(const std::string& key, const std::vector<long>& fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Sorted `key = value` lines.
  std::string echo() const;

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace regm
