#include "regm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "regm/csv.hpp"
#include "regm/error.hpp"

namespace regm {

namespace {

enum class ValueType { real, nonneg_real, pos_real, count, u64, boolean, text, real_list, count_list, choice };

struct KeySpec {
  ValueType type;
  std::vector<std::string> choices = {};
};

const std::map<std::string, KeySpec>& key_table() {
  static const std::map<std::string, KeySpec> table = {
      {"seed", {ValueType::u64}},
      {"n", {ValueType::count}},
      {"p", {ValueType::count}},
      {"theta0", {ValueType::real_list}},
      {"sigma", {ValueType::nonneg_real}},
      {"rho", {ValueType::real}},
      {"intercept", {ValueType::boolean}},
      {"data", {ValueType::text}},
      {"estimator", {ValueType::choice, {"exact", "ols", "ridge", "lasso", "en", "adaptive", "smooth", "onestep"}}},
      {"lambda", {ValueType::nonneg_real}},
      {"lambda_rule", {ValueType::choice, {"fixed", "schedule"}}},
      {"c", {ValueType::pos_real}},
      {"lambda2", {ValueType::nonneg_real}},
      {"m", {ValueType::count}},
      {"m_schedule", {ValueType::choice, {"fixed", "sqrt"}}},
      {"m_grid", {ValueType::count_list}},
      {"reps", {ValueType::count}},
      {"n_grid", {ValueType::count_list}},
      {"psi_at", {ValueType::choice, {"truth", "fitted"}}},
      {"onestep_penalty", {ValueType::choice, {"l1", "ridge"}}},
      {"initializer", {ValueType::choice, {"ridge", "truth", "full"}}},
      {"bound", {ValueType::pos_real}},
      {"step", {ValueType::pos_real}},
      {"exclude_radius", {ValueType::nonneg_real}},
      {"tol", {ValueType::pos_real}},
      {"max_sweeps", {ValueType::count}},
      {"threads", {ValueType::count}},
  };
  return table;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  try {
    const double d = parse_double(v);
    if (!std::isfinite(d)) throw Error("non-finite");
    return d;
  } catch (const Error&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

long to_count(const std::string& key, const std::string& v) {
  long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || out < 1) {
    throw ConfigError("key '" + key + "': expected a positive integer, got '" + v + "'");
  }
  return out;
}

std::string normalise(const std::string& key, const std::string& raw) {
  const auto it = key_table().find(key);
  if (it == key_table().end()) throw ConfigError("unknown config key '" + key + "'");
  const KeySpec& spec = it->second;
  const std::string v = trim(raw);
  switch (spec.type) {
    case ValueType::real: return format_double(to_real(key, v));
    case ValueType::nonneg_real: {
      const double d = to_real(key, v);
      if (d < 0.0) throw ConfigError("key '" + key + "': must be >= 0");
      return format_double(d);
    }
    case ValueType::pos_real: {
      const double d = to_real(key, v);
      if (!(d > 0.0)) throw ConfigError("key '" + key + "': must be > 0");
      return format_double(d);
    }
    case ValueType::count: return std::to_string(to_count(key, v));
    case ValueType::u64: {
      std::uint64_t out = 0;
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("key '" + key + "': expected an unsigned 64-bit integer, got '" + v + "'");
      }
      return std::to_string(out);
    }
    case ValueType::boolean:
      if (v == "true" || v == "1" || v == "yes") return "true";
      if (v == "false" || v == "0" || v == "no") return "false";
      throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
    case ValueType::text:
      if (v.empty()) throw ConfigError("key '" + key + "': empty value");
      return v;
    case ValueType::real_list: {
      std::vector<std::string> parts;
      for (const auto& item : split_list(v)) parts.push_back(format_double(to_real(key, item)));
      if (parts.empty()) throw ConfigError("key '" + key + "': empty list");
      return join_row(parts);
    }
    case ValueType::count_list: {
      std::vector<std::string> parts;
      for (const auto& item : split_list(v)) parts.push_back(std::to_string(to_count(key, item)));
      if (parts.empty()) throw ConfigError("key '" + key + "': empty list");
      return join_row(parts);
    }
    case ValueType::choice:
      if (std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end()) {
        std::string allowed;
        for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
        throw ConfigError("key '" + key + "': '" + v + "' is not one of " + allowed);
      }
      return v;
  }
  return v;
}

}  // namespace

const std::vector<std::string>& ExperimentConfig::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, spec] : key_table()) k.push_back(name);
    return k;
  }();
  return keys;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text, const std::string& origin) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  values_[key] = normalise(key, value);
}

std::string ExperimentConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(it->second);
}

long ExperimentConfig::get_int(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : std::stol(it->second);
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : std::stoull(it->second);
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second == "true";
}

std::vector<double> ExperimentConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(it->second)) out.push_back(parse_double(item));
  return out;
}

std::vector<long> ExperimentConfig::get_ints(const std::string& key, const std::vector<long>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<long> out;
  for (const auto& item : split_list(it->second)) out.push_back(std::stol(item));
  return out;
}

std::string ExperimentConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace regm
