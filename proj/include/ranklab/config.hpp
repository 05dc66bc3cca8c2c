#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace ranklab::config {

// Flat key=value configuration with deterministic (sorted) serialization.
// Layering is defaults < config file < environment < flags.
class KeyValues {
 public:
  KeyValues() = default;

  static KeyValues from_file(const std::string& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;

  // Typed accessors; errors name the offending key.
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;

  // Overlay: values from `higher` win.
  void merge_from(const KeyValues& higher);
  // Applies RANKLAB_<UPPERCASE_KEY> environment variables over the current values.
  void apply_env_overrides(const std::string& prefix = "RANKLAB_");

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string serialize() const;  // sorted `key=value` lines

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace ranklab::config
