#include "ranklab/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace ranklab::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t lo = 0, hi = s.size();
  while (lo < hi && (s[lo] == ' ' || s[lo] == '\t')) ++lo;
  while (hi > lo && (s[hi - 1] == ' ' || s[hi - 1] == '\t' || s[hi - 1] == '\r'))
    --hi;
  return s.substr(lo, hi - lo);
}

}  // namespace

KeyValues KeyValues::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::runtime_error(path + ": malformed config line " +
                               std::to_string(line_no) +
                               " (expected key=value)");
    kv.values_[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValues::get_or(const std::string& key,
                              const std::string& fallback) const {
  const auto v = get(key);
  return v ? *v : fallback;
}

std::int64_t KeyValues::get_int(const std::string& key,
                                std::int64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::int64_t out = 0;
  const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
  if (res.ec != std::errc() || res.ptr != v->data() + v->size())
    throw std::runtime_error("config key `" + key + "`: not an integer: " + *v);
  return out;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
  if (res.ec != std::errc() || res.ptr != v->data() + v->size())
    throw std::runtime_error("config key `" + key + "`: not a number: " + *v);
  return out;
}

std::uint64_t KeyValues::get_u64(const std::string& key,
                                 std::uint64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
  if (res.ec != std::errc() || res.ptr != v->data() + v->size())
    throw std::runtime_error("config key `" + key +
                             "`: not an unsigned integer: " + *v);
  return out;
}

void KeyValues::merge_from(const KeyValues& higher) {
  for (const auto& [k, v] : higher.values_) values_[k] = v;
}

void KeyValues::apply_env_overrides(const std::string& prefix) {
  for (auto& [key, value] : values_) {
    std::string env_name = prefix;
    for (char c : key)
      env_name.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(
                                              static_cast<unsigned char>(c))));
    if (const char* env = std::getenv(env_name.c_str())) value = env;
  }
}

std::string KeyValues::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    out += k;
    out.push_back('=');
    out += v;
    out.push_back('\n');
  }
  return out;
}

}  // namespace ranklab::config
