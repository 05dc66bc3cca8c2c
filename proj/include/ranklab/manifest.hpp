#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ranklab::manifest {

// FNV-1a over the file bytes, rendered as 16 hex digits.
std::uint64_t file_checksum(const std::string& path);
std::string checksum_hex(std::uint64_t checksum);
std::string file_checksum_hex(const std::string& path);

// Record of one command execution: what ran, with which configuration, over
// which inputs, producing which artifacts. Deterministic content only, so a
// repeated run emits identical bytes; timings go to a side file.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;   // (path, checksum)
  std::vector<std::pair<std::string, std::string>> outputs;  // (path, checksum)

  void add_input(const std::string& path);
  void add_output(const std::string& path);
  void save(const std::string& path) const;  // JSON, sorted keys
  static RunManifest load(const std::string& path);
};

}  // namespace ranklab::manifest
