#include "ranklab/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "ranklab/hashing.hpp"

namespace ranklab::manifest {

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checksum: cannot open " + path);
  std::uint64_t state = hashing::kFnvOffset;
  char buf[65536];
  while (true) {
    in.read(buf, sizeof(buf));
    const auto got = in.gcount();
    if (got > 0)
      state = hashing::fnv1a(
          std::string_view(buf, static_cast<std::size_t>(got)), state);
    if (!in) break;
  }
  return state;
}

std::string checksum_hex(std::uint64_t checksum) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(checksum));
  return buf;
}

std::string file_checksum_hex(const std::string& path) {
  return checksum_hex(file_checksum(path));
}

void RunManifest::add_input(const std::string& path) {
  inputs.emplace_back(path, file_checksum_hex(path));
}

void RunManifest::add_output(const std::string& path) {
  outputs.emplace_back(path, file_checksum_hex(path));
}

void RunManifest::save(const std::string& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  auto files = [](const std::vector<std::pair<std::string, std::string>>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [p, c] : v) arr.push_back({{"path", p}, {"checksum", c}});
    return arr;
  };
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  nlohmann::json j;
  in >> j;
  RunManifest m;
  m.command = j.value("command", "");
  m.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("config"))
    for (const auto& [k, v] : j["config"].items())
      m.config[k] = v.get<std::string>();
  auto read_files = [&](const char* key,
                        std::vector<std::pair<std::string, std::string>>& out) {
    if (!j.contains(key)) return;
    for (const auto& e : j[key])
      out.emplace_back(e.value("path", ""), e.value("checksum", ""));
  };
  read_files("inputs", m.inputs);
  read_files("outputs", m.outputs);
  return m;
}

}  // namespace ranklab::manifest
