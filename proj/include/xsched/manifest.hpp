#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace xsched {

inline constexpr const char* kToolVersion = "0.1.0";

// One manifest per artifact directory: the command, its inputs and seed, and
// the files it wrote. Reruns with equal inputs reproduce equal outputs; the
// timestamp only records when this run happened.
struct RunManifest {
  std::string command;
  nlohmann::json inputs = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;

  void write(const std::filesystem::path& out_dir) const {
    nlohmann::json j;
    j["command"] = command;
    j["tool_version"] = kToolVersion;
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    j["created_utc"] = buf;
    j["seed"] = seed;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    std::ofstream out(out_dir / "manifest.json");
    if (!out) {
      throw std::runtime_error("cannot write manifest in " + out_dir.string());
    }
    out << j.dump(2) << '\n';
  }
};

}  // namespace xsched
