#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cargoflow {

/// Reproducibility record written next to command outputs. Replaying the
/// stored argv regenerates every artifact bit-identically for deterministic
/// and seeded commands alike (the RNG policy keys streams by stable indices,
/// so worker count does not matter).
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  double wall_time_s = 0;
  std::string version;
};

void write_manifest(const RunManifest& manifest, const std::string& path);
RunManifest read_manifest(const std::string& path);

const char* version_string();

}  // namespace cargoflow
