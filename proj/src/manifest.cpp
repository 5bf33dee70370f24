#include "cargoflow/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "cargoflow/common.hpp"

#ifndef CARGOFLOW_VERSION
#define CARGOFLOW_VERSION "unknown"
#endif

namespace cargoflow {

const char* version_string() { return CARGOFLOW_VERSION; }

void write_manifest(const RunManifest& m, const std::string& path) {
  nlohmann::json j;
  j["schema"] = "cargoflow-manifest-v1";
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["seed"] = m.seed;
  j["artifacts"] = m.artifacts;
  j["wall_time_s"] = m.wall_time_s;
  j["version"] = m.version;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad manifest " + path + ": " + e.what());
  }
  if (j.value("schema", "") != "cargoflow-manifest-v1")
    throw IoError(path + ": not a cargoflow manifest");
  RunManifest m;
  m.command = j.value("command", "");
  m.argv = j.value("argv", std::vector<std::string>{});
  m.seed = j.value("seed", std::uint64_t{0});
  m.artifacts = j.value("artifacts", std::vector<std::string>{});
  m.wall_time_s = j.value("wall_time_s", 0.0);
  m.version = j.value("version", "");
  return m;
}

}  // namespace cargoflow
