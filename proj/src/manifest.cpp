#include "attrforge/manifest.hpp"

#include <filesystem>

namespace attrforge {

Json to_json(const RunManifest& manifest) {
  Json stages = Json::array();
  for (const StageRecord& stage : manifest.stages) {
    Json artifacts = Json::array();
    for (const ArtifactRecord& a : stage.artifacts) {
      artifacts.push_back(Json{{"path", a.path},
                               {"digest", a.digest},
                               {"bytes", a.bytes}});
    }
    stages.push_back(Json{{"name", stage.name},
                          {"fingerprint", stage.fingerprint},
                          {"artifacts", std::move(artifacts)},
                          {"counters", stage.counters},
                          {"seconds", stage.seconds}});
  }
  return Json{{"run_id", manifest.run_id},
              {"config", manifest.config_snapshot},
              {"stages", std::move(stages)}};
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest manifest;
  manifest.run_id = require_string(j, "run_id", "manifest");
  manifest.config_snapshot = require_field(j, "config", "manifest");
  for (const Json& s : require_field(j, "stages", "manifest")) {
    StageRecord stage;
    stage.name = require_string(s, "name", "manifest stage");
    const std::string where = "manifest stage " + stage.name;
    stage.fingerprint = require_string(s, "fingerprint", where);
    stage.counters = require_field(s, "counters", where);
    stage.seconds = require_field(s, "seconds", where).get<double>();
    for (const Json& a : require_field(s, "artifacts", where)) {
      ArtifactRecord artifact;
      artifact.path = require_string(a, "path", where);
      artifact.digest = require_string(a, "digest", where);
      artifact.bytes = require_field(a, "bytes", where).get<long long>();
      stage.artifacts.push_back(std::move(artifact));
    }
    manifest.stages.push_back(std::move(stage));
  }
  return manifest;
}

RunManifest load_manifest(const std::string& path) {
  Json parsed = Json::parse(read_text_file(path), nullptr, false);
  if (parsed.is_discarded()) {
    throw std::runtime_error("manifest: " + path + " is not valid JSON");
  }
  return manifest_from_json(parsed);
}

void save_manifest_atomic(const RunManifest& manifest,
                          const std::string& path) {
  const std::string tmp = path + ".tmp";
  write_text_file(tmp, to_json(manifest).dump(2) + "\n");
  std::filesystem::rename(tmp, path);
}

StageRecord* find_stage(RunManifest& manifest, const std::string& name) {
  for (StageRecord& stage : manifest.stages) {
    if (stage.name == name) return &stage;
  }
  return nullptr;
}

const StageRecord* find_stage(const RunManifest& manifest,
                              const std::string& name) {
  for (const StageRecord& stage : manifest.stages) {
    if (stage.name == name) return &stage;
  }
  return nullptr;
}

void upsert_stage(RunManifest& manifest, StageRecord stage) {
  if (StageRecord* existing = find_stage(manifest, stage.name)) {
    *existing = std::move(stage);
    return;
  }
  manifest.stages.push_back(std::move(stage));
}

}  // namespace attrforge
