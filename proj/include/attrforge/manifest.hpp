#pragma once

#include <string>
#include <vector>

#include "attrforge/jsonl.hpp"

namespace attrforge {

struct ArtifactRecord {
  std::string path;  // relative to the workspace root
  std::string digest;
  long long bytes = 0;
};

struct StageRecord {
  std::string name;
  std::string fingerprint;  // inputs + config digest for resume checks
  std::vector<ArtifactRecord> artifacts;
  Json counters = Json::object();
  double seconds = 0.0;
};

struct RunManifest {
  std::string run_id;
  Json config_snapshot = Json::object();
  std::vector<StageRecord> stages;  // in completion order
};

Json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const Json& j);

RunManifest load_manifest(const std::string& path);
// Write-to-temp then rename, so a crash never leaves a torn manifest.
void save_manifest_atomic(const RunManifest& manifest,
                          const std::string& path);

StageRecord* find_stage(RunManifest& manifest, const std::string& name);
const StageRecord* find_stage(const RunManifest& manifest,
                              const std::string& name);
// Replaces the record with the same name or appends a new one.
void upsert_stage(RunManifest& manifest, StageRecord stage);

}  // namespace attrforge
