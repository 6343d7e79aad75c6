#pragma once

#include <cstdint>
#include <string>

#include "attrforge/gateway.hpp"
#include "attrforge/jsonl.hpp"
#include "attrforge/preference.hpp"
#include "attrforge/selection.hpp"
#include "attrforge/synthesis.hpp"

namespace attrforge {

struct RoleConfig {
  bool mock = true;
  BackendEndpoint endpoint;
};

// Full run configuration. `raw` always carries every key with defaults
// filled in; the typed fields are materialized from it, so `raw` doubles as
// the canonical snapshot for fingerprints and manifests.
struct RunConfig {
  Json raw;

  std::uint64_t global_seed = 42;
  std::size_t parallelism = 4;
  double max_failure_fraction = 0.1;

  std::string workspace = "workspace";
  std::string queries_path = "data/sample_queries.jsonl";
  std::string eval_data_path;
  std::string templates_dir;
  bool yesno = false;

  RoleConfig generator;
  RoleConfig policy_scorer;
  RoleConfig reference_scorer;
  RoleConfig judge;

  SynthesisConfig synthesis;
  int distractors_k = 2;
  double warmup_fraction = 0.2;

  SampleConfig sampling;
  RewardConfig rewards;
  DpoConfig dpo;
};

RunConfig config_defaults();

// Strict merge over defaults: unknown keys or wrong types are validation
// errors naming the offending key path.
RunConfig config_from_json(const Json& file_json);
RunConfig config_from_file(const std::string& path);

// Sets a dotted key ("selection.n_candidates", "backends.judge.base_url").
// The value parses as JSON when it can, otherwise as a plain string.
void config_set(RunConfig& config, const std::string& dotted_key,
                const std::string& value);

// ATTRFORGE_<ROLE>_URL and ATTRFORGE_<ROLE>_TOKEN for the four roles
// (GENERATOR, POLICY_SCORER, REFERENCE_SCORER, JUDGE). A URL switches the
// role to HTTP unless it is the literal "mock:".
void config_apply_env(RunConfig& config);

// Binds every role to the in-process mock.
void config_force_mock(RunConfig& config);

}  // namespace attrforge
