#include "attrforge/run_config.hpp"

#include <cstdlib>

namespace attrforge {

namespace {

Json default_role_json() {
  return Json{{"mock", true},
              {"base_url", ""},
              {"auth_token", ""},
              {"timeout_ms", 30000},
              {"max_retries", 3},
              {"retry_backoff_ms", 250},
              {"parallelism", 8},
              {"max_premise_chars", 6000},
              {"entail_threshold", 0.5}};
}

Json default_raw() {
  return Json{
      {"global_seed", 42},
      {"parallelism", 4},
      {"max_failure_fraction", 0.1},
      {"paths", Json{{"workspace", "workspace"},
                     {"queries", "data/sample_queries.jsonl"},
                     {"eval_data", ""},
                     {"templates", ""}}},
      {"prompts", Json{{"yesno", false}}},
      {"backends", Json{{"generator", default_role_json()},
                        {"policy_scorer", default_role_json()},
                        {"reference_scorer", default_role_json()},
                        {"judge", default_role_json()}}},
      {"synthesis", Json{{"max_statements", 5},
                         {"min_group_size", 2},
                         {"max_group_size", 3},
                         {"distractors_k", 2},
                         {"warmup_fraction", 0.2},
                         {"temperature", 1.0},
                         {"top_p", 0.95},
                         {"max_tokens", 1024}}},
      {"selection", Json{{"n_candidates", 16},
                         {"attr_threshold", 1.0},
                         {"compre_threshold", 0.8},
                         {"robust_mode", "literal"}}},
      {"dpo", Json{{"beta", 0.1}, {"max_pairs_per_query", 2}}}};
}

[[noreturn]] void bad_key(const std::string& path, const char* why) {
  throw std::invalid_argument("config: " + path + " " + why);
}

void merge_strict(Json& base, const Json& overlay, const std::string& path) {
  if (!overlay.is_object()) {
    bad_key(path.empty() ? "(root)" : path, "must be an object");
  }
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    const std::string child = path.empty() ? it.key() : path + "." + it.key();
    auto slot = base.find(it.key());
    if (slot == base.end()) bad_key(child, "is not a recognized key");
    if (slot->is_object() && !slot->empty()) {
      merge_strict(*slot, it.value(), child);
    } else {
      *slot = it.value();
    }
  }
}

double get_number(const Json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) bad_key(path + key, "must be a number");
  return it->get<double>();
}

int get_int(const Json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) {
    bad_key(path + key, "must be an integer");
  }
  return it->get<int>();
}

std::string get_string(const Json& j, const char* key,
                       const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) bad_key(path + key, "must be a string");
  return it->get<std::string>();
}

bool get_bool(const Json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_boolean()) bad_key(path + key, "must be a boolean");
  return it->get<bool>();
}

RoleConfig materialize_role(const Json& j, const std::string& path) {
  RoleConfig role;
  role.mock = get_bool(j, "mock", path);
  role.endpoint.base_url = get_string(j, "base_url", path);
  role.endpoint.auth_token = get_string(j, "auth_token", path);
  role.endpoint.timeout_ms = get_int(j, "timeout_ms", path);
  role.endpoint.max_retries = get_int(j, "max_retries", path);
  role.endpoint.retry_backoff_ms = get_int(j, "retry_backoff_ms", path);
  role.endpoint.parallelism = get_int(j, "parallelism", path);
  role.endpoint.max_premise_chars = get_int(j, "max_premise_chars", path);
  role.endpoint.entail_threshold = get_number(j, "entail_threshold", path);
  if (role.endpoint.base_url == "mock:") {
    role.mock = true;
    role.endpoint.base_url.clear();
  }
  if (!role.mock) validate(role.endpoint);
  if (role.endpoint.max_premise_chars < 1) {
    bad_key(path + "max_premise_chars", "must be >= 1");
  }
  return role;
}

void materialize(RunConfig& c) {
  const Json& j = c.raw;
  {
    auto it = j.find("global_seed");
    if (it == j.end() || !it->is_number_integer()) {
      bad_key("global_seed", "must be an integer");
    }
    if (it->is_number_unsigned()) {
      c.global_seed = it->get<std::uint64_t>();
    } else {
      long long v = it->get<long long>();
      if (v < 0) bad_key("global_seed", "must be >= 0");
      c.global_seed = static_cast<std::uint64_t>(v);
    }
  }
  int par = get_int(j, "parallelism", "");
  if (par < 1) bad_key("parallelism", "must be >= 1");
  c.parallelism = static_cast<std::size_t>(par);
  c.max_failure_fraction = get_number(j, "max_failure_fraction", "");
  if (c.max_failure_fraction < 0.0 || c.max_failure_fraction > 1.0) {
    bad_key("max_failure_fraction", "must be in [0, 1]");
  }

  const Json& paths = require_field(j, "paths", "config");
  c.workspace = get_string(paths, "workspace", "paths.");
  if (c.workspace.empty()) bad_key("paths.workspace", "must be non-empty");
  c.queries_path = get_string(paths, "queries", "paths.");
  c.eval_data_path = get_string(paths, "eval_data", "paths.");
  c.templates_dir = get_string(paths, "templates", "paths.");

  c.yesno = get_bool(require_field(j, "prompts", "config"), "yesno",
                     "prompts.");

  const Json& backends = require_field(j, "backends", "config");
  c.generator = materialize_role(
      require_field(backends, "generator", "config"), "backends.generator.");
  c.policy_scorer =
      materialize_role(require_field(backends, "policy_scorer", "config"),
                       "backends.policy_scorer.");
  c.reference_scorer =
      materialize_role(require_field(backends, "reference_scorer", "config"),
                       "backends.reference_scorer.");
  c.judge = materialize_role(require_field(backends, "judge", "config"),
                             "backends.judge.");

  const Json& synthesis = require_field(j, "synthesis", "config");
  c.synthesis.max_statements = get_int(synthesis, "max_statements",
                                       "synthesis.");
  c.synthesis.min_group_size = get_int(synthesis, "min_group_size",
                                       "synthesis.");
  c.synthesis.max_group_size = get_int(synthesis, "max_group_size",
                                       "synthesis.");
  c.synthesis.temperature = get_number(synthesis, "temperature", "synthesis.");
  c.synthesis.top_p = get_number(synthesis, "top_p", "synthesis.");
  c.synthesis.max_tokens = get_int(synthesis, "max_tokens", "synthesis.");
  c.distractors_k = get_int(synthesis, "distractors_k", "synthesis.");
  c.warmup_fraction = get_number(synthesis, "warmup_fraction", "synthesis.");
  if (c.synthesis.max_statements < 1) {
    bad_key("synthesis.max_statements", "must be >= 1");
  }
  if (c.synthesis.min_group_size < 1 ||
      c.synthesis.max_group_size < c.synthesis.min_group_size) {
    bad_key("synthesis.min_group_size",
            "must satisfy 1 <= min_group_size <= max_group_size");
  }
  if (c.distractors_k < 0) bad_key("synthesis.distractors_k", "must be >= 0");
  if (c.warmup_fraction < 0.0 || c.warmup_fraction > 1.0) {
    bad_key("synthesis.warmup_fraction", "must be in [0, 1]");
  }
  if (c.synthesis.temperature < 0.0) {
    bad_key("synthesis.temperature", "must be >= 0");
  }
  if (c.synthesis.top_p <= 0.0 || c.synthesis.top_p > 1.0) {
    bad_key("synthesis.top_p", "must be in (0, 1]");
  }
  if (c.synthesis.max_tokens < 1) {
    bad_key("synthesis.max_tokens", "must be >= 1");
  }

  const Json& selection = require_field(j, "selection", "config");
  c.sampling.n = get_int(selection, "n_candidates", "selection.");
  c.sampling.temperature = c.synthesis.temperature;
  c.sampling.top_p = c.synthesis.top_p;
  c.sampling.max_tokens = c.synthesis.max_tokens;
  c.rewards.attr_threshold = get_number(selection, "attr_threshold",
                                        "selection.");
  c.rewards.compre_threshold = get_number(selection, "compre_threshold",
                                          "selection.");
  std::string robust_mode = get_string(selection, "robust_mode", "selection.");
  if (robust_mode == "literal") {
    c.rewards.deviation_penalty = false;
  } else if (robust_mode == "deviation_penalty") {
    c.rewards.deviation_penalty = true;
  } else {
    bad_key("selection.robust_mode",
            "must be \"literal\" or \"deviation_penalty\"");
  }
  if (c.sampling.n < 1) bad_key("selection.n_candidates", "must be >= 1");
  if (c.rewards.attr_threshold < 0.0 || c.rewards.attr_threshold > 1.0) {
    bad_key("selection.attr_threshold", "must be in [0, 1]");
  }
  if (c.rewards.compre_threshold < 0.0 || c.rewards.compre_threshold > 1.0) {
    bad_key("selection.compre_threshold", "must be in [0, 1]");
  }

  const Json& dpo = require_field(j, "dpo", "config");
  c.dpo.beta = get_number(dpo, "beta", "dpo.");
  c.dpo.max_pairs_per_query = get_int(dpo, "max_pairs_per_query", "dpo.");
  if (!(c.dpo.beta > 0.0)) bad_key("dpo.beta", "must be > 0");
  if (c.dpo.max_pairs_per_query < 0) {
    bad_key("dpo.max_pairs_per_query", "must be >= 0");
  }
}

}  // namespace

RunConfig config_defaults() {
  RunConfig c;
  c.raw = default_raw();
  materialize(c);
  return c;
}

RunConfig config_from_json(const Json& file_json) {
  RunConfig c;
  c.raw = default_raw();
  merge_strict(c.raw, file_json, "");
  materialize(c);
  return c;
}

RunConfig config_from_file(const std::string& path) {
  Json parsed = Json::parse(read_text_file(path), nullptr, false);
  if (parsed.is_discarded()) {
    throw std::invalid_argument("config: " + path + " is not valid JSON");
  }
  try {
    return config_from_json(parsed);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void config_set(RunConfig& config, const std::string& dotted_key,
                const std::string& value) {
  if (dotted_key.empty()) {
    throw std::invalid_argument("config: empty key");
  }
  Json parsed = Json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;

  Json* node = &config.raw;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = dotted_key.find('.', start);
    std::string part = dotted_key.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) {
      throw std::invalid_argument("config: malformed key '" + dotted_key +
                                  "'");
    }
    auto it = node->find(part);
    if (it == node->end()) {
      throw std::invalid_argument("config: " + dotted_key +
                                  " is not a recognized key");
    }
    if (dot == std::string::npos) {
      *it = parsed;
      break;
    }
    if (!it->is_object()) {
      throw std::invalid_argument("config: " + dotted_key +
                                  " is not a recognized key");
    }
    node = &*it;
    start = dot + 1;
  }
  materialize(config);
}

void config_apply_env(RunConfig& config) {
  struct Role {
    const char* env;
    const char* key;
  };
  static const Role roles[] = {{"GENERATOR", "generator"},
                               {"POLICY_SCORER", "policy_scorer"},
                               {"REFERENCE_SCORER", "reference_scorer"},
                               {"JUDGE", "judge"}};
  for (const Role& role : roles) {
    std::string url_var = std::string("ATTRFORGE_") + role.env + "_URL";
    std::string token_var = std::string("ATTRFORGE_") + role.env + "_TOKEN";
    Json& slot = config.raw["backends"][role.key];
    if (const char* url = std::getenv(url_var.c_str())) {
      slot["base_url"] = url;
      slot["mock"] = std::string(url) == "mock:";
    }
    if (const char* token = std::getenv(token_var.c_str())) {
      slot["auth_token"] = token;
    }
  }
  materialize(config);
}

void config_force_mock(RunConfig& config) {
  for (const char* key :
       {"generator", "policy_scorer", "reference_scorer", "judge"}) {
    config.raw["backends"][key]["mock"] = true;
  }
  materialize(config);
}

}  // namespace attrforge
