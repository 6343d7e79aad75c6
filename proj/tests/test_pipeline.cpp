#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "attrforge/digest.hpp"
#include "attrforge/engine.hpp"
#include "attrforge/jsonl.hpp"
#include "attrforge/manifest.hpp"
#include "attrforge/run_config.hpp"
#include "oracles.hpp"

using namespace attrforge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;

  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("attrforge-ut-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    fs::create_directories(path);
  }

  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct CoutCapture {
  std::ostringstream oss;
  std::streambuf* old;

  CoutCapture() : old(std::cout.rdbuf(oss.rdbuf())) {}
  ~CoutCapture() { std::cout.rdbuf(old); }
  std::string text() const { return oss.str(); }
};

void write_queries(const fs::path& path, int n, int blank_at = -1) {
  std::vector<Json> rows;
  for (int i = 1; i <= n; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "q%03d", i);
    std::string text = i == blank_at
                           ? "__blank__ query " + std::to_string(i)
                           : "How does subject " + std::to_string(i) +
                                 " behave under load?";
    rows.push_back(Json{{"query_id", id}, {"query", text}});
  }
  write_jsonl(path.string(), rows);
}

RunConfig test_config(const TempDir& dir, int n_queries, int blank_at = -1) {
  write_queries(dir.path / "queries.jsonl", n_queries, blank_at);
  RunConfig c = config_defaults();
  config_set(c, "paths.workspace", (dir.path / "ws").string());
  config_set(c, "paths.queries", (dir.path / "queries.jsonl").string());
  config_set(c, "selection.n_candidates", "4");
  config_set(c, "parallelism", "2");
  return c;
}

void clear_env() {
  for (const char* var :
       {"ATTRFORGE_CONFIG", "ATTRFORGE_GENERATOR_URL",
        "ATTRFORGE_GENERATOR_TOKEN", "ATTRFORGE_POLICY_SCORER_URL",
        "ATTRFORGE_POLICY_SCORER_TOKEN", "ATTRFORGE_REFERENCE_SCORER_URL",
        "ATTRFORGE_REFERENCE_SCORER_TOKEN", "ATTRFORGE_JUDGE_URL",
        "ATTRFORGE_JUDGE_TOKEN", "ATTRFORGE_CRASH_POINT"}) {
    ::unsetenv(var);
  }
}

}  // namespace

TEST_CASE("config defaults materialize and reject junk") {
  clear_env();
  RunConfig c = config_defaults();
  CHECK(c.global_seed == 42);
  CHECK(c.parallelism == 4);
  CHECK(c.warmup_fraction == 0.2);
  CHECK(c.sampling.n == 16);
  CHECK(c.dpo.beta == 0.1);
  CHECK(c.generator.mock);

  CHECK_THROWS_WITH_AS(config_from_json(Json{{"nonsense", 1}}),
                       doctest::Contains("nonsense"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      config_from_json(Json{{"paths", Json{{"workdir", "x"}}}}),
      doctest::Contains("paths.workdir"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(Json{{"max_failure_fraction", 2.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      config_from_json(Json{{"selection", Json{{"n_candidates", 0}}}}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      config_from_json(Json{{"selection", Json{{"robust_mode", "bogus"}}}}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      config_from_json(Json{{"synthesis", Json{{"top_p", 0.0}}}}),
      std::invalid_argument);

  RunConfig dev = config_from_json(
      Json{{"selection", Json{{"robust_mode", "deviation_penalty"}}}});
  CHECK(dev.rewards.deviation_penalty);
}

TEST_CASE("config_set navigates dotted keys") {
  RunConfig c = config_defaults();
  config_set(c, "dpo.beta", "0.25");
  CHECK(c.dpo.beta == 0.25);
  config_set(c, "backends.judge.entail_threshold", "0.75");
  CHECK(c.judge.endpoint.entail_threshold == 0.75);
  config_set(c, "paths.workspace", "elsewhere");
  CHECK(c.workspace == "elsewhere");
  CHECK_THROWS_AS(config_set(c, "no.such.key", "1"), std::invalid_argument);
  CHECK_THROWS_AS(config_set(c, "dpo.beta", "-1"), std::invalid_argument);
}

TEST_CASE("environment overrides beat file values") {
  clear_env();
  RunConfig c = config_from_json(Json{
      {"backends",
       Json{{"generator",
             Json{{"mock", false}, {"base_url", "http://file-host"}}}}}});
  CHECK(c.generator.endpoint.base_url == "http://file-host");
  CHECK_FALSE(c.generator.mock);

  ::setenv("ATTRFORGE_GENERATOR_URL", "http://env-host", 1);
  ::setenv("ATTRFORGE_GENERATOR_TOKEN", "tok", 1);
  config_apply_env(c);
  CHECK(c.generator.endpoint.base_url == "http://env-host");
  CHECK(c.generator.endpoint.auth_token == "tok");
  CHECK_FALSE(c.generator.mock);

  ::setenv("ATTRFORGE_GENERATOR_URL", "mock:", 1);
  config_apply_env(c);
  CHECK(c.generator.mock);
  clear_env();

  RunConfig forced = config_from_json(Json{
      {"backends",
       Json{{"judge", Json{{"mock", false}, {"base_url", "http://x"}}}}}});
  config_force_mock(forced);
  CHECK(forced.judge.mock);
  CHECK(forced.generator.mock);
}

TEST_CASE("manifest round trip and atomic save") {
  TempDir dir;
  RunManifest m;
  m.run_id = "run-test";
  m.config_snapshot = Json{{"k", "v"}};
  StageRecord stage;
  stage.name = "synth";
  stage.fingerprint = "fp";
  stage.artifacts.push_back(ArtifactRecord{"synth/a.jsonl", "deadbeef", 12});
  stage.counters = Json{{"examples", 3}};
  stage.seconds = 0.0;
  upsert_stage(m, stage);

  std::string path = (dir.path / "manifest.json").string();
  save_manifest_atomic(m, path);
  CHECK_FALSE(fs::exists(path + ".tmp"));
  RunManifest back = load_manifest(path);
  CHECK(back.run_id == "run-test");
  REQUIRE(back.stages.size() == 1);
  CHECK(back.stages[0].artifacts[0].digest == "deadbeef");
  CHECK(find_stage(back, "synth") != nullptr);
  CHECK(find_stage(back, "iter1") == nullptr);

  stage.fingerprint = "fp2";
  upsert_stage(back, stage);
  CHECK(back.stages.size() == 1);
  CHECK(back.stages[0].fingerprint == "fp2");
}

TEST_CASE("synth stage writes artifacts with matching digests") {
  clear_env();
  TempDir dir;
  RunConfig c = test_config(dir, 10);
  Engine engine(c);
  CoutCapture cap;
  engine.run_synth();

  fs::path ws = dir.path / "ws";
  REQUIRE(fs::exists(ws / "synth" / "synthetic.jsonl"));
  REQUIRE(fs::exists(ws / "synth" / "warmup.jsonl"));
  REQUIRE(fs::exists(ws / "synth" / "synth_report.json"));
  REQUIRE(fs::exists(ws / "manifest.json"));
  CHECK_FALSE(fs::exists(ws / ".staging-synth"));

  RunManifest m = load_manifest((ws / "manifest.json").string());
  const StageRecord* stage = find_stage(m, "synth");
  REQUIRE(stage != nullptr);
  CHECK(stage->counters.at("examples") == 10);
  CHECK(stage->counters.at("failed") == 0);
  CHECK(stage->counters.at("warmup_records") == 2);  // ceil(0.2 * 10)
  CHECK(stage->seconds == 0.0);  // mock runs record zero timings
  REQUIRE(stage->artifacts.size() == 3);
  for (const ArtifactRecord& a : stage->artifacts) {
    fs::path file = ws / a.path;
    REQUIRE(fs::exists(file));
    CHECK(sha256_file_hex(file.string()) == a.digest);
    CHECK(static_cast<long long>(fs::file_size(file)) == a.bytes);
  }
  CHECK(read_jsonl((ws / "synth" / "synthetic.jsonl").string()).size() == 10);
  CHECK(read_jsonl((ws / "synth" / "warmup.jsonl").string()).size() == 2);
}

TEST_CASE("completed stages resume as no-ops unless forced") {
  clear_env();
  TempDir dir;
  Engine engine(test_config(dir, 6));
  {
    CoutCapture cap;
    engine.run_synth();
    CHECK(cap.text().find("synth: 6/6") != std::string::npos);
  }
  {
    CoutCapture cap;
    engine.run_synth();
    CHECK(cap.text().find("up to date") != std::string::npos);
  }
  {
    CoutCapture cap;
    engine.run_synth(true);
    CHECK(cap.text().find("up to date") == std::string::npos);
    CHECK(cap.text().find("synth: 6/6") != std::string::npos);
  }
}

TEST_CASE("iterate requires synth artifacts first") {
  clear_env();
  TempDir dir;
  Engine engine(test_config(dir, 4));
  CHECK_THROWS_WITH_AS(engine.run_iterate(1),
                       doctest::Contains("run synth first"),
                       std::invalid_argument);
  CHECK_THROWS_AS(engine.run_iterate(0), std::invalid_argument);
}

TEST_CASE("iterate emits candidates, rsft, pairs, and consistent stats") {
  clear_env();
  TempDir dir;
  RunConfig c = test_config(dir, 6);
  Engine engine(c);
  CoutCapture cap;
  engine.run_synth();
  engine.run_iterate(1);

  fs::path iter = dir.path / "ws" / "iter1";
  std::vector<Json> candidates =
      read_jsonl((iter / "candidates.jsonl").string());
  CHECK(candidates.size() == 24);  // 6 queries x 4 candidates

  Json report = Json::parse(
      std::ifstream((iter / "selection_report.json").string()));
  oracles::OraclePassRate recount = oracles::recount_candidates(candidates);
  CHECK(report.at("aggregate").at("n_sampled") == recount.sampled);
  CHECK(report.at("aggregate").at("n_passed") == recount.passed);
  CHECK(report.at("aggregate").at("pass_rate").get<double>() ==
        recount.rate());

  std::vector<Json> rsft = read_jsonl((iter / "rsft.jsonl").string());
  CHECK(rsft.size() <= 6);
  for (const Json& row : rsft) {
    CHECK(row.at("meta").at("scores").at("attr").get<double>() >=
          1.0 - 1e-12);
    CHECK(row.at("meta").at("scores").at("compre").get<double>() >= 0.8);
  }

  std::vector<Json> pairs = read_jsonl((iter / "dpo_pairs.jsonl").string());
  for (const Json& row : pairs) {
    CHECK((row.at("objective") == "attributability" ||
           row.at("objective") == "comprehensiveness"));
    CHECK(row.at("chosen") != row.at("rejected"));
  }

  Json diag = Json::parse(
      std::ifstream((iter / "dpo_diagnostics.json").string()));
  if (diag.at("n_scored").get<int>() > 0) {
    // mock policy == mock reference, so every margin is zero
    CHECK(std::abs(diag.at("mean_loss").get<double>() - std::log(2.0)) <=
          1e-9);
  }

  // Three iterations coexist under one manifest.
  engine.run_iterate(2);
  engine.run_iterate(3);
  RunManifest m =
      load_manifest((dir.path / "ws" / "manifest.json").string());
  CHECK(find_stage(m, "iter1") != nullptr);
  CHECK(find_stage(m, "iter2") != nullptr);
  CHECK(find_stage(m, "iter3") != nullptr);
  CHECK(fs::exists(dir.path / "ws" / "iter2" / "rsft.jsonl"));
  CHECK(fs::exists(dir.path / "ws" / "iter3" / "dpo_pairs.jsonl"));
}

TEST_CASE("eval computes macro metrics over the gold join") {
  clear_env();
  TempDir dir;
  RunConfig c = test_config(dir, 4);
  write_jsonl(
      (dir.path / "gold.jsonl").string(),
      {Json{{"query_id", "e1"},
            {"docs", Json::array({Json{{"title", "Eiffel Tower"},
                                       {"body",
                                        "The Eiffel Tower stands in Paris "
                                        "and was completed in 1889."}}})},
            {"gold",
             Json{{"mode", "em_recall"},
                  {"answers", Json::array({"1889", "Paris"})}}}},
       Json{{"query_id", "e2"},
            {"docs",
             Json::array(
                 {Json{{"title", "Honey"},
                       {"body", "Honey never spoils because low moisture "
                                "prevents bacterial growth."}},
                  Json{{"title", "Tombs"},
                       {"body", "Archaeologists found edible honey in "
                                "ancient Egyptian tombs."}}})},
            {"gold", Json{{"mode", "claim_recall"},
                          {"claims", Json::array({"Honey never spoils.",
                                                  "Honey was found in "
                                                  "Egyptian tombs."})}}}},
       Json{{"query_id", "e3"},
            {"docs", Json::array({Json{{"title", "Everest"},
                                       {"body", "Mount Everest is the "
                                                "highest mountain above sea "
                                                "level."}}})},
            {"gold", Json{{"mode", "yesno_accuracy"}, {"answer", true}}}}});
  write_jsonl(
      (dir.path / "pred.jsonl").string(),
      {Json{{"query_id", "e1"},
            {"response", "The Eiffel Tower was completed in 1889 [1]. It "
                         "stands in Paris [1]."}},
       Json{{"query_id", "e2"},
            {"response",
             "Honey never spoils because low moisture prevents bacterial "
             "growth [1]. Edible honey was found in Egyptian tombs [2]."}},
       Json{{"query_id", "e3"},
            {"response", "Yes. Mount Everest is the highest mountain above "
                         "sea level [1]."}}});
  config_set(c, "paths.eval_data", (dir.path / "gold.jsonl").string());

  Engine engine(c);
  CoutCapture cap;
  engine.run_eval((dir.path / "pred.jsonl").string(), "generic");

  fs::path eval_dir = dir.path / "ws" / "eval";
  Json report =
      Json::parse(std::ifstream((eval_dir / "eval_report.json").string()));
  CHECK(report.at("macro").at("correctness").get<double>() ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.at("macro").at("citation_recall").get<double>() ==
        doctest::Approx(2.5 / 3.0).epsilon(1e-12));
  CHECK(report.at("macro").at("citation_precision").get<double>() ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.at("macro").at("citation_f1").get<double>() ==
        doctest::Approx((1.0 + 1.0 + 2.0 / 3.0) / 3.0).epsilon(1e-12));

  std::ifstream txt((eval_dir / "eval_report.txt").string());
  std::stringstream buffer;
  buffer << txt.rdbuf();
  CHECK(buffer.str().find("83.3%") != std::string::npos);
  CHECK(buffer.str().find("100.0%") != std::string::npos);
}

TEST_CASE("eval enforces a strict id join") {
  clear_env();
  TempDir dir;
  RunConfig c = test_config(dir, 4);
  write_jsonl((dir.path / "gold.jsonl").string(),
              {Json{{"query_id", "g1"},
                    {"docs", Json::array({Json{{"title", "T"},
                                               {"body", "alpha beta"}}})},
                    {"gold", Json{{"mode", "em_recall"},
                                  {"answers", Json::array({"alpha"})}}}}});
  config_set(c, "paths.eval_data", (dir.path / "gold.jsonl").string());
  write_jsonl((dir.path / "pred.jsonl").string(), {});
  Engine engine(c);
  CHECK_THROWS_WITH_AS(
      engine.run_eval((dir.path / "pred.jsonl").string(), "generic"),
      doctest::Contains("g1"), std::invalid_argument);

  write_jsonl((dir.path / "pred.jsonl").string(),
              {Json{{"query_id", "g1"}, {"response", "Alpha beta [1]."}},
               Json{{"query_id", "ghost"}, {"response", "x."}}});
  Engine engine2(c);
  CHECK_THROWS_WITH_AS(
      engine2.run_eval((dir.path / "pred.jsonl").string(), "generic"),
      doctest::Contains("ghost"), std::invalid_argument);

  Engine engine3(c);
  CHECK_THROWS_AS(
      engine3.run_eval((dir.path / "pred.jsonl").string(), "asqa2"),
      std::invalid_argument);
}

TEST_CASE("failure fraction splits commit from abort") {
  clear_env();
  TempDir ok_dir;
  RunConfig tolerant = test_config(ok_dir, 10, 3);  // one failing query
  config_set(tolerant, "max_failure_fraction", "0.2");
  Engine ok_engine(tolerant);
  {
    CoutCapture cap;
    ok_engine.run_synth();
  }
  Json report = Json::parse(std::ifstream(
      (ok_dir.path / "ws" / "synth" / "synth_report.json").string()));
  CHECK(report.at("n_failed") == 1);
  CHECK(report.at("n_synthesized") == 9);
  REQUIRE(report.at("failures").size() == 1);
  CHECK(report.at("failures")[0].at("query_id") == "q003");

  TempDir abort_dir;
  RunConfig strict = test_config(abort_dir, 10, 3);
  config_set(strict, "max_failure_fraction", "0.05");
  Engine strict_engine(strict);
  CHECK_THROWS_AS(
      [&] {
        CoutCapture cap;
        strict_engine.run_synth();
      }(),
      PartialFailure);
  CHECK_FALSE(fs::exists(abort_dir.path / "ws" / "synth"));
  CHECK_FALSE(fs::exists(abort_dir.path / "ws" / "manifest.json"));
}

TEST_CASE("unreachable generator aborts with a transport error") {
  clear_env();
  TempDir dir;
  RunConfig c = test_config(dir, 3);
  config_set(c, "backends.generator.base_url", "http://127.0.0.1:1");
  config_set(c, "backends.generator.mock", "false");
  config_set(c, "backends.generator.max_retries", "1");
  config_set(c, "backends.generator.retry_backoff_ms", "1");
  config_set(c, "backends.generator.timeout_ms", "500");
  Engine engine(c);
  CHECK_THROWS_AS(
      [&] {
        CoutCapture cap;
        engine.run_synth();
      }(),
      TransportError);
  CHECK_FALSE(fs::exists(dir.path / "ws" / "synth"));
}

TEST_CASE("report summarizes stages and flags digest drift") {
  clear_env();
  TempDir dir;
  RunConfig c = test_config(dir, 5);
  Engine engine(c);
  {
    CoutCapture cap;
    engine.run_synth();
    engine.run_iterate(1);
  }
  std::string text = engine.run_report();
  CHECK(text.find("run run-") != std::string::npos);
  CHECK(text.find("iteration") != std::string::npos);
  CHECK(text.find("%") != std::string::npos);
  CHECK(text.find("warnings") == std::string::npos);

  std::string json_text = engine.run_report(true);
  Json parsed = Json::parse(json_text);
  CHECK(parsed.at("iterations").size() == 1);
  CHECK(parsed.at("warnings").empty());

  // Corrupt one artifact and delete another.
  fs::path candidates = dir.path / "ws" / "iter1" / "candidates.jsonl";
  std::ofstream(candidates.string(), std::ios::app) << "{\"extra\":1}\n";
  fs::remove(dir.path / "ws" / "iter1" / "rsft.jsonl");
  std::string warned = engine.run_report();
  CHECK(warned.find("digest mismatch: iter1/candidates.jsonl") !=
        std::string::npos);
  CHECK(warned.find("missing artifact: iter1/rsft.jsonl") !=
        std::string::npos);
}

TEST_CASE("report without a manifest is an error") {
  clear_env();
  TempDir dir;
  Engine engine(test_config(dir, 3));
  CHECK_THROWS_AS(engine.run_report(), std::runtime_error);
}
