#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "attrforge/capi.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;

  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("attrforge-capi-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    fs::create_directories(path);
  }

  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_queries(const fs::path& path, int n, bool blank_first = false) {
  std::ofstream out(path.string());
  for (int i = 1; i <= n; ++i) {
    const char* text = (blank_first && i == 1)
                           ? "__blank__ probe"
                           : "What drives tidal locking of moons?";
    out << "{\"query_id\":\"c" << i << "\",\"query\":\"" << text << " ("
        << i << ")\"}\n";
  }
}

struct EngineGuard {
  af_engine* e = af_engine_new();
  ~EngineGuard() { af_engine_free(e); }
};

void point_at(af_engine* e, const TempDir& dir) {
  REQUIRE(af_engine_set(e, "paths.workspace",
                        (dir.path / "ws").string().c_str()) == AF_OK);
  REQUIRE(af_engine_set(e, "paths.queries",
                        (dir.path / "queries.jsonl").string().c_str()) ==
          AF_OK);
  REQUIRE(af_engine_set(e, "selection.n_candidates", "4") == AF_OK);
}

}  // namespace

TEST_CASE("version and handle lifecycle") {
  CHECK(af_version() != nullptr);
  CHECK(std::strcmp(af_version(), "0.1.0") == 0);
  af_engine* e = af_engine_new();
  REQUIRE(e != nullptr);
  CHECK(std::strcmp(af_last_error(e), "") == 0);
  af_engine_free(e);
  af_engine_free(nullptr);  // must be a safe no-op
}

TEST_CASE("null arguments are validation errors, not crashes") {
  EngineGuard g;
  CHECK(af_engine_load_config(nullptr, "x") == AF_ERR_VALIDATION);
  CHECK(af_engine_load_config(g.e, nullptr) == AF_ERR_VALIDATION);
  CHECK(af_engine_set(g.e, nullptr, "1") == AF_ERR_VALIDATION);
  CHECK(af_engine_set(g.e, "dpo.beta", nullptr) == AF_ERR_VALIDATION);
  CHECK(af_run_synth(nullptr, 0) == AF_ERR_VALIDATION);
  CHECK(af_run_eval(g.e, nullptr, "generic", 0) == AF_ERR_VALIDATION);
  char* out = nullptr;
  CHECK(af_run_report(g.e, 0, nullptr) == AF_ERR_VALIDATION);
  CHECK(af_run_report(nullptr, 0, &out) == AF_ERR_VALIDATION);
  af_string_free(nullptr);  // safe no-op
}

TEST_CASE("load_config reports missing files with a message") {
  EngineGuard g;
  CHECK(af_engine_load_config(g.e, "/nonexistent/attrforge.json") ==
        AF_ERR_VALIDATION);
  CHECK(std::strlen(af_last_error(g.e)) > 0);
}

TEST_CASE("set validates keys and values") {
  EngineGuard g;
  CHECK(af_engine_set(g.e, "global_seed", "7") == AF_OK);
  CHECK(af_engine_set(g.e, "dpo.beta", "0.2") == AF_OK);
  CHECK(af_engine_set(g.e, "bogus.key", "1") == AF_ERR_VALIDATION);
  CHECK(std::strlen(af_last_error(g.e)) > 0);
  CHECK(af_engine_set(g.e, "dpo.beta", "-3") == AF_ERR_VALIDATION);
  // a successful call clears the sticky error
  CHECK(af_engine_set(g.e, "dpo.beta", "0.1") == AF_OK);
  CHECK(std::strcmp(af_last_error(g.e), "") == 0);
}

TEST_CASE("mock run through the C surface") {
  ::unsetenv("ATTRFORGE_CONFIG");
  ::unsetenv("ATTRFORGE_GENERATOR_URL");
  ::unsetenv("ATTRFORGE_CRASH_POINT");
  TempDir dir;
  write_queries(dir.path / "queries.jsonl", 5);

  EngineGuard g;
  point_at(g.e, dir);
  REQUIRE(af_engine_force_mock(g.e) == AF_OK);
  REQUIRE(af_engine_apply_env(g.e) == AF_OK);

  CHECK(af_run_report(g.e, 0, nullptr) == AF_ERR_VALIDATION);
  char* out = nullptr;
  CHECK(af_run_report(g.e, 0, &out) == AF_ERR_VALIDATION);
  CHECK(out == nullptr);

  CHECK(af_run_iterate(g.e, 1, 0) == AF_ERR_VALIDATION);  // synth missing
  REQUIRE(af_run_synth(g.e, 0) == AF_OK);
  CHECK(fs::exists(dir.path / "ws" / "synth" / "synthetic.jsonl"));
  CHECK(af_run_iterate(g.e, 0, 0) == AF_ERR_VALIDATION);
  REQUIRE(af_run_iterate(g.e, 1, 0) == AF_OK);
  CHECK(fs::exists(dir.path / "ws" / "iter1" / "rsft.jsonl"));

  REQUIRE(af_run_report(g.e, 0, &out) == AF_OK);
  REQUIRE(out != nullptr);
  std::string text(out);
  af_string_free(out);
  CHECK(text.find("run run-") != std::string::npos);
  CHECK(text.find("iteration") != std::string::npos);

  char* json_out = nullptr;
  REQUIRE(af_run_report(g.e, 1, &json_out) == AF_OK);
  std::string json_text(json_out);
  af_string_free(json_out);
  CHECK(json_text.find("\"run_id\"") != std::string::npos);

  CHECK(af_run_eval(g.e, "missing.jsonl", "asqa2", 0) == AF_ERR_VALIDATION);
}

TEST_CASE("transport and partial failures map to distinct codes") {
  ::unsetenv("ATTRFORGE_GENERATOR_URL");
  TempDir dir;
  write_queries(dir.path / "queries.jsonl", 3);
  {
    EngineGuard g;
    point_at(g.e, dir);
    REQUIRE(af_engine_force_mock(g.e) == AF_OK);
    REQUIRE(af_engine_set(g.e, "backends.generator.base_url",
                          "http://127.0.0.1:1") == AF_OK);
    REQUIRE(af_engine_set(g.e, "backends.generator.mock", "false") == AF_OK);
    REQUIRE(af_engine_set(g.e, "backends.generator.max_retries", "1") ==
            AF_OK);
    REQUIRE(af_engine_set(g.e, "backends.generator.retry_backoff_ms", "1") ==
            AF_OK);
    CHECK(af_run_synth(g.e, 0) == AF_ERR_BACKEND_UNREACHABLE);
    CHECK(std::strlen(af_last_error(g.e)) > 0);
  }

  TempDir dir2;
  write_queries(dir2.path / "queries.jsonl", 4, /*blank_first=*/true);
  EngineGuard g;
  point_at(g.e, dir2);
  REQUIRE(af_engine_force_mock(g.e) == AF_OK);
  REQUIRE(af_engine_set(g.e, "max_failure_fraction", "0.01") == AF_OK);
  CHECK(af_run_synth(g.e, 0) == AF_ERR_PARTIAL_FAILURE);
}
