#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "attrforge/capi.h"

namespace {

int fail(const af_engine* engine, af_status status) {
  std::fprintf(stderr, "attrforge: %s\n", af_last_error(engine));
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "attrforge: synthesize attribution training data, select candidates "
      "by fine-grained rewards, and evaluate citation quality"};
  app.require_subcommand(1);
  app.set_version_flag("--version", af_version());

  std::string config_path;
  long long seed = 0;
  int parallelism = 0;
  bool mock = false;
  app.add_option("--config", config_path,
                 "Config file (JSON); ATTRFORGE_CONFIG overrides");
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "Override global_seed");
  CLI::Option* par_opt = app.add_option("--parallelism", parallelism,
                                        "Concurrent work items per stage");
  app.add_flag("--mock", mock, "Bind every backend role to the in-process "
                               "mock");

  bool force = false;
  int iter = 0;
  std::string predictions;
  std::string adapter;
  bool as_json = false;

  CLI::App* synth = app.add_subcommand(
      "synth", "Synthesize attribution examples and the warm-up dataset");
  synth->add_flag("--force", force, "Redo even if up to date");

  CLI::App* iterate = app.add_subcommand(
      "iterate", "Sample, score, select, and pair candidates for one "
                 "iteration");
  iterate->add_option("--iter", iter, "Iteration number (1-based)")
      ->required();
  iterate->add_flag("--force", force, "Redo even if up to date");

  CLI::App* eval = app.add_subcommand(
      "eval", "Score a predictions file against the configured gold data");
  eval->add_option("predictions", predictions, "Predictions JSONL")
      ->required();
  eval->add_option("--adapter", adapter,
                   "Dataset adapter: asqa, eli5, strategyqa, or generic")
      ->required();
  eval->add_flag("--force", force, "Redo even if up to date");

  CLI::App* report =
      app.add_subcommand("report", "Summarize the workspace manifest");
  report->add_flag("--json", as_json, "Emit JSON instead of text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(AF_ERR_VALIDATION);
  }

  af_engine* engine = af_engine_new();
  if (engine == nullptr) {
    std::fprintf(stderr, "attrforge: out of memory\n");
    return static_cast<int>(AF_ERR_INTERNAL);
  }

  af_status status = AF_OK;
  const char* env_config = std::getenv("ATTRFORGE_CONFIG");
  const std::string effective_config =
      env_config != nullptr ? std::string(env_config) : config_path;
  if (!effective_config.empty()) {
    status = af_engine_load_config(engine, effective_config.c_str());
  }
  if (status == AF_OK && seed_opt->count() > 0) {
    status =
        af_engine_set(engine, "global_seed", std::to_string(seed).c_str());
  }
  if (status == AF_OK && par_opt->count() > 0) {
    status = af_engine_set(engine, "parallelism",
                           std::to_string(parallelism).c_str());
  }
  if (status == AF_OK && mock) {
    status = af_engine_force_mock(engine);
  }
  if (status == AF_OK) {
    status = af_engine_apply_env(engine);
  }

  if (status == AF_OK) {
    if (synth->parsed()) {
      status = af_run_synth(engine, force ? 1 : 0);
    } else if (iterate->parsed()) {
      status = af_run_iterate(engine, iter, force ? 1 : 0);
    } else if (eval->parsed()) {
      status = af_run_eval(engine, predictions.c_str(), adapter.c_str(),
                           force ? 1 : 0);
    } else if (report->parsed()) {
      char* text = nullptr;
      status = af_run_report(engine, as_json ? 1 : 0, &text);
      if (status == AF_OK && text != nullptr) {
        std::fputs(text, stdout);
      }
      af_string_free(text);
    }
  }

  int code = 0;
  if (status != AF_OK) {
    code = fail(engine, status);
  }
  af_engine_free(engine);
  return code;
}
