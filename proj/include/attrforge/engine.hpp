#pragma once

#include <memory>
#include <string>

#include "attrforge/gateway.hpp"
#include "attrforge/manifest.hpp"
#include "attrforge/mock_backend.hpp"
#include "attrforge/prompts.hpp"
#include "attrforge/run_config.hpp"

namespace attrforge {

// Raised when the fraction of failed work items in a stage exceeds
// max_failure_fraction; the stage commits nothing.
class PartialFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs pipeline stages against the configured backends and keeps the
// workspace manifest in sync. Every stage writes into a staging directory
// and commits by rename, so interrupted runs never leave partial artifacts.
class Engine {
 public:
  explicit Engine(RunConfig config);

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  void run_synth(bool force = false);
  void run_iterate(int iteration, bool force = false);
  void run_eval(const std::string& predictions_path,
                const std::string& adapter, bool force = false);
  std::string run_report(bool as_json = false) const;

  const RunConfig& config() const { return config_; }
  const PromptTemplates& templates() const { return templates_; }

 private:
  std::string manifest_path() const;
  RunManifest load_or_init_manifest() const;
  bool stage_is_current(const RunManifest& manifest, const std::string& name,
                        const std::string& fingerprint) const;
  void commit_stage(RunManifest manifest, StageRecord stage) const;

  RunConfig config_;
  PromptTemplates templates_;
  std::shared_ptr<MockBackend> mock_;
  std::unique_ptr<TextGenerator> generator_http_;
  std::unique_ptr<SequenceScorer> policy_http_;
  std::unique_ptr<SequenceScorer> reference_http_;
  std::unique_ptr<EntailmentJudge> judge_http_;
  TextGenerator* generator_ = nullptr;
  SequenceScorer* policy_scorer_ = nullptr;
  SequenceScorer* reference_scorer_ = nullptr;
  EntailmentJudge* judge_ = nullptr;
  bool all_mock_ = true;
};

}  // namespace attrforge
