#pragma once

#include <string>
#include <vector>

#include "attrforge/jsonl.hpp"
#include "attrforge/selection.hpp"

namespace attrforge {

class MissingLogprob : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PairObjective { attributability, comprehensiveness };

std::string to_string(PairObjective objective);
PairObjective pair_objective_from_string(std::string_view s);

// chosen is always the top-ranked passing candidate; rejected fails exactly
// the dimension named by `objective`.
struct PreferencePair {
  std::string query_id;
  std::string prompt;
  std::string chosen;
  std::string rejected;
  PairObjective objective = PairObjective::attributability;
  RewardScores chosen_scores;
  RewardScores rejected_scores;
  std::string chosen_id;
  std::string rejected_id;
};

struct DpoConfig {
  double beta = 0.1;
  int max_pairs_per_query = 2;  // cap per objective
};

// Pairs the top candidate against single-dimension failures:
//   attributability objective: attr below threshold, compre at or above;
//   comprehensiveness objective: attr at threshold, compre below.
// Candidates failing both dimensions match neither pattern. Per objective,
// pairs are kept by severity (distance below the violated threshold),
// duplicates of the same rejected text dropped, capped at
// max_pairs_per_query.
std::vector<PreferencePair> build_pairs(
    const std::vector<ScoredCandidate>& scored, const ScoredCandidate& top,
    const std::string& prompt, const RewardConfig& reward_config,
    const DpoConfig& dpo_config = {});

// beta * (logp_policy - logp_ref).
double dpo_reward(double logp_policy, double logp_ref,
                  const DpoConfig& config);

struct PairLoss {
  std::string query_id;
  PairObjective objective = PairObjective::attributability;
  double margin = 0.0;  // r(chosen) - r(rejected)
  double loss = 0.0;
  bool ok = false;
  std::string error;
};

struct DpoDiagnostics {
  double mean_loss = 0.0;  // over pairs that scored cleanly
  int n_pairs = 0;
  int n_scored = 0;
  std::vector<PairLoss> per_pair;
};

// -log sigma(margin), computed stably for large |margin|.
double dpo_pair_loss(double margin);

// Scores all four logprobs per pair and averages the per-pair losses.
// A pair with an unusable logprob is recorded and excluded from the mean;
// transport failures abort.
DpoDiagnostics dpo_loss(const std::vector<PreferencePair>& pairs,
                        SequenceScorer& policy, SequenceScorer& reference,
                        const DpoConfig& config, std::size_t parallelism = 1);

// JSONL rows {"prompt","chosen","rejected","objective","meta"}.
std::vector<Json> emit_dpo_dataset(const std::vector<PreferencePair>& pairs);
PreferencePair preference_pair_from_json(const Json& j);

Json to_json(const DpoDiagnostics& diagnostics);

}  // namespace attrforge
