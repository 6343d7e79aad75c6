#pragma once

#include <optional>
#include <string>
#include <vector>

#include "attrforge/jsonl.hpp"
#include "attrforge/rewards.hpp"
#include "attrforge/synthesis.hpp"

namespace attrforge {

struct ScoredCandidate {
  std::string candidate_id;
  std::string query_id;
  std::string text;
  AttributedResponse parsed;
  RewardScores scores;
  bool passed = false;
  std::optional<int> rank;  // assigned among passed candidates only
  std::string error;        // non-empty when scoring failed
};

struct SampleConfig {
  int n = 16;
  double temperature = 1.0;
  double top_p = 0.95;
  int max_tokens = 1024;
};

struct RewardConfig {
  double attr_threshold = 1.0;
  double compre_threshold = 0.8;
  bool deviation_penalty = false;
};

struct QueryStats {
  std::string query_id;
  int n_sampled = 0;
  int n_passed = 0;
  std::optional<std::string> top_candidate_id;
};

// 1-based positions of the example's own evidence (distractors excluded).
std::vector<int> relevant_doc_indices(const DocumentSet& docs);

std::vector<std::string> claim_texts(const SyntheticExample& example);

// n generations from the attribution prompt over the example's documents.
std::vector<std::string> sample_candidates(const SyntheticExample& example,
                                           const SampleConfig& config,
                                           std::uint64_t seed,
                                           TextGenerator& gen,
                                           const PromptTemplates& templates,
                                           bool yesno = false);

bool passes_gate(const RewardScores& scores, const RewardConfig& config);

// Scores every candidate and applies the thresholds. A scoring failure marks
// that candidate failed and moves on; transport failures abort the batch.
std::vector<ScoredCandidate> score_and_gate(
    const SyntheticExample& example, const std::vector<std::string>& texts,
    SequenceScorer& scorer, EntailmentJudge& judge,
    const PromptTemplates& templates, const RewardConfig& config,
    std::size_t parallelism = 1, bool yesno = false);

// Strict total order: holistic desc, compre desc, |log ratio| asc, then
// candidate_id.
bool candidate_order(const ScoredCandidate& a, const ScoredCandidate& b);

// Assigns 1-based ranks to passed candidates and returns the best, if any.
std::optional<ScoredCandidate> rank_and_select(
    std::vector<ScoredCandidate>& scored);

// Micro-averaged pass rate over all sampled candidates.
double pass_rate(const std::vector<QueryStats>& stats);

// One-decimal percentage, e.g. 0.425 -> "42.5%".
std::string format_percent(double fraction);

struct RsftEntry {
  std::string prompt;
  ScoredCandidate candidate;
};

// SFT records from selected candidates; rejects unpassed candidates and
// duplicate query ids.
std::vector<Json> build_rsft_dataset(const std::vector<RsftEntry>& entries);

Json to_json(const RewardScores& scores);
RewardScores reward_scores_from_json(const Json& j);
Json to_json(const ScoredCandidate& candidate);
// Reads a candidate dump row; `parsed` is left empty.
ScoredCandidate scored_candidate_from_json(const Json& j);

}  // namespace attrforge
