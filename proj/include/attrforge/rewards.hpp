#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "attrforge/attr_core.hpp"
#include "attrforge/gateway.hpp"
#include "attrforge/prompts.hpp"

namespace attrforge {

// Comparisons against the attribution threshold tolerate this much float
// noise so a score assembled from exact 0/1 judgments still gates cleanly.
inline constexpr double kAttrEpsilon = 1e-12;

// Wraps a served judge/scorer error with the statement (or claim) index that
// was being scored. Transport failures are not wrapped; they abort the run.
class JudgeError : public std::runtime_error {
 public:
  JudgeError(const std::string& message, int statement_index)
      : std::runtime_error(message), statement_index_(statement_index) {}
  int statement_index() const { return statement_index_; }

 private:
  int statement_index_;
};

struct RewardScores {
  double attr = 0.0;
  double robust_log_ratio = 0.0;
  double compre = 0.0;
  double holistic = 0.0;
};

struct HolisticOptions {
  double attr_threshold = 1.0;
  // false: gate * compre / robust_ratio. true: gate * compre *
  // exp(-|log ratio|), penalizing deviation from ratio 1 in either direction.
  bool deviation_penalty = false;
};

// Evidence text for a statement: cited documents ascending, each rendered as
// "Title: <title>\n<body>", joined by blank lines.
std::string make_premise(const DocumentSet& docs,
                         const std::vector<int>& citations);

// Fraction of statements whose cited evidence entails them. Uncited
// statements score 0; an empty response scores 0.
double attr_score(const AttributedResponse& response, const DocumentSet& docs,
                  EntailmentJudge& judge);

// log P(y | q, relevant docs) - log P(y | q, all docs). Positive means the
// response leans on the relevant evidence rather than the full mixed set.
double robust_log_ratio(const std::string& question, const DocumentSet& docs,
                        const std::vector<int>& relevant_indices,
                        const std::string& response_text,
                        SequenceScorer& scorer,
                        const PromptTemplates& templates, bool yesno = false);

// Fraction of gold claims entailed by the citation-stripped response.
double compre_score(const std::vector<std::string>& gold_claims,
                    const std::string& response_text, EntailmentJudge& judge);

double holistic_score(double attr, double robust_log_ratio, double compre,
                      const HolisticOptions& options = {});

// Full per-candidate scoring: parse, attribute, weigh robustness, check
// claim coverage, combine.
RewardScores score_candidate(const std::string& question,
                             const DocumentSet& docs,
                             const std::vector<int>& relevant_indices,
                             const std::vector<std::string>& gold_claims,
                             const std::string& response_text,
                             SequenceScorer& scorer, EntailmentJudge& judge,
                             const PromptTemplates& templates,
                             const HolisticOptions& options = {},
                             bool yesno = false);

}  // namespace attrforge
