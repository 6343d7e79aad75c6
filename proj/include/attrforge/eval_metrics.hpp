#pragma once

#include <string>
#include <vector>

#include "attrforge/attr_core.hpp"
#include "attrforge/gateway.hpp"
#include "attrforge/rewards.hpp"

namespace attrforge {

struct StatementEval {
  bool recall_ok = false;
  std::vector<int> irrelevant_citations;  // ascending, includes invalid ones
  int total_citations = 0;                // citations counted toward precision
};

struct CitationEval {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::vector<StatementEval> per_statement;
};

struct EvalOptions {
  // true: citations on statements that fail recall count as irrelevant.
  // false: those citations are excluded from the precision pool entirely.
  bool count_failed_recall_citations_irrelevant = true;
};

// Recall: a statement passes iff it cites something and the concatenation of
// its cited documents entails it. Precision: a citation is irrelevant iff it
// alone cannot support the statement AND the remaining citations still do;
// invalid citations are always irrelevant. No citations at all -> precision 0.
CitationEval evaluate_citations(const AttributedResponse& response,
                                const DocumentSet& docs,
                                EntailmentJudge& judge,
                                const EvalOptions& options = {});

// Harmonic mean; 0 when both inputs are 0.
double citation_f1(double precision, double recall);

enum class CorrectnessMode { em_recall, claim_recall, yesno_accuracy };

std::string to_string(CorrectnessMode mode);
CorrectnessMode correctness_mode_from_string(std::string_view s);

struct CorrectnessSpec {
  CorrectnessMode mode = CorrectnessMode::em_recall;
  std::vector<std::string> gold_answers;  // em_recall
  std::vector<std::string> gold_claims;   // claim_recall
  bool gold_yes = false;                  // yesno_accuracy
};

// em_recall: fraction of gold answers present case-insensitively in the
// citation-stripped text. claim_recall: fraction of sub-claims the stripped
// text entails (judge required). yesno_accuracy: first alphabetic word
// matches the gold label.
double correctness(const std::string& response_text,
                   const CorrectnessSpec& spec,
                   EntailmentJudge* judge = nullptr);

}  // namespace attrforge
