#include "attrforge/rewards.hpp"

#include <algorithm>
#include <cmath>

namespace attrforge {

namespace {

std::vector<int> checked_indices(const DocumentSet& docs,
                                 const std::vector<int>& indices,
                                 const char* what) {
  if (indices.empty()) {
    throw std::invalid_argument(std::string(what) + ": no indices given");
  }
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (int k : sorted) {
    if (!docs.resolves(k)) {
      throw std::invalid_argument(std::string(what) + ": index " +
                                  std::to_string(k) + " outside [1, " +
                                  std::to_string(docs.size()) + "]");
    }
  }
  return sorted;
}

}  // namespace

std::string make_premise(const DocumentSet& docs,
                         const std::vector<int>& citations) {
  std::vector<int> sorted = checked_indices(docs, citations, "make_premise");
  std::string premise;
  for (int k : sorted) {
    const Document& d = docs.at_index(k);
    if (!premise.empty()) premise += "\n\n";
    premise += "Title: " + d.title + "\n" + d.body;
  }
  return premise;
}

double attr_score(const AttributedResponse& response, const DocumentSet& docs,
                  EntailmentJudge& judge) {
  if (response.statements.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < response.statements.size(); ++i) {
    const Statement& s = response.statements[i];
    if (s.citations.empty()) continue;
    try {
      std::string premise = make_premise(docs, s.citations);
      if (judge.entail(premise, s.text).entailed) total += 1.0;
    } catch (const TransportError&) {
      throw;
    } catch (const BackendError& e) {
      throw JudgeError("statement " + std::to_string(i) + ": " + e.what(),
                       static_cast<int>(i));
    }
  }
  return total / static_cast<double>(response.statements.size());
}

double robust_log_ratio(const std::string& question, const DocumentSet& docs,
                        const std::vector<int>& relevant_indices,
                        const std::string& response_text,
                        SequenceScorer& scorer,
                        const PromptTemplates& templates, bool yesno) {
  if (response_text.empty()) {
    throw std::invalid_argument("robust_log_ratio: empty response text");
  }
  std::vector<int> indices =
      checked_indices(docs, relevant_indices, "robust_log_ratio");
  DocumentSet relevant;
  for (int k : indices) relevant.docs.push_back(docs.at_index(k));
  std::string with_relevant =
      attribution_prompt(templates, question, relevant, yesno);
  std::string with_all = attribution_prompt(templates, question, docs, yesno);
  double lp_relevant = scorer.logprob(with_relevant, response_text).logprob_sum;
  double lp_all = scorer.logprob(with_all, response_text).logprob_sum;
  return lp_relevant - lp_all;
}

double compre_score(const std::vector<std::string>& gold_claims,
                    const std::string& response_text, EntailmentJudge& judge) {
  if (gold_claims.empty()) {
    throw std::invalid_argument("compre_score: no gold claims");
  }
  if (response_text.empty()) {
    throw std::invalid_argument("compre_score: empty response text");
  }
  std::string premise = strip_citations(response_text);
  double total = 0.0;
  for (std::size_t i = 0; i < gold_claims.size(); ++i) {
    try {
      if (judge.entail(premise, gold_claims[i]).entailed) total += 1.0;
    } catch (const TransportError&) {
      throw;
    } catch (const BackendError& e) {
      throw JudgeError("claim " + std::to_string(i) + ": " + e.what(),
                       static_cast<int>(i));
    }
  }
  return total / static_cast<double>(gold_claims.size());
}

double holistic_score(double attr, double robust_log_ratio, double compre,
                      const HolisticOptions& options) {
  if (!(attr >= 0.0 && attr <= 1.0)) {
    throw std::invalid_argument("holistic_score: attr outside [0, 1]");
  }
  if (!(compre >= 0.0 && compre <= 1.0)) {
    throw std::invalid_argument("holistic_score: compre outside [0, 1]");
  }
  if (!std::isfinite(robust_log_ratio)) {
    throw std::invalid_argument("holistic_score: non-finite log ratio");
  }
  if (attr < options.attr_threshold - kAttrEpsilon) return 0.0;
  if (options.deviation_penalty) {
    return compre * std::exp(-std::abs(robust_log_ratio));
  }
  return compre * std::exp(-robust_log_ratio);
}

RewardScores score_candidate(const std::string& question,
                             const DocumentSet& docs,
                             const std::vector<int>& relevant_indices,
                             const std::vector<std::string>& gold_claims,
                             const std::string& response_text,
                             SequenceScorer& scorer, EntailmentJudge& judge,
                             const PromptTemplates& templates,
                             const HolisticOptions& options, bool yesno) {
  RewardScores scores;
  AttributedResponse parsed =
      parse_response(response_text, static_cast<int>(docs.size()));
  scores.attr = attr_score(parsed, docs, judge);
  scores.robust_log_ratio =
      robust_log_ratio(question, docs, relevant_indices, response_text,
                       scorer, templates, yesno);
  scores.compre = compre_score(gold_claims, response_text, judge);
  scores.holistic = holistic_score(scores.attr, scores.robust_log_ratio,
                                   scores.compre, options);
  return scores;
}

}  // namespace attrforge
