#include "attrforge/eval_metrics.hpp"

#include <algorithm>
#include <cctype>

namespace attrforge {

namespace {

bool entails(EntailmentJudge& judge, const std::string& premise,
             const std::string& hypothesis, std::size_t statement_index) {
  try {
    return judge.entail(premise, hypothesis).entailed;
  } catch (const TransportError&) {
    throw;
  } catch (const BackendError& e) {
    throw JudgeError("statement " + std::to_string(statement_index) + ": " +
                         e.what(),
                     static_cast<int>(statement_index));
  }
}

}  // namespace

CitationEval evaluate_citations(const AttributedResponse& response,
                                const DocumentSet& docs,
                                EntailmentJudge& judge,
                                const EvalOptions& options) {
  CitationEval eval;
  eval.per_statement.resize(response.statements.size());
  std::size_t recall_hits = 0;
  long long total_citations = 0;
  long long irrelevant_citations = 0;

  for (std::size_t i = 0; i < response.statements.size(); ++i) {
    const Statement& s = response.statements[i];
    StatementEval& se = eval.per_statement[i];
    se.recall_ok =
        !s.citations.empty() &&
        entails(judge, make_premise(docs, s.citations), s.text, i);
    if (se.recall_ok) ++recall_hits;

    if (!se.recall_ok) {
      if (!options.count_failed_recall_citations_irrelevant) continue;
      for (int k : s.citations) {
        ++total_citations;
        ++irrelevant_citations;
        se.irrelevant_citations.push_back(k);
      }
      for (int k : s.invalid_citations) {
        ++total_citations;
        ++irrelevant_citations;
        se.irrelevant_citations.push_back(k);
      }
      se.total_citations = static_cast<int>(s.citations.size() +
                                            s.invalid_citations.size());
      std::sort(se.irrelevant_citations.begin(),
                se.irrelevant_citations.end());
      continue;
    }

    for (int k : s.citations) {
      ++total_citations;
      ++se.total_citations;
      bool alone = entails(judge, make_premise(docs, {k}), s.text, i);
      if (alone) continue;
      std::vector<int> others;
      for (int other : s.citations) {
        if (other != k) others.push_back(other);
      }
      bool rest_sufficient =
          !others.empty() && entails(judge, make_premise(docs, others),
                                     s.text, i);
      if (rest_sufficient) {
        ++irrelevant_citations;
        se.irrelevant_citations.push_back(k);
      }
    }
    for (int k : s.invalid_citations) {
      ++total_citations;
      ++se.total_citations;
      ++irrelevant_citations;
      se.irrelevant_citations.push_back(k);
    }
    std::sort(se.irrelevant_citations.begin(), se.irrelevant_citations.end());
  }

  eval.recall = response.statements.empty()
                    ? 0.0
                    : static_cast<double>(recall_hits) /
                          static_cast<double>(response.statements.size());
  eval.precision =
      total_citations == 0
          ? 0.0
          : 1.0 - static_cast<double>(irrelevant_citations) /
                      static_cast<double>(total_citations);
  eval.f1 = citation_f1(eval.precision, eval.recall);
  return eval;
}

double citation_f1(double precision, double recall) {
  if (!(precision >= 0.0 && precision <= 1.0)) {
    throw std::invalid_argument("citation_f1: precision outside [0, 1]");
  }
  if (!(recall >= 0.0 && recall <= 1.0)) {
    throw std::invalid_argument("citation_f1: recall outside [0, 1]");
  }
  const double sum = precision + recall;
  if (sum == 0.0) return 0.0;
  return 2.0 * precision * recall / sum;
}

std::string to_string(CorrectnessMode mode) {
  switch (mode) {
    case CorrectnessMode::em_recall:
      return "em_recall";
    case CorrectnessMode::claim_recall:
      return "claim_recall";
    case CorrectnessMode::yesno_accuracy:
      return "yesno_accuracy";
  }
  throw std::invalid_argument("to_string: unknown CorrectnessMode");
}

CorrectnessMode correctness_mode_from_string(std::string_view s) {
  if (s == "em_recall") return CorrectnessMode::em_recall;
  if (s == "claim_recall") return CorrectnessMode::claim_recall;
  if (s == "yesno_accuracy") return CorrectnessMode::yesno_accuracy;
  throw std::invalid_argument("correctness_mode_from_string: unknown mode '" +
                              std::string(s) + "'");
}

double correctness(const std::string& response_text,
                   const CorrectnessSpec& spec, EntailmentJudge* judge) {
  switch (spec.mode) {
    case CorrectnessMode::em_recall: {
      if (spec.gold_answers.empty()) {
        throw std::invalid_argument("correctness: em_recall needs gold answers");
      }
      std::string text = to_lower(strip_citations(response_text));
      double hits = 0.0;
      for (const std::string& answer : spec.gold_answers) {
        if (answer.empty()) {
          throw std::invalid_argument("correctness: empty gold answer");
        }
        if (text.find(to_lower(answer)) != std::string::npos) hits += 1.0;
      }
      return hits / static_cast<double>(spec.gold_answers.size());
    }
    case CorrectnessMode::claim_recall: {
      if (spec.gold_claims.empty()) {
        throw std::invalid_argument("correctness: claim_recall needs claims");
      }
      if (judge == nullptr) {
        throw std::invalid_argument("correctness: claim_recall needs a judge");
      }
      std::string premise = strip_citations(response_text);
      double hits = 0.0;
      for (std::size_t i = 0; i < spec.gold_claims.size(); ++i) {
        if (entails(*judge, premise, spec.gold_claims[i], i)) hits += 1.0;
      }
      return hits / static_cast<double>(spec.gold_claims.size());
    }
    case CorrectnessMode::yesno_accuracy: {
      std::string word;
      for (char c : response_text) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
          word += static_cast<char>(
              std::tolower(static_cast<unsigned char>(c)));
        } else if (!word.empty()) {
          break;
        }
      }
      return word == (spec.gold_yes ? "yes" : "no") ? 1.0 : 0.0;
    }
  }
  throw std::invalid_argument("correctness: unknown mode");
}

}  // namespace attrforge
