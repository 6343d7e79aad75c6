#include "attrforge/preference.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "attrforge/parallel.hpp"

namespace attrforge {

namespace {

void check_config(const DpoConfig& config) {
  if (!(config.beta > 0.0)) {
    throw std::invalid_argument("dpo: beta must be > 0");
  }
  if (config.max_pairs_per_query < 0) {
    throw std::invalid_argument("dpo: max_pairs_per_query must be >= 0");
  }
}

LogprobResult checked_logprob(SequenceScorer& scorer,
                              const std::string& context,
                              const std::string& continuation,
                              const std::string& what) {
  LogprobResult lp = scorer.logprob(context, continuation);
  if (lp.token_count < 1 || !std::isfinite(lp.logprob_sum)) {
    throw MissingLogprob(what + ": unusable logprob (tokens " +
                         std::to_string(lp.token_count) + ")");
  }
  return lp;
}

}  // namespace

std::string to_string(PairObjective objective) {
  switch (objective) {
    case PairObjective::attributability:
      return "attributability";
    case PairObjective::comprehensiveness:
      return "comprehensiveness";
  }
  throw std::invalid_argument("to_string: unknown PairObjective");
}

PairObjective pair_objective_from_string(std::string_view s) {
  if (s == "attributability") return PairObjective::attributability;
  if (s == "comprehensiveness") return PairObjective::comprehensiveness;
  throw std::invalid_argument("pair_objective_from_string: unknown objective '" +
                              std::string(s) + "'");
}

std::vector<PreferencePair> build_pairs(
    const std::vector<ScoredCandidate>& scored, const ScoredCandidate& top,
    const std::string& prompt, const RewardConfig& reward_config,
    const DpoConfig& dpo_config) {
  check_config(dpo_config);
  if (!top.passed || !top.error.empty()) {
    throw std::invalid_argument("build_pairs: top candidate " +
                                top.candidate_id + " did not pass the gate");
  }
  struct Deficient {
    const ScoredCandidate* candidate;
    double severity;
  };
  std::vector<Deficient> attr_deficient;
  std::vector<Deficient> compre_deficient;
  for (const ScoredCandidate& c : scored) {
    if (!c.error.empty()) continue;
    if (c.text == top.text) continue;
    const bool attr_ok =
        c.scores.attr >= reward_config.attr_threshold - kAttrEpsilon;
    const bool compre_ok =
        c.scores.compre >= reward_config.compre_threshold;
    if (!attr_ok && compre_ok) {
      attr_deficient.push_back(
          {&c, reward_config.attr_threshold - c.scores.attr});
    } else if (attr_ok && !compre_ok) {
      compre_deficient.push_back(
          {&c, reward_config.compre_threshold - c.scores.compre});
    }
  }

  auto emit = [&](std::vector<Deficient>& pool, PairObjective objective,
                  std::vector<PreferencePair>& out) {
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Deficient& a, const Deficient& b) {
                       if (a.severity != b.severity) {
                         return a.severity > b.severity;
                       }
                       return a.candidate->candidate_id <
                              b.candidate->candidate_id;
                     });
    std::unordered_set<std::string> seen_texts;
    int taken = 0;
    for (const Deficient& d : pool) {
      if (taken >= dpo_config.max_pairs_per_query) break;
      if (!seen_texts.insert(d.candidate->text).second) continue;
      PreferencePair pair;
      pair.query_id = top.query_id;
      pair.prompt = prompt;
      pair.chosen = top.text;
      pair.rejected = d.candidate->text;
      pair.objective = objective;
      pair.chosen_scores = top.scores;
      pair.rejected_scores = d.candidate->scores;
      pair.chosen_id = top.candidate_id;
      pair.rejected_id = d.candidate->candidate_id;
      out.push_back(std::move(pair));
      ++taken;
    }
  };

  std::vector<PreferencePair> pairs;
  emit(attr_deficient, PairObjective::attributability, pairs);
  emit(compre_deficient, PairObjective::comprehensiveness, pairs);
  return pairs;
}

double dpo_reward(double logp_policy, double logp_ref,
                  const DpoConfig& config) {
  check_config(config);
  if (!std::isfinite(logp_policy) || !std::isfinite(logp_ref)) {
    throw std::invalid_argument("dpo_reward: non-finite logprob");
  }
  return config.beta * (logp_policy - logp_ref);
}

double dpo_pair_loss(double margin) {
  // -log sigma(m) = softplus(-m) = max(-m, 0) + log1p(exp(-|m|))
  return std::max(-margin, 0.0) + std::log1p(std::exp(-std::abs(margin)));
}

DpoDiagnostics dpo_loss(const std::vector<PreferencePair>& pairs,
                        SequenceScorer& policy, SequenceScorer& reference,
                        const DpoConfig& config, std::size_t parallelism) {
  check_config(config);
  DpoDiagnostics diagnostics;
  diagnostics.n_pairs = static_cast<int>(pairs.size());
  auto score_one = [&](std::size_t i) -> PairLoss {
    const PreferencePair& pair = pairs[i];
    PairLoss result;
    result.query_id = pair.query_id;
    result.objective = pair.objective;
    const std::string tag = "pair " + std::to_string(i);
    try {
      double pol_chosen =
          checked_logprob(policy, pair.prompt, pair.chosen, tag + " chosen")
              .logprob_sum;
      double pol_rejected = checked_logprob(policy, pair.prompt, pair.rejected,
                                            tag + " rejected")
                                .logprob_sum;
      double ref_chosen = checked_logprob(reference, pair.prompt, pair.chosen,
                                          tag + " chosen ref")
                              .logprob_sum;
      double ref_rejected = checked_logprob(reference, pair.prompt,
                                            pair.rejected, tag + " rejected ref")
                                .logprob_sum;
      double reward_chosen = dpo_reward(pol_chosen, ref_chosen, config);
      double reward_rejected = dpo_reward(pol_rejected, ref_rejected, config);
      result.margin = reward_chosen - reward_rejected;
      result.loss = dpo_pair_loss(result.margin);
      result.ok = true;
    } catch (const TransportError&) {
      throw;
    } catch (const std::exception& e) {
      result.ok = false;
      result.error = e.what();
    }
    return result;
  };
  diagnostics.per_pair = parallel_map(pairs.size(), parallelism, score_one);
  double total = 0.0;
  for (const PairLoss& p : diagnostics.per_pair) {
    if (!p.ok) continue;
    total += p.loss;
    ++diagnostics.n_scored;
  }
  diagnostics.mean_loss =
      diagnostics.n_scored > 0 ? total / diagnostics.n_scored : 0.0;
  return diagnostics;
}

std::vector<Json> emit_dpo_dataset(const std::vector<PreferencePair>& pairs) {
  std::vector<Json> rows;
  rows.reserve(pairs.size());
  for (const PreferencePair& pair : pairs) {
    if (pair.chosen.empty() || pair.rejected.empty()) {
      throw std::invalid_argument("emit_dpo_dataset: empty response in pair for " +
                                  pair.query_id);
    }
    if (pair.chosen == pair.rejected) {
      throw std::invalid_argument(
          "emit_dpo_dataset: chosen equals rejected for " + pair.query_id);
    }
    Json meta{{"query_id", pair.query_id},
              {"chosen_id", pair.chosen_id},
              {"rejected_id", pair.rejected_id},
              {"chosen_scores", to_json(pair.chosen_scores)},
              {"rejected_scores", to_json(pair.rejected_scores)}};
    rows.push_back(Json{{"prompt", pair.prompt},
                        {"chosen", pair.chosen},
                        {"rejected", pair.rejected},
                        {"objective", to_string(pair.objective)},
                        {"meta", std::move(meta)}});
  }
  return rows;
}

PreferencePair preference_pair_from_json(const Json& j) {
  PreferencePair pair;
  pair.prompt = require_string(j, "prompt", "dpo pair");
  pair.chosen = require_string(j, "chosen", "dpo pair");
  pair.rejected = require_string(j, "rejected", "dpo pair");
  pair.objective =
      pair_objective_from_string(require_string(j, "objective", "dpo pair"));
  const Json& meta = require_field(j, "meta", "dpo pair");
  pair.query_id = require_string(meta, "query_id", "dpo pair meta");
  pair.chosen_id = require_string(meta, "chosen_id", "dpo pair meta");
  pair.rejected_id = require_string(meta, "rejected_id", "dpo pair meta");
  pair.chosen_scores =
      reward_scores_from_json(require_field(meta, "chosen_scores", "dpo pair"));
  pair.rejected_scores = reward_scores_from_json(
      require_field(meta, "rejected_scores", "dpo pair"));
  return pair;
}

Json to_json(const DpoDiagnostics& diagnostics) {
  Json per_objective = Json::object();
  for (PairObjective objective : {PairObjective::attributability,
                                  PairObjective::comprehensiveness}) {
    int n = 0;
    int ok = 0;
    double total = 0.0;
    for (const PairLoss& p : diagnostics.per_pair) {
      if (p.objective != objective) continue;
      ++n;
      if (p.ok) {
        ++ok;
        total += p.loss;
      }
    }
    per_objective[to_string(objective)] =
        Json{{"n_pairs", n},
             {"n_scored", ok},
             {"mean_loss", ok > 0 ? total / ok : 0.0}};
  }
  Json pairs = Json::array();
  for (const PairLoss& p : diagnostics.per_pair) {
    Json row{{"query_id", p.query_id},
             {"objective", to_string(p.objective)},
             {"ok", p.ok}};
    if (p.ok) {
      row["margin"] = p.margin;
      row["loss"] = p.loss;
    } else {
      row["error"] = p.error;
    }
    pairs.push_back(std::move(row));
  }
  return Json{{"mean_loss", diagnostics.mean_loss},
              {"n_pairs", diagnostics.n_pairs},
              {"n_scored", diagnostics.n_scored},
              {"per_objective", std::move(per_objective)},
              {"pairs", std::move(pairs)}};
}

}  // namespace attrforge
