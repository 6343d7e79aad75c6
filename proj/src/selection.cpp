#include "attrforge/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "attrforge/parallel.hpp"

namespace attrforge {

namespace {

std::string candidate_id_for(const std::string& query_id, int j) {
  char suffix[8];
  std::snprintf(suffix, sizeof(suffix), "s%03d", j);
  return query_id + "#" + suffix;
}

}  // namespace

std::vector<int> relevant_doc_indices(const DocumentSet& docs) {
  std::vector<int> indices;
  for (std::size_t i = 0; i < docs.docs.size(); ++i) {
    if (docs.docs[i].origin != DocOrigin::distractor) {
      indices.push_back(static_cast<int>(i + 1));
    }
  }
  return indices;
}

std::vector<std::string> claim_texts(const SyntheticExample& example) {
  std::vector<std::string> texts;
  texts.reserve(example.claims.size());
  for (const Claim& c : example.claims) texts.push_back(c.text);
  return texts;
}

std::vector<std::string> sample_candidates(const SyntheticExample& example,
                                           const SampleConfig& config,
                                           std::uint64_t seed,
                                           TextGenerator& gen,
                                           const PromptTemplates& templates,
                                           bool yesno) {
  if (config.n < 1) {
    throw std::invalid_argument("sample_candidates: n must be >= 1");
  }
  GenerateRequest request;
  request.prompt = attribution_prompt(templates, example.query, example.docs,
                                      yesno);
  request.n = config.n;
  request.temperature = config.temperature;
  request.top_p = config.top_p;
  request.max_tokens = config.max_tokens;
  request.seed = derive_seed(seed, "candidates");
  return gen.generate(request);
}

bool passes_gate(const RewardScores& scores, const RewardConfig& config) {
  return scores.attr >= config.attr_threshold - kAttrEpsilon &&
         scores.compre >= config.compre_threshold;
}

std::vector<ScoredCandidate> score_and_gate(
    const SyntheticExample& example, const std::vector<std::string>& texts,
    SequenceScorer& scorer, EntailmentJudge& judge,
    const PromptTemplates& templates, const RewardConfig& config,
    std::size_t parallelism, bool yesno) {
  const std::vector<int> relevant = relevant_doc_indices(example.docs);
  const std::vector<std::string> claims = claim_texts(example);
  const HolisticOptions holistic{config.attr_threshold,
                                 config.deviation_penalty};
  auto score_one = [&](std::size_t j) -> ScoredCandidate {
    ScoredCandidate sc;
    sc.query_id = example.query_id;
    sc.candidate_id = candidate_id_for(example.query_id, static_cast<int>(j));
    sc.text = texts[j];
    sc.parsed = parse_response(sc.text,
                               static_cast<int>(example.docs.size()));
    try {
      sc.scores.attr = attr_score(sc.parsed, example.docs, judge);
      sc.scores.robust_log_ratio =
          robust_log_ratio(example.query, example.docs, relevant, sc.text,
                           scorer, templates, yesno);
      sc.scores.compre = compre_score(claims, sc.text, judge);
      sc.scores.holistic =
          holistic_score(sc.scores.attr, sc.scores.robust_log_ratio,
                         sc.scores.compre, holistic);
      sc.passed = passes_gate(sc.scores, config);
    } catch (const TransportError&) {
      throw;
    } catch (const std::exception& e) {
      sc.scores = RewardScores{};
      sc.passed = false;
      sc.error = e.what();
    }
    return sc;
  };
  return parallel_map(texts.size(), parallelism, score_one);
}

bool candidate_order(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.scores.holistic != b.scores.holistic) {
    return a.scores.holistic > b.scores.holistic;
  }
  if (a.scores.compre != b.scores.compre) {
    return a.scores.compre > b.scores.compre;
  }
  const double ra = std::abs(a.scores.robust_log_ratio);
  const double rb = std::abs(b.scores.robust_log_ratio);
  if (ra != rb) return ra < rb;
  return a.candidate_id < b.candidate_id;
}

std::optional<ScoredCandidate> rank_and_select(
    std::vector<ScoredCandidate>& scored) {
  std::vector<std::size_t> passed;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    scored[i].rank.reset();
    if (scored[i].passed && scored[i].error.empty()) passed.push_back(i);
  }
  std::sort(passed.begin(), passed.end(), [&scored](std::size_t a,
                                                    std::size_t b) {
    return candidate_order(scored[a], scored[b]);
  });
  for (std::size_t r = 0; r < passed.size(); ++r) {
    scored[passed[r]].rank = static_cast<int>(r + 1);
  }
  if (passed.empty()) return std::nullopt;
  return scored[passed.front()];
}

double pass_rate(const std::vector<QueryStats>& stats) {
  long long sampled = 0;
  long long passed = 0;
  for (const QueryStats& s : stats) {
    if (s.n_sampled < 0 || s.n_passed < 0 || s.n_passed > s.n_sampled) {
      throw std::invalid_argument("pass_rate: inconsistent counts for query " +
                                  s.query_id);
    }
    sampled += s.n_sampled;
    passed += s.n_passed;
  }
  if (sampled == 0) {
    throw std::invalid_argument("pass_rate: no sampled candidates");
  }
  return static_cast<double>(passed) / static_cast<double>(sampled);
}

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", fraction * 100.0);
  return buf;
}

std::vector<Json> build_rsft_dataset(const std::vector<RsftEntry>& entries) {
  std::unordered_set<std::string> seen;
  std::vector<Json> records;
  records.reserve(entries.size());
  for (const RsftEntry& entry : entries) {
    const ScoredCandidate& c = entry.candidate;
    if (!c.passed || !c.error.empty()) {
      throw std::invalid_argument("build_rsft_dataset: candidate " +
                                  c.candidate_id + " did not pass the gate");
    }
    if (!seen.insert(c.query_id).second) {
      throw std::invalid_argument("build_rsft_dataset: duplicate query id " +
                                  c.query_id);
    }
    Json meta{{"query_id", c.query_id},
              {"candidate_id", c.candidate_id},
              {"kind", "rsft"},
              {"scores", to_json(c.scores)}};
    records.push_back(Json{{"prompt", entry.prompt},
                           {"response", c.text},
                           {"meta", std::move(meta)}});
  }
  return records;
}

Json to_json(const RewardScores& scores) {
  return Json{{"attr", scores.attr},
              {"robust_log_ratio", scores.robust_log_ratio},
              {"compre", scores.compre},
              {"holistic", scores.holistic}};
}

RewardScores reward_scores_from_json(const Json& j) {
  RewardScores scores;
  scores.attr = require_field(j, "attr", "scores").get<double>();
  scores.robust_log_ratio =
      require_field(j, "robust_log_ratio", "scores").get<double>();
  scores.compre = require_field(j, "compre", "scores").get<double>();
  scores.holistic = require_field(j, "holistic", "scores").get<double>();
  return scores;
}

Json to_json(const ScoredCandidate& candidate) {
  Json row{{"query_id", candidate.query_id},
           {"candidate_id", candidate.candidate_id},
           {"text", candidate.text},
           {"scores", to_json(candidate.scores)},
           {"passed", candidate.passed}};
  if (candidate.rank) row["rank"] = *candidate.rank;
  if (!candidate.error.empty()) row["error"] = candidate.error;
  return row;
}

ScoredCandidate scored_candidate_from_json(const Json& j) {
  ScoredCandidate c;
  c.query_id = require_string(j, "query_id", "candidate");
  c.candidate_id = require_string(j, "candidate_id", "candidate");
  const std::string where = "candidate " + c.candidate_id;
  c.text = require_string(j, "text", where);
  c.scores = reward_scores_from_json(require_field(j, "scores", where));
  c.passed = require_field(j, "passed", where).get<bool>();
  if (j.contains("rank")) c.rank = j["rank"].get<int>();
  if (j.contains("error")) c.error = j["error"].get<std::string>();
  return c;
}

}  // namespace attrforge
