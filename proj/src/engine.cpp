#include "attrforge/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "attrforge/digest.hpp"
#include "attrforge/eval_metrics.hpp"
#include "attrforge/http_backend.hpp"
#include "attrforge/parallel.hpp"
#include "attrforge/preference.hpp"
#include "attrforge/rewards.hpp"
#include "attrforge/selection.hpp"
#include "attrforge/synthesis.hpp"

namespace attrforge {

namespace fs = std::filesystem;

namespace {

// Test hook: ATTRFORGE_CRASH_POINT="<stage>:<point>" hard-exits at that
// point, simulating a crash between writes.
void maybe_crash(const std::string& stage, const std::string& point) {
  const char* env = std::getenv("ATTRFORGE_CRASH_POINT");
  if (env != nullptr && stage + ":" + point == env) {
    std::_Exit(42);
  }
}

class StageWriter {
 public:
  StageWriter(fs::path workspace, std::string stage)
      : workspace_(std::move(workspace)), stage_(std::move(stage)) {
    staging_ = workspace_ / (".staging-" + stage_);
    final_ = workspace_ / stage_;
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }

  ~StageWriter() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  StageWriter(const StageWriter&) = delete;
  StageWriter& operator=(const StageWriter&) = delete;

  void write_rows(const std::string& name, const std::vector<Json>& rows) {
    write_jsonl((staging_ / name).string(), rows);
    record(name);
  }

  void write_json_file(const std::string& name, const Json& j) {
    write_text_file((staging_ / name).string(), j.dump(2) + "\n");
    record(name);
  }

  void write_text(const std::string& name, const std::string& text) {
    write_text_file((staging_ / name).string(), text);
    record(name);
  }

  const std::vector<ArtifactRecord>& artifacts() const { return artifacts_; }

  // All artifacts appear at their final paths in one rename.
  void commit() {
    maybe_crash(stage_, "before_commit");
    fs::remove_all(final_);
    fs::rename(staging_, final_);
    committed_ = true;
  }

 private:
  void record(const std::string& name) {
    ArtifactRecord a;
    a.path = stage_ + "/" + name;
    a.digest = sha256_file_hex((staging_ / name).string());
    a.bytes = static_cast<long long>(fs::file_size(staging_ / name));
    artifacts_.push_back(std::move(a));
    maybe_crash(stage_, "after_artifact:" + name);
  }

  fs::path workspace_;
  std::string stage_;
  fs::path staging_;
  fs::path final_;
  std::vector<ArtifactRecord> artifacts_;
  bool committed_ = false;
};

struct QueryRow {
  std::string id;
  std::string text;
};

std::vector<QueryRow> load_queries(const std::string& path) {
  std::vector<Json> rows = read_jsonl(path);
  std::vector<QueryRow> queries;
  queries.reserve(rows.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string where = path + " record " + std::to_string(i + 1);
    QueryRow q;
    q.id = require_string(rows[i], "query_id", where);
    q.text = require_string(rows[i], "query", where);
    if (q.id.empty() || q.text.empty()) {
      throw std::invalid_argument(where + ": query_id and query must be "
                                          "non-empty");
    }
    if (!seen.insert(q.id).second) {
      throw std::invalid_argument(where + ": duplicate query_id " + q.id);
    }
    queries.push_back(std::move(q));
  }
  if (queries.empty()) {
    throw std::invalid_argument(path + ": no query records");
  }
  return queries;
}

void check_failure_budget(const std::string& stage, std::size_t failed,
                          std::size_t total, double max_fraction) {
  if (failed == 0 || total == 0) return;
  double fraction = static_cast<double>(failed) / static_cast<double>(total);
  if (fraction > max_fraction) {
    std::ostringstream msg;
    msg << stage << ": " << failed << " of " << total
        << " work items failed (fraction " << fraction
        << " exceeds max_failure_fraction " << max_fraction << ")";
    throw PartialFailure(msg.str());
  }
}

std::string percent_cell(double fraction) { return format_percent(fraction); }

}  // namespace

Engine::Engine(RunConfig config) : config_(std::move(config)) {
  templates_ = config_.templates_dir.empty()
                   ? PromptTemplates::defaults()
                   : PromptTemplates::load(config_.templates_dir);
  mock_ = std::make_shared<MockBackend>(
      config_.judge.endpoint.max_premise_chars,
      config_.judge.endpoint.entail_threshold);
  all_mock_ = config_.generator.mock && config_.policy_scorer.mock &&
              config_.reference_scorer.mock && config_.judge.mock;
  if (config_.generator.mock) {
    generator_ = mock_.get();
  } else {
    auto http = std::make_unique<HttpBackend>(config_.generator.endpoint);
    generator_ = http.get();
    generator_http_ = std::move(http);
  }
  if (config_.policy_scorer.mock) {
    policy_scorer_ = mock_.get();
  } else {
    auto http = std::make_unique<HttpBackend>(config_.policy_scorer.endpoint);
    policy_scorer_ = http.get();
    policy_http_ = std::move(http);
  }
  if (config_.reference_scorer.mock) {
    reference_scorer_ = mock_.get();
  } else {
    auto http =
        std::make_unique<HttpBackend>(config_.reference_scorer.endpoint);
    reference_scorer_ = http.get();
    reference_http_ = std::move(http);
  }
  if (config_.judge.mock) {
    judge_ = mock_.get();
  } else {
    auto http = std::make_unique<HttpBackend>(config_.judge.endpoint);
    judge_ = http.get();
    judge_http_ = std::move(http);
  }
}

std::string Engine::manifest_path() const {
  return (fs::path(config_.workspace) / "manifest.json").string();
}

RunManifest Engine::load_or_init_manifest() const {
  RunManifest manifest;
  const std::string path = manifest_path();
  if (fs::exists(path)) {
    manifest = load_manifest(path);
  }
  manifest.run_id = "run-" + sha256_hex(config_.raw.dump()).substr(0, 12);
  manifest.config_snapshot = config_.raw;
  return manifest;
}

bool Engine::stage_is_current(const RunManifest& manifest,
                              const std::string& name,
                              const std::string& fingerprint) const {
  const StageRecord* stage = find_stage(manifest, name);
  if (stage == nullptr || stage->fingerprint != fingerprint) return false;
  for (const ArtifactRecord& a : stage->artifacts) {
    fs::path path = fs::path(config_.workspace) / a.path;
    if (!fs::exists(path)) return false;
    if (sha256_file_hex(path.string()) != a.digest) return false;
  }
  return true;
}

void Engine::commit_stage(RunManifest manifest, StageRecord stage) const {
  maybe_crash(stage.name, "after_commit");
  upsert_stage(manifest, std::move(stage));
  fs::create_directories(config_.workspace);
  save_manifest_atomic(manifest, manifest_path());
}

void Engine::run_synth(bool force) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<QueryRow> queries = load_queries(config_.queries_path);
  const std::string fingerprint = sha256_hex(
      config_.raw.dump() + "|synth|" + sha256_file_hex(config_.queries_path));
  RunManifest manifest = load_or_init_manifest();
  if (!force && stage_is_current(manifest, "synth", fingerprint)) {
    std::cout << "synth: up to date (use --force to redo)\n";
    return;
  }

  struct Item {
    std::optional<SyntheticExample> example;
    std::string error;
  };
  std::vector<Item> items =
      parallel_map(queries.size(), config_.parallelism, [&](std::size_t i) {
        Item item;
        try {
          item.example = synthesize_example(
              queries[i].id, queries[i].text,
              derive_seed(config_.global_seed, queries[i].id), *generator_,
              templates_, config_.synthesis);
        } catch (const TransportError&) {
          throw;
        } catch (const std::exception& e) {
          item.error = e.what();
        }
        return item;
      });

  // Distractors come from other queries' synthesized documents.
  std::vector<Document> pool;
  for (const Item& item : items) {
    if (!item.example) continue;
    for (const Document& d : item.example->docs.docs) {
      if (d.origin == DocOrigin::synthesized) pool.push_back(d);
    }
  }
  std::sort(pool.begin(), pool.end(),
            [](const Document& a, const Document& b) {
              return a.doc_id < b.doc_id;
            });
  parallel_map(items.size(), config_.parallelism, [&](std::size_t i) {
    Item& item = items[i];
    if (!item.example) return 0;
    try {
      std::vector<Document> others;
      others.reserve(pool.size());
      for (const Document& d : pool) {
        if (d.source_query_id != item.example->query_id) others.push_back(d);
      }
      inject_distractors(*item.example, others, config_.distractors_k,
                         derive_seed(config_.global_seed,
                                     item.example->query_id));
    } catch (const TransportError&) {
      throw;
    } catch (const std::exception& e) {
      item.example.reset();
      item.error = e.what();
    }
    return 0;
  });

  std::size_t failed = 0;
  for (const Item& item : items) {
    if (!item.example) ++failed;
  }
  check_failure_budget("synth", failed, items.size(),
                       config_.max_failure_fraction);

  std::vector<SyntheticExample> examples;
  Json failures = Json::array();
  Json flagged = Json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].example) {
      if (!items[i].example->flags.empty()) {
        flagged.push_back(Json{{"query_id", items[i].example->query_id},
                               {"flags", items[i].example->flags}});
      }
      examples.push_back(std::move(*items[i].example));
    } else {
      failures.push_back(
          Json{{"query_id", queries[i].id}, {"error", items[i].error}});
    }
  }

  std::vector<Json> warmup =
      build_warmup_dataset(examples, config_.warmup_fraction,
                           config_.global_seed, templates_, config_.yesno);

  std::vector<Json> synthetic_rows;
  synthetic_rows.reserve(examples.size());
  for (const SyntheticExample& ex : examples) {
    synthetic_rows.push_back(to_json(ex));
  }

  Json report{{"n_queries", queries.size()},
              {"n_synthesized", examples.size()},
              {"n_failed", failures.size()},
              {"failures", failures},
              {"n_flagged", flagged.size()},
              {"flagged", flagged},
              {"warmup_records", warmup.size()},
              {"distractor_pool", pool.size()}};

  fs::create_directories(config_.workspace);
  StageWriter writer(config_.workspace, "synth");
  writer.write_rows("synthetic.jsonl", synthetic_rows);
  writer.write_rows("warmup.jsonl", warmup);
  writer.write_json_file("synth_report.json", report);

  StageRecord stage;
  stage.name = "synth";
  stage.fingerprint = fingerprint;
  stage.artifacts = writer.artifacts();
  stage.counters = Json{{"queries", queries.size()},
                        {"examples", examples.size()},
                        {"failed", failures.size()},
                        {"flagged", flagged.size()},
                        {"warmup_records", warmup.size()}};
  const auto elapsed = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - t0);
  stage.seconds = all_mock_ ? 0.0 : elapsed.count();
  writer.commit();
  commit_stage(std::move(manifest), std::move(stage));
  std::cout << "synth: " << examples.size() << "/" << queries.size()
            << " examples, " << failures.size() << " failed, "
            << flagged.size() << " flagged, warm-up " << warmup.size()
            << " records\n";
}

void Engine::run_iterate(int iteration, bool force) {
  if (iteration < 1) {
    throw std::invalid_argument("iterate: iteration must be >= 1");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const std::string stage_name = "iter" + std::to_string(iteration);
  const std::string synth_path =
      (fs::path(config_.workspace) / "synth" / "synthetic.jsonl").string();
  if (!fs::exists(synth_path)) {
    throw std::invalid_argument("iterate: " + synth_path +
                                " not found; run synth first");
  }
  std::vector<Json> rows = read_jsonl(synth_path);
  std::vector<SyntheticExample> examples;
  examples.reserve(rows.size());
  for (const Json& row : rows) {
    examples.push_back(synthetic_example_from_json(row));
  }
  if (examples.empty()) {
    throw std::invalid_argument("iterate: no synthetic examples in " +
                                synth_path);
  }

  const std::string fingerprint =
      sha256_hex(config_.raw.dump() + "|" + stage_name + "|" +
                 sha256_file_hex(synth_path));
  RunManifest manifest = load_or_init_manifest();
  if (!force && stage_is_current(manifest, stage_name, fingerprint)) {
    std::cout << stage_name << ": up to date (use --force to redo)\n";
    return;
  }

  const std::uint64_t iter_seed =
      derive_seed(config_.global_seed, stage_name);

  struct QueryOut {
    std::vector<ScoredCandidate> scored;
    std::optional<ScoredCandidate> top;
    std::vector<PreferencePair> pairs;
    std::string prompt;
    std::string error;
  };
  std::vector<QueryOut> outs =
      parallel_map(examples.size(), config_.parallelism, [&](std::size_t i) {
        QueryOut out;
        const SyntheticExample& ex = examples[i];
        try {
          out.prompt = attribution_prompt(templates_, ex.query, ex.docs,
                                          config_.yesno);
          std::vector<std::string> texts = sample_candidates(
              ex, config_.sampling, derive_seed(iter_seed, ex.query_id),
              *generator_, templates_, config_.yesno);
          out.scored =
              score_and_gate(ex, texts, *policy_scorer_, *judge_, templates_,
                             config_.rewards, 1, config_.yesno);
          out.top = rank_and_select(out.scored);
          if (out.top) {
            out.pairs = build_pairs(out.scored, *out.top, out.prompt,
                                    config_.rewards, config_.dpo);
          }
        } catch (const TransportError&) {
          throw;
        } catch (const std::exception& e) {
          out.error = e.what();
        }
        return out;
      });

  std::size_t failed = 0;
  for (const QueryOut& out : outs) {
    if (!out.error.empty()) ++failed;
  }
  check_failure_budget(stage_name, failed, outs.size(),
                       config_.max_failure_fraction);

  std::vector<Json> candidate_rows;
  std::vector<RsftEntry> rsft_entries;
  std::vector<PreferencePair> all_pairs;
  std::vector<QueryStats> stats;
  Json failures = Json::array();
  long long total_candidates = 0;
  long long total_passed = 0;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const QueryOut& out = outs[i];
    if (!out.error.empty()) {
      failures.push_back(Json{{"query_id", examples[i].query_id},
                              {"error", out.error}});
      continue;
    }
    QueryStats qs;
    qs.query_id = examples[i].query_id;
    qs.n_sampled = static_cast<int>(out.scored.size());
    for (const ScoredCandidate& c : out.scored) {
      candidate_rows.push_back(to_json(c));
      ++total_candidates;
      if (c.passed) {
        ++qs.n_passed;
        ++total_passed;
      }
    }
    if (out.top) {
      qs.top_candidate_id = out.top->candidate_id;
      rsft_entries.push_back(RsftEntry{out.prompt, *out.top});
    }
    stats.push_back(std::move(qs));
    for (const PreferencePair& pair : out.pairs) all_pairs.push_back(pair);
  }

  std::vector<Json> rsft_rows = build_rsft_dataset(rsft_entries);
  std::vector<Json> pair_rows = emit_dpo_dataset(all_pairs);
  DpoDiagnostics diagnostics =
      dpo_loss(all_pairs, *policy_scorer_, *reference_scorer_, config_.dpo,
               config_.parallelism);

  double rate = total_candidates > 0 ? pass_rate(stats) : 0.0;
  Json query_rows = Json::array();
  for (const QueryStats& qs : stats) {
    Json row{{"query_id", qs.query_id},
             {"n_sampled", qs.n_sampled},
             {"n_passed", qs.n_passed}};
    if (qs.top_candidate_id) {
      row["top_candidate_id"] = *qs.top_candidate_id;
    } else {
      row["top_candidate_id"] = nullptr;
    }
    query_rows.push_back(std::move(row));
  }
  long long pairs_attr = 0;
  long long pairs_compre = 0;
  for (const PreferencePair& pair : all_pairs) {
    if (pair.objective == PairObjective::attributability) {
      ++pairs_attr;
    } else {
      ++pairs_compre;
    }
  }
  Json selection_report{
      {"iteration", iteration},
      {"queries", std::move(query_rows)},
      {"aggregate", Json{{"n_sampled", total_candidates},
                         {"n_passed", total_passed},
                         {"pass_rate", rate},
                         {"pass_rate_percent", percent_cell(rate)}}},
      {"failures", failures}};

  fs::create_directories(config_.workspace);
  StageWriter writer(config_.workspace, stage_name);
  writer.write_rows("candidates.jsonl", candidate_rows);
  writer.write_rows("rsft.jsonl", rsft_rows);
  writer.write_rows("dpo_pairs.jsonl", pair_rows);
  writer.write_json_file("selection_report.json", selection_report);
  writer.write_json_file("dpo_diagnostics.json", to_json(diagnostics));

  StageRecord stage;
  stage.name = stage_name;
  stage.fingerprint = fingerprint;
  stage.artifacts = writer.artifacts();
  stage.counters = Json{{"iteration", iteration},
                        {"queries", examples.size()},
                        {"failed", failures.size()},
                        {"candidates", total_candidates},
                        {"passed", total_passed},
                        {"pass_rate", rate},
                        {"rsft_records", rsft_rows.size()},
                        {"pairs", pair_rows.size()},
                        {"pairs_attributability", pairs_attr},
                        {"pairs_comprehensiveness", pairs_compre},
                        {"dpo_mean_loss", diagnostics.mean_loss}};
  const auto elapsed = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - t0);
  stage.seconds = all_mock_ ? 0.0 : elapsed.count();
  writer.commit();
  commit_stage(std::move(manifest), std::move(stage));
  std::cout << stage_name << ": " << total_candidates
            << " candidates, pass rate " << percent_cell(rate) << ", rsft "
            << rsft_rows.size() << ", pairs " << pair_rows.size() << "\n";
}

void Engine::run_eval(const std::string& predictions_path,
                      const std::string& adapter, bool force) {
  const auto t0 = std::chrono::steady_clock::now();
  if (adapter != "asqa" && adapter != "eli5" && adapter != "strategyqa" &&
      adapter != "generic") {
    throw std::invalid_argument(
        "eval: unknown adapter '" + adapter +
        "' (expected asqa, eli5, strategyqa, or generic)");
  }
  if (config_.eval_data_path.empty()) {
    throw std::invalid_argument("eval: paths.eval_data is not set");
  }

  std::vector<Json> prediction_rows = read_jsonl(predictions_path);
  std::unordered_map<std::string, std::string> predictions;
  std::vector<std::string> prediction_order;
  for (std::size_t i = 0; i < prediction_rows.size(); ++i) {
    const std::string where =
        predictions_path + " record " + std::to_string(i + 1);
    std::string id = require_string(prediction_rows[i], "query_id", where);
    std::string response =
        require_string(prediction_rows[i], "response", where);
    if (!predictions.emplace(id, std::move(response)).second) {
      throw std::invalid_argument(where + ": duplicate query_id " + id);
    }
    prediction_order.push_back(std::move(id));
  }

  struct EvalItem {
    std::string query_id;
    DocumentSet docs;
    CorrectnessSpec spec;
    std::string response;
  };
  std::vector<Json> gold_rows = read_jsonl(config_.eval_data_path);
  std::vector<EvalItem> items;
  std::unordered_set<std::string> gold_ids;
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < gold_rows.size(); ++i) {
    const std::string where =
        config_.eval_data_path + " record " + std::to_string(i + 1);
    EvalItem item;
    item.query_id = require_string(gold_rows[i], "query_id", where);
    if (!gold_ids.insert(item.query_id).second) {
      throw std::invalid_argument(where + ": duplicate query_id " +
                                  item.query_id);
    }
    const Json& docs = require_field(gold_rows[i], "docs", where);
    if (!docs.is_array() || docs.empty()) {
      throw std::invalid_argument(where + ": docs must be a non-empty array");
    }
    for (std::size_t d = 0; d < docs.size(); ++d) {
      Document doc;
      doc.title = require_string(docs[d], "title", where);
      doc.body = require_string(docs[d], "body", where);
      doc.doc_id = docs[d].contains("doc_id")
                       ? docs[d]["doc_id"].get<std::string>()
                       : item.query_id + "#r" + std::to_string(d);
      doc.origin = DocOrigin::retrieved;
      item.docs.docs.push_back(std::move(doc));
    }
    const Json& gold = require_field(gold_rows[i], "gold", where);
    if (adapter == "asqa") {
      item.spec.mode = CorrectnessMode::em_recall;
    } else if (adapter == "eli5") {
      item.spec.mode = CorrectnessMode::claim_recall;
    } else if (adapter == "strategyqa") {
      item.spec.mode = CorrectnessMode::yesno_accuracy;
    } else {
      item.spec.mode =
          correctness_mode_from_string(require_string(gold, "mode", where));
    }
    switch (item.spec.mode) {
      case CorrectnessMode::em_recall:
        item.spec.gold_answers = require_field(gold, "answers", where)
                                     .get<std::vector<std::string>>();
        if (item.spec.gold_answers.empty()) {
          throw std::invalid_argument(where + ": gold.answers is empty");
        }
        break;
      case CorrectnessMode::claim_recall:
        item.spec.gold_claims = require_field(gold, "claims", where)
                                    .get<std::vector<std::string>>();
        if (item.spec.gold_claims.empty()) {
          throw std::invalid_argument(where + ": gold.claims is empty");
        }
        break;
      case CorrectnessMode::yesno_accuracy: {
        const Json& answer = require_field(gold, "answer", where);
        if (!answer.is_boolean()) {
          throw std::invalid_argument(where + ": gold.answer must be boolean");
        }
        item.spec.gold_yes = answer.get<bool>();
        break;
      }
    }
    auto found = predictions.find(item.query_id);
    if (found == predictions.end()) {
      missing.push_back(item.query_id);
    } else {
      item.response = found->second;
    }
    items.push_back(std::move(item));
  }
  if (!missing.empty()) {
    std::string list;
    for (const std::string& id : missing) {
      if (!list.empty()) list += ", ";
      list += id;
    }
    throw std::invalid_argument("eval: no prediction for query ids: " + list);
  }
  std::vector<std::string> extra;
  for (const std::string& id : prediction_order) {
    if (!gold_ids.count(id)) extra.push_back(id);
  }
  if (!extra.empty()) {
    std::string list;
    for (const std::string& id : extra) {
      if (!list.empty()) list += ", ";
      list += id;
    }
    throw std::invalid_argument(
        "eval: predictions without gold records for query ids: " + list);
  }
  if (items.empty()) {
    throw std::invalid_argument("eval: no records in " +
                                config_.eval_data_path);
  }

  const std::string fingerprint = sha256_hex(
      config_.raw.dump() + "|eval|" + adapter + "|" +
      sha256_file_hex(predictions_path) + "|" +
      sha256_file_hex(config_.eval_data_path));
  RunManifest manifest = load_or_init_manifest();
  if (!force && stage_is_current(manifest, "eval", fingerprint)) {
    std::cout << "eval: up to date (use --force to redo)\n";
    return;
  }

  struct ExampleResult {
    double correctness = 0.0;
    CitationEval citations;
    std::string error;
  };
  std::vector<ExampleResult> results =
      parallel_map(items.size(), config_.parallelism, [&](std::size_t i) {
        ExampleResult r;
        const EvalItem& item = items[i];
        try {
          AttributedResponse parsed = parse_response(
              item.response, static_cast<int>(item.docs.size()));
          r.citations = evaluate_citations(parsed, item.docs, *judge_);
          r.correctness = correctness(item.response, item.spec, judge_);
        } catch (const TransportError&) {
          throw;
        } catch (const std::exception& e) {
          r.error = e.what();
        }
        return r;
      });

  std::size_t failed = 0;
  for (const ExampleResult& r : results) {
    if (!r.error.empty()) ++failed;
  }
  check_failure_budget("eval", failed, results.size(),
                       config_.max_failure_fraction);

  Json example_rows = Json::array();
  Json failures = Json::array();
  double sum_correct = 0.0;
  double sum_recall = 0.0;
  double sum_precision = 0.0;
  double sum_f1 = 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const ExampleResult& r = results[i];
    if (!r.error.empty()) {
      failures.push_back(
          Json{{"query_id", items[i].query_id}, {"error", r.error}});
      continue;
    }
    ++ok;
    sum_correct += r.correctness;
    sum_recall += r.citations.recall;
    sum_precision += r.citations.precision;
    sum_f1 += r.citations.f1;
    example_rows.push_back(Json{{"query_id", items[i].query_id},
                                {"correctness", r.correctness},
                                {"citation_recall", r.citations.recall},
                                {"citation_precision", r.citations.precision},
                                {"citation_f1", r.citations.f1}});
  }
  const double denom = ok > 0 ? static_cast<double>(ok) : 1.0;
  const double macro_correct = sum_correct / denom;
  const double macro_recall = sum_recall / denom;
  const double macro_precision = sum_precision / denom;
  const double macro_f1 = sum_f1 / denom;

  Json report{{"adapter", adapter},
              {"averaging", "macro"},
              {"n_examples", items.size()},
              {"n_failed", failures.size()},
              {"failures", failures},
              {"examples", std::move(example_rows)},
              {"macro", Json{{"correctness", macro_correct},
                             {"citation_recall", macro_recall},
                             {"citation_precision", macro_precision},
                             {"citation_f1", macro_f1}}}};

  std::ostringstream text;
  text << "Adapter: " << adapter << " (macro-averaged over " << ok
       << " examples)\n\n";
  text << "          Correctness  Citation Rec.  Citation Prec.  Citation F1\n";
  char line[128];
  std::snprintf(line, sizeof(line), "macro     %11s  %13s  %14s  %11s\n",
                percent_cell(macro_correct).c_str(),
                percent_cell(macro_recall).c_str(),
                percent_cell(macro_precision).c_str(),
                percent_cell(macro_f1).c_str());
  text << line;

  fs::create_directories(config_.workspace);
  StageWriter writer(config_.workspace, "eval");
  writer.write_json_file("eval_report.json", report);
  writer.write_text("eval_report.txt", text.str());

  StageRecord stage;
  stage.name = "eval";
  stage.fingerprint = fingerprint;
  stage.artifacts = writer.artifacts();
  stage.counters = Json{{"adapter", adapter},
                        {"examples", items.size()},
                        {"failed", failures.size()},
                        {"correctness", macro_correct},
                        {"citation_recall", macro_recall},
                        {"citation_precision", macro_precision},
                        {"citation_f1", macro_f1}};
  const auto elapsed = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - t0);
  stage.seconds = all_mock_ ? 0.0 : elapsed.count();
  writer.commit();
  commit_stage(std::move(manifest), std::move(stage));
  std::cout << "eval: " << ok << " examples, citation F1 "
            << percent_cell(macro_f1) << "\n";
}

std::string Engine::run_report(bool as_json) const {
  const std::string path = manifest_path();
  if (!fs::exists(path)) {
    throw std::runtime_error("report: no manifest at " + path +
                             "; run synth first");
  }
  RunManifest manifest = load_manifest(path);

  std::vector<std::string> warnings;
  for (const StageRecord& stage : manifest.stages) {
    for (const ArtifactRecord& a : stage.artifacts) {
      fs::path file = fs::path(config_.workspace) / a.path;
      if (!fs::exists(file)) {
        warnings.push_back("missing artifact: " + a.path);
      } else if (sha256_file_hex(file.string()) != a.digest) {
        warnings.push_back("digest mismatch: " + a.path);
      }
    }
  }

  struct IterRow {
    int k;
    const StageRecord* stage;
  };
  std::vector<IterRow> iterations;
  for (const StageRecord& stage : manifest.stages) {
    if (stage.name.rfind("iter", 0) != 0) continue;
    int k = std::atoi(stage.name.c_str() + 4);
    if (k > 0) iterations.push_back({k, &stage});
  }
  std::sort(iterations.begin(), iterations.end(),
            [](const IterRow& a, const IterRow& b) { return a.k < b.k; });
  const StageRecord* synth = find_stage(manifest, "synth");
  const StageRecord* eval = find_stage(manifest, "eval");

  if (as_json) {
    Json iter_rows = Json::array();
    for (const IterRow& row : iterations) {
      Json r = row.stage->counters;
      r["pass_rate_percent"] =
          percent_cell(row.stage->counters.value("pass_rate", 0.0));
      iter_rows.push_back(std::move(r));
    }
    Json out{{"run_id", manifest.run_id},
             {"synth", synth ? synth->counters : Json()},
             {"iterations", std::move(iter_rows)},
             {"eval", eval ? eval->counters : Json()},
             {"warnings", warnings}};
    return out.dump(2) + "\n";
  }

  std::ostringstream out;
  out << "run " << manifest.run_id << "\n";
  out << "workspace " << config_.workspace << "\n\n";
  if (synth != nullptr) {
    out << "synth: examples " << synth->counters.value("examples", 0)
        << ", failed " << synth->counters.value("failed", 0) << ", flagged "
        << synth->counters.value("flagged", 0) << ", warm-up records "
        << synth->counters.value("warmup_records", 0) << "\n\n";
  }
  if (!iterations.empty()) {
    out << "iteration  pass rate  candidates  passed  rsft  pairs\n";
    for (const IterRow& row : iterations) {
      const Json& c = row.stage->counters;
      char line[160];
      std::snprintf(line, sizeof(line),
                    "%9d  %9s  %10lld  %6lld  %4lld  %5lld\n", row.k,
                    percent_cell(c.value("pass_rate", 0.0)).c_str(),
                    static_cast<long long>(c.value("candidates", 0)),
                    static_cast<long long>(c.value("passed", 0)),
                    static_cast<long long>(c.value("rsft_records", 0)),
                    static_cast<long long>(c.value("pairs", 0)));
      out << line;
    }
    out << "\n";
  }
  if (eval != nullptr) {
    const Json& c = eval->counters;
    out << "eval (" << c.value("adapter", std::string("?"))
        << "): correctness " << percent_cell(c.value("correctness", 0.0))
        << ", citation recall "
        << percent_cell(c.value("citation_recall", 0.0)) << ", precision "
        << percent_cell(c.value("citation_precision", 0.0)) << ", F1 "
        << percent_cell(c.value("citation_f1", 0.0)) << "\n\n";
  }
  if (!warnings.empty()) {
    out << "warnings:\n";
    for (const std::string& w : warnings) out << "  " << w << "\n";
  }
  return out.str();
}

}  // namespace attrforge
