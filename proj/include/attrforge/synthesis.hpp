#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "attrforge/attr_core.hpp"
#include "attrforge/gateway.hpp"
#include "attrforge/jsonl.hpp"
#include "attrforge/prompts.hpp"
#include "attrforge/rng.hpp"

namespace attrforge {

class EmptyGeneration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecompositionEmpty : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PoolTooSmall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Claim {
  std::string claim_id;
  std::string text;
  int statement_index = 0;  // 0-based parent in the gold response
};

struct ClaimGroup {
  std::string group_id;
  std::vector<int> claim_indices;  // ascending positions in `claims`
};

// One query's synthetic training example. Documents are generated from claim
// groups, so every citation in `gold` is grounded by construction; groups[i]
// produced the synthesized document whose doc_id ends in "#d<i>".
struct SyntheticExample {
  std::string query_id;
  std::string query;
  AttributedResponse gold;
  std::vector<Claim> claims;
  std::vector<ClaimGroup> groups;
  DocumentSet docs;
  std::vector<std::string> flags;
};

struct SynthesisConfig {
  int max_statements = 5;
  int min_group_size = 2;
  int max_group_size = 3;
  double temperature = 1.0;
  double top_p = 0.95;
  int max_tokens = 1024;
};

// "- claim" bullets or "1. claim" numbering, one claim per non-empty line.
std::vector<std::string> parse_claim_lines(const std::string& text);

// Shuffles claim indices and cuts them into runs of min..max (the last run
// may be shorter). Each group's indices come back ascending.
std::vector<std::vector<int>> combine_claims(int claim_count,
                                             int min_group_size,
                                             int max_group_size, Rng& rng);

// Rewrites every gold citation from claim provenance: statement i cites
// exactly the documents whose group contains a claim with parent i.
// Appends "uncovered_statement:<i>" flags for statements left uncited.
void relabel_from_provenance(SyntheticExample& example);

// generate -> decompose -> combine -> document -> relabel for one query.
SyntheticExample synthesize_example(const std::string& query_id,
                                    const std::string& query,
                                    std::uint64_t seed, TextGenerator& gen,
                                    const PromptTemplates& templates,
                                    const SynthesisConfig& config = {});

// Samples k pool documents (all from other queries), appends them as
// distractors, shuffles the document order, and relabels. k = 0 still
// shuffles.
void inject_distractors(SyntheticExample& example,
                        const std::vector<Document>& pool, int k,
                        std::uint64_t seed);

// Instruction-tuning records for the warm-up split: a seeded sample of
// ceil(fraction * n) flag-free examples, emitted in input order.
std::vector<Json> build_warmup_dataset(
    const std::vector<SyntheticExample>& examples, double fraction,
    std::uint64_t seed, const PromptTemplates& templates, bool yesno = false);

Json to_json(const SyntheticExample& example);
SyntheticExample synthetic_example_from_json(const Json& j);

}  // namespace attrforge
