#include "attrforge/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace attrforge {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Group index encoded in a synthesized doc_id ("<qid>#d<i>"), or -1.
int group_index_of(const std::string& doc_id) {
  std::size_t pos = doc_id.rfind("#d");
  if (pos == std::string::npos) return -1;
  std::size_t start = pos + 2;
  if (start >= doc_id.size()) return -1;
  int value = 0;
  for (std::size_t i = start; i < doc_id.size(); ++i) {
    char c = doc_id[i];
    if (c < '0' || c > '9') return -1;
    value = value * 10 + (c - '0');
  }
  return value;
}

void check_config(const SynthesisConfig& config) {
  if (config.max_statements < 1) {
    throw std::invalid_argument("synthesis: max_statements must be >= 1");
  }
  if (config.min_group_size < 1 ||
      config.max_group_size < config.min_group_size) {
    throw std::invalid_argument(
        "synthesis: need 1 <= min_group_size <= max_group_size");
  }
}

}  // namespace

std::vector<std::string> parse_claim_lines(const std::string& text) {
  std::vector<std::string> claims;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = trim(std::string_view(text).substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    if (line.rfind("- ", 0) == 0 || line.rfind("* ", 0) == 0) {
      line = trim(std::string_view(line).substr(2));
    } else {
      std::size_t d = 0;
      while (d < line.size() && line[d] >= '0' && line[d] <= '9') ++d;
      if (d > 0 && d < line.size() && (line[d] == '.' || line[d] == ')')) {
        line = trim(std::string_view(line).substr(d + 1));
      }
    }
    if (!line.empty()) claims.push_back(std::move(line));
  }
  return claims;
}

std::vector<std::vector<int>> combine_claims(int claim_count,
                                             int min_group_size,
                                             int max_group_size, Rng& rng) {
  if (claim_count < 0) {
    throw std::invalid_argument("combine_claims: claim_count must be >= 0");
  }
  if (min_group_size < 1 || max_group_size < min_group_size) {
    throw std::invalid_argument(
        "combine_claims: need 1 <= min_group_size <= max_group_size");
  }
  std::vector<int> order(static_cast<std::size_t>(claim_count));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::vector<int>> groups;
  std::size_t pos = 0;
  while (pos < order.size()) {
    auto want = static_cast<std::size_t>(
        rng.in_range(static_cast<std::uint64_t>(min_group_size),
                     static_cast<std::uint64_t>(max_group_size)));
    std::size_t take = std::min(want, order.size() - pos);
    std::vector<int> group(order.begin() + static_cast<std::ptrdiff_t>(pos),
                           order.begin() +
                               static_cast<std::ptrdiff_t>(pos + take));
    std::sort(group.begin(), group.end());
    groups.push_back(std::move(group));
    pos += take;
  }
  return groups;
}

void relabel_from_provenance(SyntheticExample& example) {
  std::vector<std::set<int>> parents(example.groups.size());
  for (std::size_t g = 0; g < example.groups.size(); ++g) {
    for (int ci : example.groups[g].claim_indices) {
      if (ci < 0 || static_cast<std::size_t>(ci) >= example.claims.size()) {
        throw std::invalid_argument("relabel: group " + std::to_string(g) +
                                    " references claim " + std::to_string(ci));
      }
      parents[g].insert(example.claims[static_cast<std::size_t>(ci)]
                            .statement_index);
    }
  }
  for (std::size_t si = 0; si < example.gold.statements.size(); ++si) {
    std::vector<int> cites;
    for (std::size_t p = 0; p < example.docs.docs.size(); ++p) {
      const Document& d = example.docs.docs[p];
      if (d.origin != DocOrigin::synthesized) continue;
      if (!d.source_query_id || *d.source_query_id != example.query_id) {
        continue;
      }
      int g = group_index_of(d.doc_id);
      if (g < 0 || static_cast<std::size_t>(g) >= parents.size()) continue;
      if (parents[static_cast<std::size_t>(g)].count(static_cast<int>(si))) {
        cites.push_back(static_cast<int>(p + 1));
      }
    }
    example.gold.statements[si].citations = std::move(cites);
    example.gold.statements[si].invalid_citations.clear();
  }

  auto& flags = example.flags;
  flags.erase(std::remove_if(flags.begin(), flags.end(),
                             [](const std::string& f) {
                               return f.rfind("uncovered_statement:", 0) == 0;
                             }),
              flags.end());
  for (std::size_t si = 0; si < example.gold.statements.size(); ++si) {
    if (example.gold.statements[si].citations.empty()) {
      flags.push_back("uncovered_statement:" + std::to_string(si));
    }
  }

  std::string raw = render_response(example.gold);
  example.gold = parse_response(raw, static_cast<int>(example.docs.size()));
}

SyntheticExample synthesize_example(const std::string& query_id,
                                    const std::string& query,
                                    std::uint64_t seed, TextGenerator& gen,
                                    const PromptTemplates& templates,
                                    const SynthesisConfig& config) {
  check_config(config);
  if (query_id.empty()) {
    throw std::invalid_argument("synthesize_example: empty query_id");
  }
  if (query.empty()) {
    throw std::invalid_argument("synthesize_example: empty query");
  }
  SyntheticExample example;
  example.query_id = query_id;
  example.query = query;

  GenerateRequest gen_req;
  gen_req.prompt = closed_book_prompt(templates, query);
  gen_req.n = 1;
  gen_req.temperature = config.temperature;
  gen_req.top_p = config.top_p;
  gen_req.max_tokens = config.max_tokens;
  gen_req.seed = derive_seed(seed, "gen");
  std::string raw = gen.generate(gen_req).at(0);
  if (normalize_whitespace(raw).empty()) {
    throw EmptyGeneration("query " + query_id +
                          ": generator returned an empty response");
  }
  AttributedResponse parsed = parse_response(raw, 0);
  if (static_cast<int>(parsed.statements.size()) > config.max_statements) {
    std::size_t cut =
        parsed.statements[static_cast<std::size_t>(config.max_statements) - 1]
            .char_span.second;
    raw = raw.substr(0, cut);
    parsed = parse_response(raw, 0);
  }

  GenerateRequest dec_req = gen_req;
  dec_req.prompt = decomposition_prompt(templates, raw);
  dec_req.seed = derive_seed(seed, "decompose");
  std::vector<std::string> claim_texts =
      parse_claim_lines(gen.generate(dec_req).at(0));
  if (claim_texts.empty()) {
    throw DecompositionEmpty("query " + query_id +
                             ": decomposition produced no claims");
  }
  for (std::size_t ci = 0; ci < claim_texts.size(); ++ci) {
    Claim claim;
    claim.claim_id = query_id + "#c" + std::to_string(ci);
    claim.text = claim_texts[ci];
    std::size_t best = 0;
    std::size_t best_overlap = 0;
    bool first = true;
    for (std::size_t si = 0; si < parsed.statements.size(); ++si) {
      std::size_t overlap =
          content_word_overlap(claim.text, parsed.statements[si].text);
      if (first || overlap > best_overlap) {
        best = si;
        best_overlap = overlap;
        first = false;
      }
    }
    claim.statement_index = static_cast<int>(best);
    example.claims.push_back(std::move(claim));
  }

  Rng combine_rng(derive_seed(seed, "combine"));
  std::vector<std::vector<int>> grouped =
      combine_claims(static_cast<int>(example.claims.size()),
                     config.min_group_size, config.max_group_size,
                     combine_rng);
  for (std::size_t gi = 0; gi < grouped.size(); ++gi) {
    ClaimGroup group;
    group.group_id = query_id + "#g" + std::to_string(gi);
    group.claim_indices = grouped[gi];
    example.groups.push_back(std::move(group));
  }

  for (std::size_t gi = 0; gi < example.groups.size(); ++gi) {
    std::string claim_text;
    for (int ci : example.groups[gi].claim_indices) {
      if (!claim_text.empty()) claim_text += ' ';
      claim_text += example.claims[static_cast<std::size_t>(ci)].text;
    }
    GenerateRequest doc_req = gen_req;
    doc_req.prompt = document_prompt(templates, claim_text);
    doc_req.seed = derive_seed(seed, "doc" + std::to_string(gi));
    std::string text = gen.generate(doc_req).at(0);

    Document doc;
    doc.doc_id = query_id + "#d" + std::to_string(gi);
    doc.origin = DocOrigin::synthesized;
    doc.source_query_id = query_id;
    std::size_t nl = text.find('\n');
    if (nl == std::string::npos) {
      doc.title = trim(text);
      doc.body = trim(text);
    } else {
      doc.title = trim(std::string_view(text).substr(0, nl));
      doc.body = trim(std::string_view(text).substr(nl + 1));
    }
    if (doc.title.empty() || doc.body.empty() || doc.title == doc.body) {
      if (doc.title.empty()) doc.title = "Untitled";
      if (doc.body.empty()) doc.body = doc.title;
      example.flags.push_back("degenerate_document:" + doc.doc_id);
    }
    example.docs.docs.push_back(std::move(doc));
  }

  example.gold = std::move(parsed);
  relabel_from_provenance(example);
  return example;
}

void inject_distractors(SyntheticExample& example,
                        const std::vector<Document>& pool, int k,
                        std::uint64_t seed) {
  if (k < 0) {
    throw std::invalid_argument("inject_distractors: k must be >= 0");
  }
  for (const Document& d : pool) {
    if (!d.source_query_id || *d.source_query_id == example.query_id) {
      throw std::invalid_argument(
          "inject_distractors: pool document " + d.doc_id +
          " does not come from another query");
    }
  }
  if (static_cast<int>(pool.size()) < k) {
    throw PoolTooSmall("query " + example.query_id + ": distractor pool has " +
                       std::to_string(pool.size()) + " documents, need " +
                       std::to_string(k));
  }
  Rng rng(derive_seed(seed, "distractors"));
  std::vector<std::size_t> picks =
      rng.sample_indices(pool.size(), static_cast<std::size_t>(k));
  for (std::size_t i : picks) {
    Document d = pool[i];
    d.origin = DocOrigin::distractor;
    example.docs.docs.push_back(std::move(d));
  }
  rng.shuffle(example.docs.docs);
  relabel_from_provenance(example);
}

std::vector<Json> build_warmup_dataset(
    const std::vector<SyntheticExample>& examples, double fraction,
    std::uint64_t seed, const PromptTemplates& templates, bool yesno) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("build_warmup_dataset: fraction outside [0, 1]");
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].flags.empty()) eligible.push_back(i);
  }
  auto take = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(eligible.size())));
  Rng rng(derive_seed(seed, "warmup"));
  std::vector<std::size_t> picks = rng.sample_indices(eligible.size(), take);
  std::sort(picks.begin(), picks.end());
  std::vector<Json> records;
  records.reserve(picks.size());
  for (std::size_t p : picks) {
    const SyntheticExample& ex = examples[eligible[p]];
    Json meta{{"query_id", ex.query_id},
              {"kind", "warmup"},
              {"statements", ex.gold.statements.size()},
              {"documents", ex.docs.size()}};
    records.push_back(
        Json{{"prompt", attribution_prompt(templates, ex.query, ex.docs,
                                           yesno)},
             {"response", ex.gold.raw_text},
             {"meta", std::move(meta)}});
  }
  return records;
}

Json to_json(const SyntheticExample& example) {
  Json statements = Json::array();
  for (const Statement& s : example.gold.statements) {
    statements.push_back(Json{{"text", s.text},
                              {"citations", s.citations},
                              {"invalid_citations", s.invalid_citations},
                              {"char_span", {s.char_span.first,
                                             s.char_span.second}}});
  }
  Json claims = Json::array();
  for (const Claim& c : example.claims) {
    claims.push_back(Json{{"claim_id", c.claim_id},
                          {"text", c.text},
                          {"statement_index", c.statement_index}});
  }
  Json groups = Json::array();
  for (const ClaimGroup& g : example.groups) {
    groups.push_back(Json{{"group_id", g.group_id},
                          {"claim_indices", g.claim_indices}});
  }
  Json docs = Json::array();
  for (const Document& d : example.docs.docs) {
    Json doc{{"doc_id", d.doc_id},
             {"title", d.title},
             {"body", d.body},
             {"origin", to_string(d.origin)}};
    if (d.source_query_id) doc["source_query_id"] = *d.source_query_id;
    docs.push_back(std::move(doc));
  }
  return Json{{"query_id", example.query_id},
              {"query", example.query},
              {"gold", Json{{"raw_text", example.gold.raw_text},
                            {"statements", std::move(statements)}}},
              {"claims", std::move(claims)},
              {"groups", std::move(groups)},
              {"docs", std::move(docs)},
              {"flags", example.flags}};
}

SyntheticExample synthetic_example_from_json(const Json& j) {
  SyntheticExample example;
  example.query_id = require_string(j, "query_id", "synthetic example");
  const std::string where = "synthetic example " + example.query_id;
  example.query = require_string(j, "query", where);
  const Json& gold = require_field(j, "gold", where);
  example.gold.raw_text = require_string(gold, "raw_text", where);
  for (const Json& s : require_field(gold, "statements", where)) {
    Statement st;
    st.text = require_string(s, "text", where);
    st.citations = require_field(s, "citations", where)
                       .get<std::vector<int>>();
    st.invalid_citations = require_field(s, "invalid_citations", where)
                               .get<std::vector<int>>();
    const Json& span = require_field(s, "char_span", where);
    if (!span.is_array() || span.size() != 2) {
      throw std::runtime_error(where + ": char_span must be [start, end]");
    }
    st.char_span = {span[0].get<std::size_t>(), span[1].get<std::size_t>()};
    example.gold.statements.push_back(std::move(st));
  }
  for (const Json& c : require_field(j, "claims", where)) {
    Claim claim;
    claim.claim_id = require_string(c, "claim_id", where);
    claim.text = require_string(c, "text", where);
    claim.statement_index =
        require_field(c, "statement_index", where).get<int>();
    example.claims.push_back(std::move(claim));
  }
  for (const Json& g : require_field(j, "groups", where)) {
    ClaimGroup group;
    group.group_id = require_string(g, "group_id", where);
    group.claim_indices = require_field(g, "claim_indices", where)
                              .get<std::vector<int>>();
    example.groups.push_back(std::move(group));
  }
  for (const Json& d : require_field(j, "docs", where)) {
    Document doc;
    doc.doc_id = require_string(d, "doc_id", where);
    doc.title = require_string(d, "title", where);
    doc.body = require_string(d, "body", where);
    doc.origin = doc_origin_from_string(require_string(d, "origin", where));
    if (d.contains("source_query_id")) {
      doc.source_query_id = require_string(d, "source_query_id", where);
    }
    example.docs.docs.push_back(std::move(doc));
  }
  example.flags =
      require_field(j, "flags", where).get<std::vector<std::string>>();
  return example;
}

}  // namespace attrforge
