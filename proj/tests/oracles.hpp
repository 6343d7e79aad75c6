#pragma once

// Brute-force reference implementations used to cross-check the library.
// Written from the metric definitions on purpose; they share no code with
// the implementations under src/.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "attrforge/attr_core.hpp"
#include "attrforge/gateway.hpp"
#include "attrforge/jsonl.hpp"
#include "attrforge/synthesis.hpp"

namespace oracles {

inline std::string oracle_premise(const attrforge::DocumentSet& docs,
                                  const std::vector<int>& citations) {
  std::string out;
  for (int c : citations) {
    if (!out.empty()) out += "\n\n";
    const attrforge::Document& d = docs.at_index(c);
    out += "Title: " + d.title + "\n" + d.body;
  }
  return out;
}

struct OracleCitation {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

// Enumerates both precision conditions for every citation directly.
inline OracleCitation oracle_citations(
    const attrforge::AttributedResponse& response,
    const attrforge::DocumentSet& docs, attrforge::EntailmentJudge& judge,
    bool failed_recall_counts = true) {
  double recall_hits = 0.0;
  long long total = 0;
  long long irrelevant = 0;
  for (const attrforge::Statement& s : response.statements) {
    bool recall_ok = false;
    if (!s.citations.empty()) {
      recall_ok =
          judge.entail(oracle_premise(docs, s.citations), s.text).entailed;
    }
    if (recall_ok) recall_hits += 1.0;
    if (!recall_ok) {
      if (failed_recall_counts) {
        long long k = static_cast<long long>(s.citations.size()) +
                      static_cast<long long>(s.invalid_citations.size());
        total += k;
        irrelevant += k;
      }
      continue;
    }
    total += static_cast<long long>(s.invalid_citations.size());
    irrelevant += static_cast<long long>(s.invalid_citations.size());
    for (int c : s.citations) {
      ++total;
      bool alone =
          judge.entail(oracle_premise(docs, {c}), s.text).entailed;
      std::vector<int> rest;
      for (int other : s.citations) {
        if (other != c) rest.push_back(other);
      }
      bool others_support =
          !rest.empty() &&
          judge.entail(oracle_premise(docs, rest), s.text).entailed;
      if (!alone && others_support) ++irrelevant;
    }
  }
  OracleCitation out;
  out.recall = response.statements.empty()
                   ? 0.0
                   : recall_hits /
                         static_cast<double>(response.statements.size());
  out.precision =
      total == 0
          ? 0.0
          : 1.0 - static_cast<double>(irrelevant) / static_cast<double>(total);
  const double p = out.precision;
  const double r = out.recall;
  out.f1 = (p == 0.0 && r == 0.0) ? 0.0 : 2.0 * p * r / (p + r);
  return out;
}

struct OraclePassRate {
  long long sampled = 0;
  long long passed = 0;

  double rate() const {
    return sampled == 0 ? 0.0
                        : static_cast<double>(passed) /
                              static_cast<double>(sampled);
  }
};

inline OraclePassRate recount_candidates(
    const std::vector<attrforge::Json>& rows) {
  OraclePassRate out;
  for (const attrforge::Json& row : rows) {
    ++out.sampled;
    if (row.at("passed").get<bool>()) ++out.passed;
  }
  return out;
}

// Re-derives each gold statement's citation set from claim provenance:
// statement i must cite exactly the positions of this example's synthesized
// documents whose group contains a claim with parent i.
inline std::vector<std::vector<int>> oracle_citation_map(
    const attrforge::SyntheticExample& ex) {
  std::vector<std::vector<int>> per(ex.gold.statements.size());
  for (std::size_t pos = 0; pos < ex.docs.size(); ++pos) {
    const attrforge::Document& d = ex.docs.docs[pos];
    if (d.origin != attrforge::DocOrigin::synthesized) continue;
    if (!d.source_query_id || *d.source_query_id != ex.query_id) continue;
    auto tag = d.doc_id.rfind("#d");
    if (tag == std::string::npos) continue;
    int g = std::stoi(d.doc_id.substr(tag + 2));
    for (int ci : ex.groups.at(g).claim_indices) {
      int si = ex.claims.at(ci).statement_index;
      if (si >= 0 && static_cast<std::size_t>(si) < per.size()) {
        per[si].push_back(static_cast<int>(pos) + 1);
      }
    }
  }
  for (std::vector<int>& v : per) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return per;
}

}  // namespace oracles
