#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace attrforge {

enum class DocOrigin { retrieved, synthesized, distractor };

std::string to_string(DocOrigin origin);
DocOrigin doc_origin_from_string(std::string_view s);

struct Document {
  std::string doc_id;
  std::string title;
  std::string body;
  DocOrigin origin = DocOrigin::retrieved;
  std::optional<std::string> source_query_id;
};

// Ordered collection of evidence documents. Citation markers resolve against
// 1-based positions in this list.
struct DocumentSet {
  std::vector<Document> docs;

  std::size_t size() const { return docs.size(); }
  bool empty() const { return docs.empty(); }
  bool resolves(int index) const {
    return index >= 1 && static_cast<std::size_t>(index) <= docs.size();
  }
  const Document& at_index(int index) const;  // 1-based, throws out_of_range
  std::optional<int> index_of(std::string_view doc_id) const;  // 1-based
};

struct Statement {
  std::string text;  // citation markers removed, whitespace normalized
  std::vector<int> citations;          // deduplicated, ascending, resolvable
  std::vector<int> invalid_citations;  // markers outside [1, doc_count]
  std::pair<std::size_t, std::size_t> char_span{0, 0};  // [start, end) in raw

  bool has_citations() const { return !citations.empty(); }
};

struct AttributedResponse {
  std::string raw_text;
  std::vector<Statement> statements;
};

// Splits raw text into sentence statements and resolves in-line `[k]` markers
// against a document set of the given size. Total: never throws on text
// content; doc_count < 0 is a precondition violation.
AttributedResponse parse_response(const std::string& raw, int doc_count);

// Re-emits a statement with its markers placed immediately before the
// terminal punctuation (appended at the end when there is none).
std::string render_statement(const Statement& s);
std::string render_response(const AttributedResponse& resp);

// Removes every `[digits]` marker run and tidies the remaining whitespace.
std::string strip_citations(std::string_view raw);

// Structural equality: statement texts and citation lists, ignoring spans and
// raw text. This is the equivalence preserved by render/parse round trips.
bool same_structure(const AttributedResponse& a, const AttributedResponse& b);

// --- text utilities shared across modules ---

std::string to_lower(std::string_view s);

// Collapses whitespace runs, trims, and drops spaces left dangling before
// closing punctuation (as after marker removal).
std::string normalize_whitespace(std::string_view s);

bool is_stopword(std::string_view word);

// Casefolded alphanumeric tokens with stopwords removed.
std::vector<std::string> content_words(std::string_view s);

// |content_words(a) ∩ content_words(b)| counting distinct words.
std::size_t content_word_overlap(std::string_view a, std::string_view b);

}  // namespace attrforge
