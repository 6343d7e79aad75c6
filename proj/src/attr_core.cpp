#include "attrforge/attr_core.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <stdexcept>
#include <unordered_set>

namespace attrforge {

namespace {

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_digit(char c) {
  return std::isdigit(static_cast<unsigned char>(c)) != 0;
}

// Tokens that end in '.' without closing a sentence. Checked casefolded.
const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> set = {
      "e.g.", "i.e.", "etc.", "vs.",   "cf.",  "al.", "mr.",
      "mrs.", "ms.",  "dr.",  "prof.", "fig.", "no.", "st.",
  };
  return set;
}

// Well-formed markers are '[' + 1..9 digits + ']'. Longer digit runs stay in
// the text as literal brackets so every input keeps a lossless rendering.
constexpr std::size_t kMaxMarkerDigits = 9;

// Tries to read a marker at raw[i]; returns one-past-']' or 0 on mismatch.
std::size_t match_marker(std::string_view raw, std::size_t i, long* value) {
  if (i >= raw.size() || raw[i] != '[') return 0;
  std::size_t d = i + 1;
  std::size_t digits = 0;
  while (d < raw.size() && is_digit(raw[d])) {
    ++d;
    ++digits;
  }
  if (digits == 0 || digits > kMaxMarkerDigits) return 0;
  if (d >= raw.size() || raw[d] != ']') return 0;
  if (value) {
    *value = std::strtol(std::string(raw.substr(i + 1, digits)).c_str(),
                         nullptr, 10);
  }
  return d + 1;
}

void sort_unique(std::vector<int>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

Statement make_statement(std::string_view raw, std::size_t start,
                         std::size_t end, int doc_count) {
  Statement s;
  s.char_span = {start, end};
  std::string text;
  text.reserve(end - start);
  std::vector<long> found;
  std::size_t i = start;
  while (i < end) {
    long value = 0;
    std::size_t next = match_marker(raw.substr(0, end), i, &value);
    if (next != 0) {
      found.push_back(value);
      i = next;
      continue;
    }
    text += raw[i];
    ++i;
  }
  s.text = normalize_whitespace(text);
  for (long k : found) {
    if (k >= 1 && k <= doc_count) {
      s.citations.push_back(static_cast<int>(k));
    } else {
      s.invalid_citations.push_back(static_cast<int>(k));
    }
  }
  sort_unique(s.citations);
  sort_unique(s.invalid_citations);
  return s;
}

}  // namespace

std::string to_string(DocOrigin origin) {
  switch (origin) {
    case DocOrigin::retrieved:
      return "retrieved";
    case DocOrigin::synthesized:
      return "synthesized";
    case DocOrigin::distractor:
      return "distractor";
  }
  throw std::invalid_argument("to_string: unknown DocOrigin");
}

DocOrigin doc_origin_from_string(std::string_view s) {
  if (s == "retrieved") return DocOrigin::retrieved;
  if (s == "synthesized") return DocOrigin::synthesized;
  if (s == "distractor") return DocOrigin::distractor;
  throw std::invalid_argument("doc_origin_from_string: unknown origin '" +
                              std::string(s) + "'");
}

const Document& DocumentSet::at_index(int index) const {
  if (!resolves(index)) {
    throw std::out_of_range("DocumentSet::at_index: index " +
                            std::to_string(index) + " outside [1, " +
                            std::to_string(docs.size()) + "]");
  }
  return docs[static_cast<std::size_t>(index - 1)];
}

std::optional<int> DocumentSet::index_of(std::string_view doc_id) const {
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].doc_id == doc_id) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

AttributedResponse parse_response(const std::string& raw, int doc_count) {
  if (doc_count < 0) {
    throw std::invalid_argument("parse_response: doc_count must be >= 0");
  }
  AttributedResponse out;
  out.raw_text = raw;
  const std::size_t n = raw.size();
  std::size_t pos = 0;
  while (pos < n) {
    while (pos < n && is_space(raw[pos])) ++pos;
    if (pos >= n) break;
    const std::size_t seg_start = pos;
    std::size_t seg_end = 0;
    bool boundary_found = false;
    std::size_t i = seg_start;
    while (i < n) {
      if (!is_terminal(raw[i])) {
        ++i;
        continue;
      }
      std::size_t run_end = i;
      while (run_end + 1 < n && is_terminal(raw[run_end + 1])) ++run_end;
      bool suppressed = false;
      if (raw[i] == '.' && run_end == i) {
        std::size_t t = i;
        while (t > seg_start && !is_space(raw[t - 1])) --t;
        std::string token =
            to_lower(std::string_view(raw).substr(t, i - t + 1));
        suppressed = abbreviations().count(token) > 0;
      }
      if (!suppressed) {
        // Trailing markers belong to the statement they follow.
        std::size_t m = run_end + 1;
        while (true) {
          std::size_t probe = m;
          while (probe < n && is_space(raw[probe])) ++probe;
          std::size_t next = match_marker(raw, probe, nullptr);
          if (next == 0) break;
          m = next;
        }
        if (m >= n || is_space(raw[m])) {
          seg_end = m;
          boundary_found = true;
          break;
        }
      }
      i = run_end + 1;
    }
    if (!boundary_found) {
      seg_end = n;
      while (seg_end > seg_start && is_space(raw[seg_end - 1])) --seg_end;
    }
    out.statements.push_back(make_statement(raw, seg_start, seg_end,
                                            doc_count));
    pos = seg_end;
  }
  return out;
}

std::string render_statement(const Statement& s) {
  std::string markers;
  for (int k : s.citations) markers += "[" + std::to_string(k) + "]";
  for (int k : s.invalid_citations) markers += "[" + std::to_string(k) + "]";
  if (markers.empty()) return s.text;
  const std::string& t = s.text;
  std::size_t e = t.size();
  while (e > 0 && is_terminal(t[e - 1])) --e;
  if (e == t.size()) {
    return t.empty() ? markers : t + " " + markers;
  }
  std::string out = t.substr(0, e);
  if (!out.empty() && out.back() != ' ') out += ' ';
  out += markers;
  out += t.substr(e);
  return out;
}

std::string render_response(const AttributedResponse& resp) {
  std::string out;
  for (const Statement& s : resp.statements) {
    std::string piece = render_statement(s);
    if (piece.empty()) continue;
    if (!out.empty()) out += ' ';
    out += piece;
  }
  return out;
}

std::string strip_citations(std::string_view raw) {
  std::string text;
  text.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    std::size_t next = match_marker(raw, i, nullptr);
    if (next != 0) {
      i = next;
      continue;
    }
    text += raw[i];
    ++i;
  }
  return normalize_whitespace(text);
}

bool same_structure(const AttributedResponse& a, const AttributedResponse& b) {
  if (a.statements.size() != b.statements.size()) return false;
  for (std::size_t i = 0; i < a.statements.size(); ++i) {
    const Statement& x = a.statements[i];
    const Statement& y = b.statements[i];
    if (x.text != y.text) return false;
    if (x.citations != y.citations) return false;
    if (x.invalid_citations != y.invalid_citations) return false;
  }
  return true;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      const bool closing = c == '.' || c == ',' || c == '!' || c == '?' ||
                           c == ';' || c == ':';
      if (!closing) out += ' ';
      pending_space = false;
    }
    out += c;
  }
  return out;
}

bool is_stopword(std::string_view word) {
  static const std::unordered_set<std::string_view> set = {
      "a",     "an",    "the",   "and",   "or",    "but",   "if",
      "then",  "else",  "of",    "to",    "in",    "on",    "at",
      "by",    "for",   "with",  "from",  "as",    "is",    "are",
      "was",   "were",  "be",    "been",  "being", "it",    "its",
      "this",  "that",  "these", "those", "which", "who",   "whom",
      "whose", "not",   "no",    "nor",   "so",    "than",  "too",
      "very",  "can",   "will",  "just",  "about", "into",  "over",
      "under", "again", "once",  "here",  "there", "when",  "where",
      "why",   "how",   "all",   "any",   "both",  "each",  "few",
      "more",  "most",  "other", "some",  "such",  "only",  "own",
      "same",  "s",     "t",     "do",    "does",  "did",   "have",
      "has",   "had",   "i",     "me",    "my",    "we",    "our",
      "you",   "your",  "he",    "him",   "his",   "she",   "her",
      "they",  "them",  "their", "what",  "up",    "down",  "out",
      "off",
  };
  return set.count(word) > 0;
}

std::vector<std::string> content_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !is_stopword(cur)) out.push_back(cur);
    cur.clear();
  };
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::size_t content_word_overlap(std::string_view a, std::string_view b) {
  std::vector<std::string> wa = content_words(a);
  std::vector<std::string> wb = content_words(b);
  std::unordered_set<std::string> sa(wa.begin(), wa.end());
  std::unordered_set<std::string> sb(wb.begin(), wb.end());
  std::size_t n = 0;
  for (const std::string& w : sa) n += sb.count(w);
  return n;
}

}  // namespace attrforge
