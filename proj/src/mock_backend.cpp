#include "attrforge/mock_backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "attrforge/attr_core.hpp"
#include "attrforge/rng.hpp"

namespace attrforge {

namespace {

std::string hex8(std::uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string out(8, '0');
  auto v = static_cast<std::uint32_t>(x & 0xffffffffull);
  for (int i = 7; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<std::string> extract_section(const std::string& prompt,
                                           const std::string& label) {
  std::size_t pos = prompt.find(label);
  if (pos == std::string::npos) return std::nullopt;
  std::size_t start = pos + label.size();
  std::size_t end = prompt.find("\n\n", start);
  if (end == std::string::npos) end = prompt.size();
  return trim(std::string_view(prompt).substr(start, end - start));
}

std::string require_question(const std::string& prompt) {
  auto q = extract_section(prompt, "Question: ");
  if (!q || q->empty()) {
    throw BackendError("mock: prompt has no Question section", 400);
  }
  return *q;
}

std::string strip_terminal_punct(std::string text) {
  while (!text.empty() &&
         (text.back() == '.' || text.back() == '!' || text.back() == '?')) {
    text.pop_back();
  }
  return text;
}

std::vector<std::string> closed_book_texts(const GenerateRequest& request,
                                           const std::string& question) {
  const bool blank = question.find("__blank__") != std::string::npos;
  const std::uint64_t h = fnv1a64(question);
  const std::string base = mock_topic_code(question);
  const int count = 3 + static_cast<int>(mix64(h) % 4);
  std::string core;
  for (int i = 1; i <= count; ++i) {
    if (!core.empty()) core += ' ';
    core += "Research on " + base + " point " + std::to_string(i) +
            " covers " + base + "p" + std::to_string(i) + "a and " + base +
            "p" + std::to_string(i) + "b.";
  }
  std::vector<std::string> texts;
  texts.reserve(static_cast<std::size_t>(request.n));
  for (int j = 0; j < request.n; ++j) {
    if (blank) {
      texts.emplace_back();
      continue;
    }
    std::string t = core;
    if (j > 0) {
      t += " Sample " + std::to_string(j) + " adds remark " + base + "v" +
           std::to_string(j) + ".";
    }
    texts.push_back(std::move(t));
  }
  return texts;
}

std::string decompose_text(const std::string& response) {
  AttributedResponse parsed = parse_response(response, 0);
  std::string out;
  auto add = [&out](const std::string& claim) { out += "- " + claim + "\n"; };
  for (const Statement& s : parsed.statements) {
    std::string stem = strip_terminal_punct(s.text);
    std::string tail = s.text.substr(stem.size());
    if (tail.empty()) tail = ".";
    std::size_t idx = stem.rfind(" and ");
    std::size_t last_ws =
        idx == std::string::npos ? std::string::npos
                                 : stem.substr(0, idx).find_last_of(' ');
    if (idx == std::string::npos || last_ws == std::string::npos) {
      add(stem + tail);
      continue;
    }
    std::string left = stem.substr(0, idx);
    std::string right = stem.substr(idx + 5);
    add(left + tail);
    add(left.substr(0, last_ws) + " " + right + tail);
  }
  if (out.empty()) out = "- " + normalize_whitespace(response) + "\n";
  return out;
}

std::string document_text(const std::string& claim_text) {
  std::string flat = normalize_whitespace(claim_text);
  return "Notes " + hex8(fnv1a64(flat)) + "\n" + flat +
         " General archival notes apply.";
}

struct PromptDoc {
  int index = 0;
  std::string title;
  std::string body;
};

std::vector<PromptDoc> parse_prompt_docs(const std::string& prompt) {
  std::vector<PromptDoc> docs;
  std::size_t line_start = 0;
  while (line_start < prompt.size()) {
    std::size_t line_end = prompt.find('\n', line_start);
    if (line_end == std::string::npos) line_end = prompt.size();
    std::string_view line(prompt.data() + line_start, line_end - line_start);
    if (line.rfind("Document [", 0) == 0) {
      std::size_t rb = line.find(']');
      std::size_t ts = line.find("(Title: ");
      std::size_t sep =
          ts == std::string::npos ? std::string::npos : line.find("): ", ts);
      if (rb != std::string::npos && ts != std::string::npos &&
          sep != std::string::npos && rb > 10) {
        PromptDoc d;
        d.index = std::atoi(std::string(line.substr(10, rb - 10)).c_str());
        d.title = std::string(line.substr(ts + 8, sep - (ts + 8)));
        d.body = std::string(line.substr(sep + 3));
        docs.push_back(std::move(d));
      }
    }
    line_start = line_end + 1;
  }
  return docs;
}

struct CandidatePiece {
  int doc_index = 0;
  std::string text;  // one sentence, no markers
  int claims = 1;
};

// Folds a document body into one citable sentence so the sentence's content
// words stay inside the document's.
CandidatePiece make_piece(const PromptDoc& doc) {
  CandidatePiece piece;
  piece.doc_index = doc.index;
  AttributedResponse parsed = parse_response(doc.body, 0);
  std::string joined;
  for (const Statement& s : parsed.statements) {
    std::string part = strip_terminal_punct(s.text);
    if (part.empty()) continue;
    if (!joined.empty()) joined += " and ";
    joined += part;
  }
  if (joined.empty()) joined = strip_terminal_punct(normalize_whitespace(doc.body));
  piece.text = joined + ".";
  int sentences = static_cast<int>(parsed.statements.size());
  piece.claims = sentences > 1 ? sentences - 1 : 1;
  return piece;
}

std::string assemble(const std::vector<CandidatePiece>& pieces,
                     const std::vector<std::vector<int>>& citations) {
  AttributedResponse resp;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    Statement s;
    s.text = pieces[i].text;
    s.citations = citations[i];
    resp.statements.push_back(std::move(s));
  }
  return render_response(resp);
}

// Drop order for the under-covering variants: biggest documents first until
// fewer than 80% of the claims remain.
std::vector<CandidatePiece> drop_largest(std::vector<CandidatePiece> pieces) {
  int total = 0;
  for (const CandidatePiece& p : pieces) total += p.claims;
  std::vector<std::size_t> order(pieces.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&pieces](std::size_t a, std::size_t b) {
                     return pieces[a].claims > pieces[b].claims;
                   });
  std::unordered_set<std::size_t> dropped;
  int remaining = total;
  for (std::size_t i : order) {
    if (dropped.size() + 1 >= pieces.size()) break;
    if (static_cast<double>(remaining) < 0.8 * total) break;
    dropped.insert(i);
    remaining -= pieces[i].claims;
  }
  std::vector<CandidatePiece> kept;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (!dropped.count(i)) kept.push_back(pieces[i]);
  }
  return kept;
}

std::vector<std::string> attribution_texts(const GenerateRequest& request,
                                           const std::string& prompt) {
  const std::string question = require_question(prompt);
  const std::string base = mock_topic_code(question);
  std::vector<PromptDoc> docs = parse_prompt_docs(prompt);
  std::vector<CandidatePiece> pieces;
  std::vector<int> offtopic;
  for (const PromptDoc& d : docs) {
    if (d.body.find(base) != std::string::npos) {
      pieces.push_back(make_piece(d));
    } else {
      offtopic.push_back(d.index);
    }
  }
  std::sort(pieces.begin(), pieces.end(),
            [](const CandidatePiece& a, const CandidatePiece& b) {
              return a.doc_index < b.doc_index;
            });

  auto cite_own = [](const std::vector<CandidatePiece>& ps) {
    std::vector<std::vector<int>> cites;
    cites.reserve(ps.size());
    for (const CandidatePiece& p : ps) cites.push_back({p.doc_index});
    return cites;
  };

  auto build = [&](int variant) -> std::string {
    if (pieces.empty()) return "No supported answer was found.";
    switch (variant) {
      case 1: {  // first statement uncited
        auto cites = cite_own(pieces);
        cites[0].clear();
        return assemble(pieces, cites);
      }
      case 2: {  // misses the largest documents
        if (pieces.size() < 2) break;
        auto kept = drop_largest(pieces);
        return assemble(kept, cite_own(kept));
      }
      case 3: {  // first statement cites the wrong document
        std::vector<CandidatePiece> ps = pieces;
        auto cites = cite_own(ps);
        if (!offtopic.empty()) {
          cites[0] = {offtopic.front()};
        } else if (ps.size() >= 2) {
          cites[0] = {ps[1].doc_index};
        } else {
          break;
        }
        return assemble(ps, cites);
      }
      case 4: {  // under-covering and uncited at once
        if (pieces.size() < 2) break;
        auto kept = drop_largest(pieces);
        auto cites = cite_own(kept);
        cites[0].clear();
        return assemble(kept, cites);
      }
      case 5: {  // passing, reversed statement order
        std::vector<CandidatePiece> rev(pieces.rbegin(), pieces.rend());
        return assemble(rev, cite_own(rev));
      }
      default:
        break;
    }
    return assemble(pieces, cite_own(pieces));
  };

  const std::uint64_t rotation = mix64(request.seed.value_or(0)) % 6;
  std::vector<std::string> texts;
  texts.reserve(static_cast<std::size_t>(request.n));
  for (int j = 0; j < request.n; ++j) {
    int variant =
        static_cast<int>((static_cast<std::uint64_t>(j) + rotation) % 6);
    texts.push_back(build(variant));
  }
  return texts;
}

int count_tokens(const std::string& text) {
  int tokens = 0;
  bool in_token = false;
  for (char c : text) {
    bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!ws && !in_token) ++tokens;
    in_token = !ws;
  }
  return tokens > 0 ? tokens : 1;
}

int count_doc_headers(const std::string& text) {
  int count = 0;
  std::size_t pos = 0;
  while ((pos = text.find("Document [", pos)) != std::string::npos) {
    ++count;
    pos += 10;
  }
  return count;
}

}  // namespace

std::string mock_topic_code(const std::string& question) {
  return "t" + hex8(fnv1a64(question));
}

MockBackend::MockBackend(int max_premise_chars, double entail_threshold)
    : max_premise_chars_(max_premise_chars),
      entail_threshold_(entail_threshold) {}

std::vector<std::string> MockBackend::generate(const GenerateRequest& request) {
  validate(request);
  const std::string& p = request.prompt;
  if (p.rfind("Given a question,", 0) == 0) {
    return closed_book_texts(request, require_question(p));
  }
  if (p.rfind("Given a detailed and informative response,", 0) == 0) {
    auto response = extract_section(p, "Response: ");
    if (!response || response->empty()) {
      throw BackendError("mock: prompt has no Response section", 400);
    }
    return std::vector<std::string>(static_cast<std::size_t>(request.n),
                                    decompose_text(*response));
  }
  if (p.rfind("Given a claim,", 0) == 0) {
    auto claim = extract_section(p, "Claim: ");
    if (!claim || claim->empty()) {
      throw BackendError("mock: prompt has no Claim section", 400);
    }
    return std::vector<std::string>(static_cast<std::size_t>(request.n),
                                    document_text(*claim));
  }
  if (p.rfind("Instruction:", 0) == 0) {
    return attribution_texts(request, p);
  }
  throw BackendError("mock: unrecognized prompt shape", 400);
}

LogprobResult MockBackend::logprob(const std::string& context,
                                   const std::string& continuation) {
  LogprobResult result;
  result.token_count = count_tokens(continuation);
  result.logprob_sum = -result.token_count *
                       (1.0 + 0.01 * count_doc_headers(context));
  return result;
}

EntailResult MockBackend::entail(const std::string& premise,
                                 const std::string& hypothesis) {
  std::string clipped = truncate_premise(premise, max_premise_chars_);
  std::vector<std::string> premise_words = content_words(clipped);
  std::unordered_set<std::string> vocabulary(premise_words.begin(),
                                             premise_words.end());
  bool contained = true;
  for (const std::string& w : content_words(hypothesis)) {
    if (!vocabulary.count(w)) {
      contained = false;
      break;
    }
  }
  EntailResult result;
  result.score = contained ? 1.0 : 0.0;
  result.entailed = result.score >= entail_threshold_;
  return result;
}

}  // namespace attrforge
