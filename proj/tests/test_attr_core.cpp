#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <stdexcept>
#include <string>
#include <vector>

#include "attrforge/attr_core.hpp"
#include "attrforge/rng.hpp"

using namespace attrforge;

namespace {

DocumentSet make_docs(int n) {
  DocumentSet docs;
  for (int i = 1; i <= n; ++i) {
    docs.docs.push_back(Document{"d" + std::to_string(i),
                                 "Title " + std::to_string(i),
                                 "Body " + std::to_string(i),
                                 DocOrigin::retrieved, std::nullopt});
  }
  return docs;
}

}  // namespace

TEST_CASE("two statements with markers") {
  AttributedResponse r =
      parse_response("Paris is the capital [1][3]. It has museums [2].", 3);
  REQUIRE(r.statements.size() == 2);
  CHECK(r.statements[0].text == "Paris is the capital.");
  CHECK(r.statements[0].citations == std::vector<int>{1, 3});
  CHECK(r.statements[0].invalid_citations.empty());
  CHECK(r.statements[1].text == "It has museums.");
  CHECK(r.statements[1].citations == std::vector<int>{2});
}

TEST_CASE("statement without citations") {
  AttributedResponse r = parse_response("The sky is blue.", 0);
  REQUIRE(r.statements.size() == 1);
  CHECK(r.statements[0].text == "The sky is blue.");
  CHECK_FALSE(r.statements[0].has_citations());
}

TEST_CASE("out of range markers are kept as invalid citations") {
  AttributedResponse r = parse_response("Cited badly [7].", 5);
  REQUIRE(r.statements.size() == 1);
  CHECK(r.statements[0].citations.empty());
  CHECK(r.statements[0].invalid_citations == std::vector<int>{7});

  AttributedResponse zero = parse_response("Zero marker [0].", 5);
  CHECK(zero.statements[0].invalid_citations == std::vector<int>{0});
}

TEST_CASE("duplicate markers deduplicate ascending") {
  AttributedResponse r = parse_response("Result [2][2][1].", 2);
  REQUIRE(r.statements.size() == 1);
  CHECK(r.statements[0].citations == std::vector<int>{1, 2});
}

TEST_CASE("negative doc_count is a precondition violation") {
  CHECK_THROWS_AS(parse_response("x.", -1), std::invalid_argument);
}

TEST_CASE("abbreviations do not end statements") {
  AttributedResponse r =
      parse_response("Some metals, e.g. copper, conduct well [1].", 1);
  CHECK(r.statements.size() == 1);
  AttributedResponse dr = parse_response("Dr. Smith wrote this [1].", 1);
  CHECK(dr.statements.size() == 1);
  CHECK(dr.statements[0].text == "Dr. Smith wrote this.");
}

TEST_CASE("decimal points do not end statements") {
  AttributedResponse r = parse_response("It grew 3.5 percent [1].", 1);
  REQUIRE(r.statements.size() == 1);
  CHECK(r.statements[0].text == "It grew 3.5 percent.");
  CHECK(r.statements[0].citations == std::vector<int>{1});
}

TEST_CASE("multi-digit markers and the digit-length cap") {
  AttributedResponse r = parse_response("Wide corpus claim [12].", 12);
  CHECK(r.statements[0].citations == std::vector<int>{12});

  // Ten or more digits stays literal text.
  AttributedResponse lit = parse_response("Huge [1234567890].", 3);
  CHECK(lit.statements[0].citations.empty());
  CHECK(lit.statements[0].invalid_citations.empty());
  CHECK(lit.statements[0].text.find("1234567890") != std::string::npos);
}

TEST_CASE("bracketed words are not markers") {
  AttributedResponse r = parse_response("Known [sic] issue [2].", 2);
  REQUIRE(r.statements.size() == 1);
  CHECK(r.statements[0].citations == std::vector<int>{2});
  CHECK(r.statements[0].text.find("[sic]") != std::string::npos);
}

TEST_CASE("trailing segment without punctuation is a statement") {
  AttributedResponse r = parse_response("First part [1]. And a tail [2]", 2);
  REQUIRE(r.statements.size() == 2);
  CHECK(r.statements[1].citations == std::vector<int>{2});
}

TEST_CASE("exclamation and question boundaries") {
  AttributedResponse r = parse_response("Really [1]! Is it so [2]? Yes [1].", 2);
  REQUIRE(r.statements.size() == 3);
  CHECK(r.statements[0].citations == std::vector<int>{1});
  CHECK(r.statements[1].citations == std::vector<int>{2});
  CHECK(r.statements[2].citations == std::vector<int>{1});
}

TEST_CASE("char spans slice the raw text in order") {
  std::string raw = "Alpha beta [1]. Gamma delta [2][3]. Tail";
  AttributedResponse r = parse_response(raw, 3);
  REQUIRE(r.statements.size() == 3);
  std::size_t prev_end = 0;
  for (const Statement& s : r.statements) {
    CHECK(s.char_span.first >= prev_end);
    CHECK(s.char_span.second <= raw.size());
    CHECK(s.char_span.first < s.char_span.second);
    prev_end = s.char_span.second;
    // Re-parsing the slice alone reproduces the statement.
    AttributedResponse one =
        parse_response(raw.substr(s.char_span.first,
                                  s.char_span.second - s.char_span.first),
                       3);
    REQUIRE(one.statements.size() == 1);
    CHECK(one.statements[0].text == s.text);
    CHECK(one.statements[0].citations == s.citations);
  }
}

TEST_CASE("render places markers before terminal punctuation") {
  Statement s;
  s.text = "Copper conducts well.";
  s.citations = {1, 3};
  CHECK(render_statement(s) == "Copper conducts well [1][3].");

  Statement bare;
  bare.text = "No punctuation here";
  bare.citations = {2};
  CHECK(render_statement(bare) == "No punctuation here [2]");

  Statement invalid;
  invalid.text = "Mixed.";
  invalid.citations = {1};
  invalid.invalid_citations = {9};
  CHECK(render_statement(invalid) == "Mixed [1][9].");
}

TEST_CASE("strip_citations removes markers and tidies spacing") {
  CHECK(strip_citations("Paris is the capital [1][3]. It has museums [2].") ==
        "Paris is the capital. It has museums.");
  CHECK(strip_citations("No markers here.") == "No markers here.");
}

TEST_CASE("normalize_whitespace") {
  CHECK(normalize_whitespace("  a   b .") == "a b.");
  CHECK(normalize_whitespace("\tx\n\ny  ,z") == "x y,z");
  CHECK(normalize_whitespace("") == "");
}

TEST_CASE("content words drop stopwords and casefold") {
  std::vector<std::string> words = content_words("The Eiffel Tower stands");
  CHECK(words == std::vector<std::string>{"eiffel", "tower", "stands"});
  CHECK(content_word_overlap("the red fox", "A RED Fox ran") == 2);
  CHECK(is_stopword("the"));
  CHECK_FALSE(is_stopword("fox"));
}

TEST_CASE("document set lookups") {
  DocumentSet docs = make_docs(3);
  CHECK(docs.resolves(1));
  CHECK(docs.resolves(3));
  CHECK_FALSE(docs.resolves(0));
  CHECK_FALSE(docs.resolves(4));
  CHECK(docs.at_index(2).doc_id == "d2");
  CHECK_THROWS_AS(docs.at_index(0), std::out_of_range);
  CHECK_THROWS_AS(docs.at_index(4), std::out_of_range);
  CHECK(docs.index_of("d3") == 3);
  CHECK_FALSE(docs.index_of("missing").has_value());
}

TEST_CASE("same_structure ignores spans and raw text") {
  AttributedResponse a = parse_response("One fact [1]. Two facts [2].", 2);
  AttributedResponse b = parse_response("One fact [1].   Two facts [2].", 2);
  CHECK(same_structure(a, b));
  AttributedResponse c = parse_response("One fact [2]. Two facts [2].", 2);
  CHECK_FALSE(same_structure(a, c));
}

TEST_CASE("parse totality on arbitrary bytes") {
  Rng rng(0x100f00d);
  for (int trial = 0; trial < 500; ++trial) {
    std::string raw;
    std::size_t len = rng.below(120);
    for (std::size_t i = 0; i < len; ++i) {
      raw.push_back(static_cast<char>(rng.below(256)));
    }
    AttributedResponse r = parse_response(raw, static_cast<int>(rng.below(8)));
    for (const Statement& s : r.statements) {
      CHECK(s.char_span.second <= raw.size());
      CHECK(s.char_span.first < s.char_span.second);
      CHECK(std::is_sorted(s.citations.begin(), s.citations.end()));
    }
  }
}

TEST_CASE("render/parse round trip on fuzzed responses") {
  static const char* kVocab[] = {"alpha", "Beta",  "gamma", "delta", "omega",
                                 "stone", "river", "light", "sound", "metal",
                                 "North", "field", "crane", "10",    "waves"};
  Rng rng(0xf0225);
  for (int trial = 0; trial < 2000; ++trial) {
    int doc_count = 1 + static_cast<int>(rng.below(20));
    AttributedResponse built;
    int n_statements = 1 + static_cast<int>(rng.below(5));
    for (int s = 0; s < n_statements; ++s) {
      Statement st;
      int n_words = 1 + static_cast<int>(rng.below(7));
      for (int w = 0; w < n_words; ++w) {
        if (w > 0) st.text += ' ';
        st.text += kVocab[rng.below(std::size(kVocab))];
      }
      const char* punct[] = {".", "!", "?"};
      st.text += punct[rng.below(3)];
      int n_cites = static_cast<int>(rng.below(4));
      for (int c = 0; c < n_cites; ++c) {
        st.citations.push_back(1 + static_cast<int>(rng.below(doc_count)));
      }
      std::sort(st.citations.begin(), st.citations.end());
      st.citations.erase(
          std::unique(st.citations.begin(), st.citations.end()),
          st.citations.end());
      if (rng.below(8) == 0) {
        st.invalid_citations.push_back(doc_count + 1 +
                                       static_cast<int>(rng.below(50)));
      }
      built.statements.push_back(std::move(st));
    }
    built.raw_text = render_response(built);
    AttributedResponse reparsed = parse_response(built.raw_text, doc_count);
    CAPTURE(built.raw_text);
    CHECK(same_structure(built, reparsed));
  }
}
