#pragma once

#include "attrforge/gateway.hpp"

namespace attrforge {

// In-process stand-in for all three backend roles. Outputs are pure
// functions of the prompt bytes and the request seed, so full pipeline runs
// are reproducible without any model server.
//
// Behavior by prompt shape (default templates):
//  - response generation: 3..6 topic-coded sentences derived from the
//    question hash; questions containing "__blank__" yield empty texts.
//  - claim decomposition: one "- " bullet per claim, splitting each sentence
//    at its last " and ".
//  - document generation: "Notes <hash>" title plus the claim text and one
//    filler sentence.
//  - attribution: one sentence per relevant document (body mentions the
//    question's topic code), cycling through six citation-quality variants
//    so samples cover passing, uncited, under-covering, miscited, doubly
//    deficient, and reordered candidates.
//
// logprob charges one unit per whitespace token plus 0.01 per document
// header in the context; entail checks content-word containment after
// premise truncation and scores 0 or 1.
class MockBackend : public TextGenerator,
                    public SequenceScorer,
                    public EntailmentJudge {
 public:
  explicit MockBackend(int max_premise_chars = 6000,
                       double entail_threshold = 0.5);

  std::vector<std::string> generate(const GenerateRequest& request) override;
  LogprobResult logprob(const std::string& context,
                        const std::string& continuation) override;
  EntailResult entail(const std::string& premise,
                      const std::string& hypothesis) override;

 private:
  int max_premise_chars_;
  double entail_threshold_;
};

// Topic code a mock run derives from a question ("t" + 8 hex digits).
std::string mock_topic_code(const std::string& question);

}  // namespace attrforge
