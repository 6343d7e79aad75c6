#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace attrforge {

// Backend failures split by whether a retry can help. Transport problems
// (connect, timeout) are retryable; a served error response is not.
class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class BackendError : public GatewayError {
 public:
  BackendError(const std::string& message, int http_status)
      : GatewayError(message), http_status_(http_status) {}
  int http_status() const { return http_status_; }

 private:
  int http_status_;
};

struct GenerateRequest {
  std::string prompt;
  int n = 1;
  double temperature = 1.0;
  double top_p = 0.95;
  int max_tokens = 1024;
  std::optional<std::uint64_t> seed;
};

struct LogprobResult {
  double logprob_sum = 0.0;
  int token_count = 0;
};

struct EntailResult {
  bool entailed = false;
  double score = 0.0;
};

class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  // Returns exactly request.n texts, in sample order.
  virtual std::vector<std::string> generate(const GenerateRequest& request) = 0;
};

class SequenceScorer {
 public:
  virtual ~SequenceScorer() = default;
  virtual LogprobResult logprob(const std::string& context,
                                const std::string& continuation) = 0;
};

class EntailmentJudge {
 public:
  virtual ~EntailmentJudge() = default;
  virtual EntailResult entail(const std::string& premise,
                              const std::string& hypothesis) = 0;
};

struct BackendEndpoint {
  std::string base_url;
  std::string auth_token;
  int timeout_ms = 30000;
  int max_retries = 3;
  int retry_backoff_ms = 250;
  int parallelism = 8;
  int max_premise_chars = 6000;
  double entail_threshold = 0.5;
};

// Keeps the first max_chars characters; long evidence is cut from the tail.
std::string truncate_premise(std::string_view premise, int max_chars);

void validate(const GenerateRequest& request);
void validate(const BackendEndpoint& endpoint);

}  // namespace attrforge
