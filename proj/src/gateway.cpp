#include "attrforge/gateway.hpp"

namespace attrforge {

std::string truncate_premise(std::string_view premise, int max_chars) {
  if (max_chars < 0) {
    throw std::invalid_argument("truncate_premise: max_chars must be >= 0");
  }
  const auto cap = static_cast<std::size_t>(max_chars);
  if (premise.size() <= cap) return std::string(premise);
  return std::string(premise.substr(0, cap));
}

void validate(const GenerateRequest& request) {
  if (request.prompt.empty()) {
    throw std::invalid_argument("generate: prompt must be non-empty");
  }
  if (request.n < 1) {
    throw std::invalid_argument("generate: n must be >= 1");
  }
  if (request.temperature < 0.0) {
    throw std::invalid_argument("generate: temperature must be >= 0");
  }
  if (request.top_p <= 0.0 || request.top_p > 1.0) {
    throw std::invalid_argument("generate: top_p must be in (0, 1]");
  }
  if (request.max_tokens < 1) {
    throw std::invalid_argument("generate: max_tokens must be >= 1");
  }
}

void validate(const BackendEndpoint& endpoint) {
  if (endpoint.base_url.empty()) {
    throw std::invalid_argument("endpoint: base_url must be non-empty");
  }
  if (endpoint.timeout_ms < 1) {
    throw std::invalid_argument("endpoint: timeout_ms must be >= 1");
  }
  if (endpoint.max_retries < 1) {
    throw std::invalid_argument("endpoint: max_retries must be >= 1");
  }
  if (endpoint.retry_backoff_ms < 0) {
    throw std::invalid_argument("endpoint: retry_backoff_ms must be >= 0");
  }
  if (endpoint.parallelism < 1) {
    throw std::invalid_argument("endpoint: parallelism must be >= 1");
  }
  if (endpoint.max_premise_chars < 1) {
    throw std::invalid_argument("endpoint: max_premise_chars must be >= 1");
  }
  if (endpoint.entail_threshold < 0.0 || endpoint.entail_threshold > 1.0) {
    throw std::invalid_argument("endpoint: entail_threshold must be in [0, 1]");
  }
}

}  // namespace attrforge
