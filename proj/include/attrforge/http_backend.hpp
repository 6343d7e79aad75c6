#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <semaphore>

#include "attrforge/gateway.hpp"
#include "json.hpp"

namespace attrforge {

// JSON-over-HTTP client for a model server exposing /v1/generate,
// /v1/logprob, and /v1/entail. Retries transport failures with exponential
// backoff; served errors surface immediately as BackendError. At most
// endpoint.parallelism requests are in flight at a time.
class HttpBackend : public TextGenerator,
                    public SequenceScorer,
                    public EntailmentJudge {
 public:
  explicit HttpBackend(BackendEndpoint endpoint);

  HttpBackend(const HttpBackend&) = delete;
  HttpBackend& operator=(const HttpBackend&) = delete;

  std::vector<std::string> generate(const GenerateRequest& request) override;
  LogprobResult logprob(const std::string& context,
                        const std::string& continuation) override;
  EntailResult entail(const std::string& premise,
                      const std::string& hypothesis) override;

  const BackendEndpoint& endpoint() const { return endpoint_; }

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& payload);

  BackendEndpoint endpoint_;
  std::counting_semaphore<> slots_;
  std::atomic<std::uint64_t> request_counter_{0};
};

}  // namespace attrforge
