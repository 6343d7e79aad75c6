#include "attrforge/http_backend.hpp"

#include <chrono>
#include <thread>

#include "httplib.h"

namespace attrforge {

namespace {

using Json = nlohmann::json;

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& sem) : sem_(sem) {
    sem_.acquire();
  }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& sem_;
};

std::string served_error_message(const httplib::Response& res) {
  Json body = Json::parse(res.body, nullptr, false);
  if (body.is_object() && body.contains("error") &&
      body["error"].is_string()) {
    return body["error"].get<std::string>();
  }
  return res.body.empty() ? "(empty body)" : res.body;
}

double require_number(const Json& j, const char* key, const std::string& where,
                      int status) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw BackendError(where + ": response missing numeric '" + key + "'",
                       status);
  }
  return it->get<double>();
}

}  // namespace

HttpBackend::HttpBackend(BackendEndpoint endpoint)
    : endpoint_(std::move(endpoint)),
      slots_(endpoint_.parallelism > 0 ? endpoint_.parallelism : 1) {
  validate(endpoint_);
}

Json HttpBackend::post(const std::string& path, const Json& payload) {
  const std::string where = endpoint_.base_url + path;
  const std::string body = payload.dump();
  std::string last_error;
  int backoff_ms = endpoint_.retry_backoff_ms;
  for (int attempt = 1; attempt <= endpoint_.max_retries; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
    SlotGuard guard(slots_);
    httplib::Client client(endpoint_.base_url);
    const auto timeout = std::chrono::milliseconds(endpoint_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers{
        {"X-Request-Id",
         "af-" + std::to_string(request_counter_.fetch_add(1) + 1)}};
    if (!endpoint_.auth_token.empty()) {
      headers.emplace("Authorization", "Bearer " + endpoint_.auth_token);
    }
    httplib::Result res =
        client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw BackendError(where + ": HTTP " + std::to_string(res->status) +
                             ": " + served_error_message(*res),
                         res->status);
    }
    Json parsed = Json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
      throw BackendError(where + ": response is not a JSON object",
                         res->status);
    }
    return parsed;
  }
  throw TransportError(where + ": unreachable after " +
                       std::to_string(endpoint_.max_retries) +
                       " attempts: " + last_error);
}

std::vector<std::string> HttpBackend::generate(
    const GenerateRequest& request) {
  validate(request);
  Json payload{{"prompt", request.prompt},
               {"n", request.n},
               {"temperature", request.temperature},
               {"top_p", request.top_p},
               {"max_tokens", request.max_tokens}};
  if (request.seed) payload["seed"] = *request.seed;
  Json response = post("/v1/generate", payload);
  auto it = response.find("texts");
  if (it == response.end() || !it->is_array()) {
    throw BackendError(endpoint_.base_url +
                           "/v1/generate: response missing 'texts' array",
                       200);
  }
  std::vector<std::string> texts;
  texts.reserve(it->size());
  for (const Json& t : *it) {
    if (!t.is_string()) {
      throw BackendError(endpoint_.base_url +
                             "/v1/generate: 'texts' must hold strings",
                         200);
    }
    texts.push_back(t.get<std::string>());
  }
  if (static_cast<int>(texts.size()) != request.n) {
    throw BackendError(endpoint_.base_url + "/v1/generate: asked for " +
                           std::to_string(request.n) + " texts, got " +
                           std::to_string(texts.size()),
                       200);
  }
  return texts;
}

LogprobResult HttpBackend::logprob(const std::string& context,
                                   const std::string& continuation) {
  Json response = post("/v1/logprob",
                       Json{{"context", context},
                            {"continuation", continuation}});
  LogprobResult result;
  const std::string where = endpoint_.base_url + "/v1/logprob";
  result.logprob_sum = require_number(response, "logprob_sum", where, 200);
  result.token_count =
      static_cast<int>(require_number(response, "token_count", where, 200));
  return result;
}

EntailResult HttpBackend::entail(const std::string& premise,
                                 const std::string& hypothesis) {
  Json response =
      post("/v1/entail",
           Json{{"premise",
                 truncate_premise(premise, endpoint_.max_premise_chars)},
                {"hypothesis", hypothesis}});
  EntailResult result;
  const std::string where = endpoint_.base_url + "/v1/entail";
  result.score = require_number(response, "score", where, 200);
  auto it = response.find("entailed");
  if (it != response.end() && it->is_boolean()) {
    result.entailed = it->get<bool>();
  } else {
    result.entailed = result.score >= endpoint_.entail_threshold;
  }
  return result;
}

}  // namespace attrforge
