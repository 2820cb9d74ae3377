#include <cstdlib>

#include "httplib.h"
#include "json.hpp"
#include "pforge/errors.hpp"
#include "pforge/gateway.hpp"

namespace pforge {

namespace {

using Json = nlohmann::ordered_json;

bool is_transient_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

// Connection-level failures (no HTTP status at all) are worth retrying.
[[noreturn]] void throw_transport_error(const std::string& backend_id,
                                        const httplib::Result& result) {
  throw BackendError(backend_id + ": transport error: " + httplib::to_string(result.error()),
                     /*transient=*/true);
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    throw ConfigError("http backend " + config_.id + ": base_url is required");
  }
}

std::string HttpBackend::api_key() const {
  if (config_.api_key_env.empty()) return "";
  const char* value = std::getenv(config_.api_key_env.c_str());
  if (!value || !*value) {
    throw CredentialMissing("http backend " + config_.id + ": environment variable " +
                            config_.api_key_env + " is not set");
  }
  return value;
}

GenerationResult HttpBackend::generate(const GenerationRequest& request) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_s);
  client.set_read_timeout(config_.timeout_s);
  httplib::Headers headers;
  const std::string key = api_key();
  if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

  Json body;
  body["model"] = config_.model;
  body["messages"] = Json::array({Json{{"role", "user"}, {"content", request.instruction}}});
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output_tokens;

  const httplib::Result result =
      client.Post(config_.chat_path, headers, body.dump(), "application/json");
  if (!result) throw_transport_error(config_.id, result);
  if (result->status != 200) {
    throw BackendError(config_.id + ": HTTP " + std::to_string(result->status) + ": " +
                           result->body.substr(0, 500),
                       is_transient_status(result->status));
  }

  try {
    const Json reply = Json::parse(result->body);
    const Json& choice = reply.at("choices").at(0);
    GenerationResult out;
    out.text = choice.at("message").at("content").get<std::string>();
    out.backend_id = config_.id;
    const std::string reason = choice.value("finish_reason", "stop");
    out.finish_reason = reason == "stop" ? "complete"
                        : reason == "length" ? "truncated"
                                             : "refused";
    if (reply.contains("usage")) {
      out.input_tokens = reply["usage"].value("prompt_tokens", 0);
      out.output_tokens = reply["usage"].value("completion_tokens", 0);
    }
    if (out.finish_reason == "complete" && out.text.empty()) {
      throw BackendError(config_.id + ": empty completion despite finish_reason=stop",
                         /*transient=*/true);
    }
    return out;
  } catch (const Json::exception& e) {
    throw BackendError(config_.id + ": malformed chat response: " + std::string(e.what()),
                       /*transient=*/false);
  }
}

ScoreResult HttpBackend::score(const std::string& text) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_s);
  client.set_read_timeout(config_.timeout_s);
  httplib::Headers headers;
  const std::string key = api_key();
  if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

  // Completions-style scoring: echo the prompt with logprobs, generate
  // nothing new.
  Json body;
  body["model"] = config_.model;
  body["prompt"] = text;
  body["max_tokens"] = 0;
  body["echo"] = true;
  body["logprobs"] = 0;

  const httplib::Result result =
      client.Post(config_.completions_path, headers, body.dump(), "application/json");
  if (!result) throw_transport_error(config_.id, result);
  if (result->status == 404) {
    throw ScoringUnsupported(config_.id + ": completions endpoint unavailable");
  }
  if (result->status != 200) {
    throw BackendError(config_.id + ": HTTP " + std::to_string(result->status) + ": " +
                           result->body.substr(0, 500),
                       is_transient_status(result->status));
  }

  try {
    const Json reply = Json::parse(result->body);
    const Json& lp = reply.at("choices").at(0).at("logprobs").at("token_logprobs");
    ScoreResult out;
    for (const auto& v : lp) {
      if (v.is_null()) continue;  // first echoed token has no conditional probability
      out.token_logprobs.push_back(v.get<double>());
    }
    out.token_count = out.token_logprobs.size();
    return out;
  } catch (const Json::exception& e) {
    throw ScoringUnsupported(config_.id + ": malformed scoring response: " +
                             std::string(e.what()));
  }
}

}  // namespace pforge
