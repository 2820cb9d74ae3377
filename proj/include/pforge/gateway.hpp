#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pforge/rng.hpp"

namespace pforge {

struct GenerationRequest {
  std::string instruction;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  std::uint64_t seed = 0;  // consumed by deterministic mock profiles
};

struct GenerationResult {
  std::string text;
  std::string backend_id;
  std::string finish_reason = "complete";  // complete | truncated | refused
  std::size_t input_tokens = 0;
  std::size_t output_tokens = 0;
};

struct ScoreResult {
  std::vector<double> token_logprobs;
  std::size_t token_count = 0;
};

// A text-generation endpoint. Implementations throw BackendError (transient
// or permanent) on failure; the gateway owns the retry policy.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual const std::string& id() const = 0;
  virtual GenerationResult generate(const GenerationRequest& request) = 0;
  // Per-token logprobs of `text` under the backend's model. Backends that
  // cannot score throw ScoringUnsupported.
  virtual ScoreResult score(const std::string& text);
  virtual bool deterministic() const { return false; }
};

struct RetryPolicy {
  int max_retries = 3;
  double initial_backoff_s = 1.0;
  double backoff_multiplier = 2.0;
  double max_backoff_s = 60.0;
  // Tests shrink waits to near-zero without changing the schedule shape.
  double sleep_scale = 1.0;
};

// Wraps a backend with bounded in-flight concurrency and retry-on-transient
// with exponential backoff and jitter in [0.5, 1.5). Permanent errors and
// exhausted retries surface as GatewayFailure subclasses.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, int max_in_flight, RetryPolicy policy,
          std::uint64_t jitter_seed = 0);

  GenerationResult generate(const GenerationRequest& request);
  ScoreResult score(const std::string& text);

  const std::string& backend_id() const;
  std::uint64_t calls_issued() const { return calls_issued_.load(); }

 private:
  class InFlightGuard;
  template <typename Fn>
  auto with_retries(Fn&& fn) -> decltype(fn());

  std::shared_ptr<Backend> backend_;
  int max_in_flight_;
  RetryPolicy policy_;
  std::mutex slot_mutex_;
  std::condition_variable slot_cv_;
  int in_flight_ = 0;
  std::mutex jitter_mutex_;
  Rng jitter_rng_;
  std::atomic<std::uint64_t> calls_issued_{0};
};

// --- Deterministic offline backends -----------------------------------------

// What a mock does with each instruction. Profiles are chosen per backend id
// in the config ("mock:echo", "mock:tag", ...).
enum class MockProfile {
  echo,             // returns the embedded prompt unchanged
  tag,              // prefixes a marker naming the operation it recognized
  expand,           // repeats the embedded prompt k times, space-joined
  reject_language,  // emits a wrong-language sentinel for marked inputs
  hash,             // pseudo-random words derived from (seed, instruction)
  grade,            // emits <quality>/<difficulty> tags from a text hash
  prefer_a,         // pairwise judge: always "Preferred: Response (A)"
  prefer_b,
  prefer_tie,
  prefer_hash,      // pairwise judge: hash-derived preference
};

MockProfile mock_profile_from_string(const std::string& name);

struct MockOptions {
  MockProfile profile = MockProfile::echo;
  int expand_factor = 3;       // for MockProfile::expand
  std::uint64_t salt = 0;      // folded into hash-derived outputs
  bool hashed_scoring = false; // score(): hash-derived logprobs instead of ln(0.5)
};

// Offline stand-in used by tests and the default pipeline config. Thread-safe
// and fully deterministic: output depends only on (options, request).
class MockBackend : public Backend {
 public:
  MockBackend(std::string id, MockOptions options);

  const std::string& id() const override { return id_; }
  GenerationResult generate(const GenerationRequest& request) override;
  ScoreResult score(const std::string& text) override;
  bool deterministic() const override { return true; }

  // The portion of `instruction` after the first "Here is the prompt to
  // <verb>: " lead-in, or the whole instruction when no lead-in is present.
  static std::string extract_embedded_prompt(const std::string& instruction);

 private:
  std::string id_;
  MockOptions options_;
};

// Wraps another backend and fails the first `failures_per_key` attempts for
// each distinct instruction with a transient error. Exercises retry/resume
// paths without real flakiness.
class FlakyBackend : public Backend {
 public:
  FlakyBackend(std::shared_ptr<Backend> inner, int failures_per_key);

  const std::string& id() const override { return inner_->id(); }
  GenerationResult generate(const GenerationRequest& request) override;
  ScoreResult score(const std::string& text) override;
  bool deterministic() const override { return inner_->deterministic(); }
  std::uint64_t attempts() const { return attempts_.load(); }

 private:
  std::shared_ptr<Backend> inner_;
  int failures_per_key_;
  std::mutex mutex_;
  std::map<std::string, int> failures_seen_;
  std::atomic<std::uint64_t> attempts_{0};
};

struct HttpBackendConfig {
  std::string id;
  std::string base_url;       // scheme://host[:port]
  std::string chat_path = "/v1/chat/completions";
  std::string completions_path = "/v1/completions";
  std::string model;
  std::string api_key_env;    // name of the env var holding the credential
  int timeout_s = 120;
  int max_tokens = 1024;
};

// Chat-completions-style HTTP backend. Generation posts a single user
// message; scoring uses the completions endpoint with echo + logprobs.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  const std::string& id() const override { return config_.id; }
  GenerationResult generate(const GenerationRequest& request) override;
  ScoreResult score(const std::string& text) override;

 private:
  std::string api_key() const;
  HttpBackendConfig config_;
};

}  // namespace pforge
