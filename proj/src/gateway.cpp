#include "pforge/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <thread>

#include "pforge/errors.hpp"
#include "pforge/util.hpp"

namespace pforge {

ScoreResult Backend::score(const std::string&) {
  throw ScoringUnsupported("backend " + id() + " does not support token scoring");
}

// --- Gateway ------------------------------------------------------------------

class Gateway::InFlightGuard {
 public:
  explicit InFlightGuard(Gateway& g) : g_(g) {
    std::unique_lock lock(g_.slot_mutex_);
    g_.slot_cv_.wait(lock, [&] { return g_.in_flight_ < g_.max_in_flight_; });
    ++g_.in_flight_;
  }
  ~InFlightGuard() {
    {
      std::lock_guard lock(g_.slot_mutex_);
      --g_.in_flight_;
    }
    g_.slot_cv_.notify_one();
  }

 private:
  Gateway& g_;
};

Gateway::Gateway(std::shared_ptr<Backend> backend, int max_in_flight, RetryPolicy policy,
                 std::uint64_t jitter_seed)
    : backend_(std::move(backend)),
      max_in_flight_(std::max(1, max_in_flight)),
      policy_(policy),
      jitter_rng_(jitter_seed) {}

const std::string& Gateway::backend_id() const { return backend_->id(); }

template <typename Fn>
auto Gateway::with_retries(Fn&& fn) -> decltype(fn()) {
  double backoff = policy_.initial_backoff_s;
  for (int attempt = 0;; ++attempt) {
    try {
      InFlightGuard guard(*this);
      calls_issued_.fetch_add(1);
      return fn();
    } catch (const BackendError& e) {
      if (!e.transient()) {
        throw PermanentRejection(backend_->id() + ": " + e.what());
      }
      if (attempt >= policy_.max_retries) {
        throw TransientExhausted(backend_->id() + ": retries exhausted after " +
                                 std::to_string(attempt + 1) + " attempts: " + e.what());
      }
      double jitter;
      {
        std::lock_guard lock(jitter_mutex_);
        jitter = 0.5 + jitter_rng_.next_double();
      }
      const double wait_s =
          std::min(backoff, policy_.max_backoff_s) * jitter * policy_.sleep_scale;
      if (wait_s > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
      }
      backoff = std::min(backoff * policy_.backoff_multiplier, policy_.max_backoff_s);
    }
  }
}

GenerationResult Gateway::generate(const GenerationRequest& request) {
  if (request.instruction.empty()) {
    throw DataError("generation request with empty instruction");
  }
  if (request.temperature < 0.0 || request.temperature > 2.0) {
    throw DataError("temperature out of range [0, 2]");
  }
  return with_retries([&] { return backend_->generate(request); });
}

ScoreResult Gateway::score(const std::string& text) {
  if (text.empty()) throw DataError("cannot score empty text");
  return with_retries([&] { return backend_->score(text); });
}

// --- MockBackend ----------------------------------------------------------------

MockProfile mock_profile_from_string(const std::string& name) {
  if (name == "echo") return MockProfile::echo;
  if (name == "tag") return MockProfile::tag;
  if (name == "expand") return MockProfile::expand;
  if (name == "reject_language") return MockProfile::reject_language;
  if (name == "hash") return MockProfile::hash;
  if (name == "grade") return MockProfile::grade;
  if (name == "prefer_a") return MockProfile::prefer_a;
  if (name == "prefer_b") return MockProfile::prefer_b;
  if (name == "prefer_tie") return MockProfile::prefer_tie;
  if (name == "prefer_hash") return MockProfile::prefer_hash;
  throw ConfigError("unknown mock profile: \"" + name + "\"");
}

MockBackend::MockBackend(std::string id, MockOptions options)
    : id_(std::move(id)), options_(options) {}

std::string MockBackend::extract_embedded_prompt(const std::string& instruction) {
  static const std::string lead = "Here is the prompt to ";
  const std::size_t at = instruction.find(lead);
  if (at == std::string::npos) return instruction;
  const std::size_t colon = instruction.find(": ", at + lead.size());
  if (colon == std::string::npos) return instruction;
  return instruction.substr(colon + 2);
}

namespace {

// The stage marker a tag-profile mock emits, keyed off the lead-in verb of
// the operator templates. "{Language}" is the display name from the
// translate instruction, so language-ID rules can key on it downstream.
std::string tag_marker(const std::string& instruction) {
  const std::string translate_lead = "Translate the following into ";
  if (starts_with(instruction, translate_lead)) {
    const std::size_t comma = instruction.find(',', translate_lead.size());
    std::string display = comma == std::string::npos
                              ? "Unknown"
                              : instruction.substr(translate_lead.size(),
                                                   comma - translate_lead.size());
    return "[xlat:" + display + "] ";
  }
  if (contains(instruction, "Here is the prompt to naturalize: ")) return "[nat] ";
  if (contains(instruction, "Here is the prompt to adapt: ")) return "[cult] ";
  if (contains(instruction, "Here is the prompt to complexify: ")) return "[diff] ";
  return "[resp] ";
}

std::size_t whitespace_token_count(const std::string& text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    const bool is_space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!is_space && !in_token) ++count;
    in_token = !is_space;
  }
  return count;
}

const char* kWordBank[] = {"alpha", "bravo", "charlie", "delta",  "echo",  "foxtrot",
                           "golf",  "hotel", "india",   "juliet", "kilo",  "lima",
                           "mike",  "nancy", "oscar",   "papa",   "quebec", "romeo"};

std::string hash_words(std::uint64_t seed, const std::string& instruction,
                       std::uint64_t salt) {
  std::uint64_t state = splitmix64(seed ^ fnv1a64(instruction) ^ salt);
  const std::size_t n_words = 6 + state % 7;
  std::string out;
  for (std::size_t i = 0; i < n_words; ++i) {
    state = splitmix64(state);
    if (i) out += ' ';
    out += kWordBank[state % (sizeof(kWordBank) / sizeof(kWordBank[0]))];
  }
  return out;
}

}  // namespace

GenerationResult MockBackend::generate(const GenerationRequest& request) {
  const std::string prompt = extract_embedded_prompt(request.instruction);
  std::string text;
  switch (options_.profile) {
    case MockProfile::echo:
      text = prompt;
      break;
    case MockProfile::tag:
      text = tag_marker(request.instruction) + prompt;
      break;
    case MockProfile::expand: {
      for (int i = 0; i < std::max(1, options_.expand_factor); ++i) {
        if (i) text += ' ';
        text += prompt;
      }
      break;
    }
    case MockProfile::reject_language:
      if (contains(prompt, "[[REJECT-ME]]")) {
        text = "[[WRONG-LANGUAGE]] " + prompt;
      } else {
        text = tag_marker(request.instruction) + prompt;
      }
      break;
    case MockProfile::hash:
      text = hash_words(request.seed, request.instruction, options_.salt);
      break;
    case MockProfile::grade: {
      // Deterministic but varied grades, derived from the instruction text.
      const std::uint64_t h = splitmix64(fnv1a64(request.instruction) ^ options_.salt);
      const char quality = static_cast<char>('A' + h % 5);
      static const char* difficulties[] = {"easy", "medium", "hard"};
      const char* difficulty = difficulties[(h >> 8) % 3];
      text = "The submission was reviewed against every criterion.\n<quality>" +
             std::string(1, quality) + "</quality> <difficulty>" + difficulty +
             "</difficulty>";
      break;
    }
    case MockProfile::prefer_a:
      text = "Comparison: both responses were considered.\n\nPreferred: Response (A)";
      break;
    case MockProfile::prefer_b:
      text = "Comparison: both responses were considered.\n\nPreferred: Response (B)";
      break;
    case MockProfile::prefer_tie:
      text = "Comparison: the responses are equivalent.\n\nPreferred: TIE";
      break;
    case MockProfile::prefer_hash: {
      const std::uint64_t h =
          splitmix64(fnv1a64(request.instruction) ^ options_.salt ^ request.seed);
      const char* pick = h % 3 == 0   ? "Response (A)"
                         : h % 3 == 1 ? "Response (B)"
                                      : "TIE";
      text = std::string("Comparison: graded by contents.\n\nPreferred: ") + pick;
      break;
    }
  }
  GenerationResult result;
  result.text = std::move(text);
  result.backend_id = id_;
  result.finish_reason = "complete";
  result.input_tokens = whitespace_token_count(request.instruction);
  result.output_tokens = whitespace_token_count(result.text);
  return result;
}

ScoreResult MockBackend::score(const std::string& text) {
  ScoreResult result;
  std::size_t token_index = 0;
  bool in_token = false;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    const bool is_space = i == text.size() || std::isspace(static_cast<unsigned char>(text[i]));
    if (!is_space && !in_token) {
      in_token = true;
    } else if (is_space && in_token) {
      in_token = false;
      double lp = std::log(0.5);
      if (options_.hashed_scoring) {
        const std::uint64_t h = splitmix64(fnv1a64(text) + token_index + options_.salt);
        // logprob in (-3, 0): pseudo-random but reproducible.
        lp = -3.0 * (static_cast<double>(h >> 11) * 0x1.0p-53);
      }
      result.token_logprobs.push_back(lp);
      ++token_index;
    }
  }
  result.token_count = result.token_logprobs.size();
  return result;
}

// --- FlakyBackend ---------------------------------------------------------------

FlakyBackend::FlakyBackend(std::shared_ptr<Backend> inner, int failures_per_key)
    : inner_(std::move(inner)), failures_per_key_(failures_per_key) {}

GenerationResult FlakyBackend::generate(const GenerationRequest& request) {
  attempts_.fetch_add(1);
  {
    std::lock_guard lock(mutex_);
    int& seen = failures_seen_[request.instruction];
    if (seen < failures_per_key_) {
      ++seen;
      throw BackendError("simulated rate limit", /*transient=*/true);
    }
  }
  return inner_->generate(request);
}

ScoreResult FlakyBackend::score(const std::string& text) {
  attempts_.fetch_add(1);
  {
    std::lock_guard lock(mutex_);
    int& seen = failures_seen_["score:" + text];
    if (seen < failures_per_key_) {
      ++seen;
      throw BackendError("simulated rate limit", /*transient=*/true);
    }
  }
  return inner_->score(text);
}

}  // namespace pforge
