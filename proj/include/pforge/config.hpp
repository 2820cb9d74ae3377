#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pforge/corpus.hpp"
#include "pforge/gateway.hpp"
#include "pforge/mixture.hpp"

namespace pforge {

struct BackendSpec {
  std::string id;
  std::string kind;  // "mock:<profile>" or "http"
  // mock options
  int expand_factor = 3;
  std::uint64_t salt = 0;
  bool hashed_scoring = false;
  int flaky_failures = 0;  // >0 wraps the mock in a FlakyBackend
  // http options
  std::string base_url;
  std::string model;
  std::string api_key_env;
  int timeout_s = 120;
  int max_tokens = 1024;
};

struct StageBackends {
  std::string translate;
  std::string naturalize;
  std::string culturalize;
  std::string difficultify;
  std::string complete;
  std::string judge;     // absolute quality/difficulty grading; empty = skip grading
  std::string pairwise;  // preference judging for win rates
  std::string scorer;    // perplexity scoring; empty = no perplexity in reports
};

struct RunConfig {
  std::filesystem::path workspace;
  std::vector<std::string> languages;  // subset of the supported twelve
  std::uint64_t seed = 0;
  std::string seeds_file;  // ingest source (UTF-8 text, one prompt per line)

  std::map<std::string, BackendSpec> backends;
  StageBackends stage_backends;

  double transform_temperature = 0.3;
  double completion_temperature = 0.3;
  double judge_temperature = 0.0;

  int max_in_flight = 8;
  int workers = 4;
  RetryPolicy retry;

  std::filesystem::path langid_rules;  // TableLangId fixture
  double min_confidence = 0.0;

  std::vector<MixtureComponent> mixture;  // defaults to cultural/difficulty 50/50
  std::optional<std::size_t> mixture_size;
  bool per_language_balance = false;

  bool strict = false;      // lenient JSONL loads become hard errors
  bool fixed_clock = false; // timestamps pinned to the epoch for byte-stable runs
  bool dry_run = false;

  // Raw parsed config with defaults applied, for hashing and provenance.
  Json canonical;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json(const Json& j, const std::filesystem::path& config_dir);

// Checks cross-field consistency (stage backends exist, languages supported,
// proportions sum to 1, paths present); throws ConfigError with the full
// list of violations.
void validate_config(const RunConfig& config);

// FNV-1a over the canonical config serialization with the "workspace" key
// removed, so the same experiment hashed from two workspaces matches.
std::string config_hash(const RunConfig& config);

// Instantiates a backend (mock profiles, flaky wrapper, http) from its spec.
std::shared_ptr<Backend> make_backend(const BackendSpec& spec);

// Built-in config used when tests or the CLI need a full offline setup.
Json default_mock_config_json(const std::filesystem::path& workspace,
                              const std::filesystem::path& seeds_file,
                              const std::filesystem::path& langid_rules,
                              const std::vector<std::string>& languages);

}  // namespace pforge
