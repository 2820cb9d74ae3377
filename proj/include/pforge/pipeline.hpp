#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pforge/config.hpp"
#include "pforge/corpus.hpp"
#include "pforge/gateway.hpp"
#include "pforge/langid.hpp"
#include "pforge/transform.hpp"
#include "pforge/util.hpp"

namespace pforge {

// Advisory lock on <workspace>/lock so two processes cannot mutate the same
// workspace concurrently. Released on destruction.
class WorkspaceLock {
 public:
  explicit WorkspaceLock(const std::filesystem::path& workspace);
  ~WorkspaceLock();
  WorkspaceLock(const WorkspaceLock&) = delete;
  WorkspaceLock& operator=(const WorkspaceLock&) = delete;

 private:
  int fd_ = -1;
};

// Path scheme inside a workspace:
//   data/<stage>.<lang>.jsonl          prompt records per stage and language
//   data/pairs.<variant>.<lang>.jsonl  prompt/completion pairs
//   data/mixture.jsonl                 blended training set
//   data/manifests/<name>.json         dataset manifests
//   state/<step>.<lang>.done.jsonl     append-only progress log
//   logs/<step>.<lang>.drops.jsonl     records removed by the language filter
//   reports/<name>.json                evaluation output
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  void ensure_layout() const;

  std::filesystem::path stage_file(Stage stage, const std::string& lang) const;
  std::filesystem::path pairs_file(const std::string& variant, const std::string& lang) const;
  std::filesystem::path mixture_file() const;
  std::filesystem::path manifest_file(const std::string& name) const;
  std::filesystem::path done_log(const std::string& step, const std::string& lang) const;
  std::filesystem::path drops_log(const std::string& step, const std::string& lang) const;
  std::filesystem::path report_file(const std::string& name) const;
  std::filesystem::path config_snapshot() const;
  std::filesystem::path lock_file() const;

 private:
  std::filesystem::path root_;
};

struct StepCounts {
  std::size_t inputs = 0;
  std::size_t resumed = 0;    // found in the done log, not re-run
  std::size_t produced = 0;   // records that passed the language filter
  std::size_t dropped = 0;
  std::uint64_t calls = 0;    // generation calls issued by this invocation
  bool interrupted = false;   // stopped early by a call budget
};

struct RunOptions {
  std::vector<std::string> languages;       // empty = all configured
  std::optional<std::size_t> sample;        // cap inputs per language
  std::optional<std::uint64_t> call_budget; // stop dispatching once spent
  bool dry_run = false;
};

// Orchestrates the whole flow over one workspace. Every step is
// deterministic for a fixed (config, seed) under mock backends, and every
// step can be re-run after an interruption without redoing finished calls.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config, std::shared_ptr<Clock> clock = nullptr);

  // Reads the seeds file (JSON-Lines of raw texts or records; bare text
  // lines accepted), drops lines the language identifier does not call
  // English, and writes the seed-stage dataset and manifest. `dedup` removes
  // exact duplicate texts (first occurrence wins); default keeps them.
  StepCounts ingest(bool dedup = false);

  // Runs one transform stage; prerequisite stages are chained automatically
  // when their data is missing.
  StepCounts run_transform(TransformKind kind, const RunOptions& options = {});
  // Completes prompts of `variant` ("translated", "naturalized", "cultural",
  // "difficulty"), pairing each surviving prompt with its completion.
  StepCounts run_complete(const std::string& variant, const RunOptions& options = {});

  // Table-style metric report of candidate vs. baseline pairs datasets
  // (joined per seed for the edit-distance column). Writes JSON + text
  // reports; returns the JSON.
  Json eval_data(const std::string& candidate, const std::string& baseline);
  // Quality/difficulty grading of a pairs dataset (prompt and pair graders).
  Json judge_dataset(const std::string& variant, const RunOptions& options = {});
  // Pairwise preference of variant_x over variant_y with bootstrap CI.
  Json winrate(const std::string& variant_x, const std::string& variant_y,
               const std::string& mode = "general", std::size_t n_bootstrap = 10000);
  Json mix();
  Json report() const;  // collects counts and previously written reports

  const Workspace& workspace() const { return ws_; }
  const RunConfig& config() const { return config_; }
  std::uint64_t total_calls() const;  // across all gateways, this process

  Gateway& gateway_for(const std::string& role);

 private:
  struct TransformItem;

  void write_config_snapshot();
  std::vector<std::string> effective_languages(const RunOptions& options) const;
  std::vector<PromptRecord> load_stage(Stage stage, const std::string& lang) const;
  StepCounts run_language_step(
      const std::string& step, const std::string& lang,
      const std::vector<PromptRecord>& inputs, const RunOptions& options,
      std::uint64_t budget_left,
      const std::function<Json(const PromptRecord&, const std::string& id)>& work,
      std::vector<Json>* outputs);
  void write_manifest_for(const std::string& name, const std::string& stage_label,
                          const std::map<std::string, std::vector<std::string>>& ids_by_lang,
                          const std::vector<std::pair<std::string, double>>& sources);

  RunConfig config_;
  Workspace ws_;
  std::shared_ptr<Clock> clock_;
  std::unique_ptr<WorkspaceLock> lock_;
  std::shared_ptr<LangId> langid_;
  std::map<std::string, std::shared_ptr<Gateway>> gateways_;  // by backend id
};

// Stable content address of a directory tree: sorted relative paths plus a
// hash of each file's bytes. Two trees with equal fingerprints are
// byte-identical (up to hash collisions); used by the determinism checks.
std::string tree_fingerprint(const std::filesystem::path& root,
                             const std::vector<std::string>& exclude_names = {});

}  // namespace pforge
