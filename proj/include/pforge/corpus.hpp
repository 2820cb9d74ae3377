#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace pforge {

using Json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

// Two-letter lowercase tag, e.g. "de". Shape check only; membership in the
// run's configured language set is enforced where records are created.
bool is_valid_language_code(const std::string& code);

enum class Stage { seed, translated, naturalized, cultural, difficulty };

std::string to_string(Stage stage);
Stage stage_from_string(const std::string& s);
// The five legal parent/child pairs: seed has no parent, translated<-seed,
// naturalized<-translated, cultural<-naturalized, difficulty<-naturalized.
bool legal_transition(Stage parent, Stage child);
std::optional<Stage> parent_stage_of(Stage stage);

struct LangIdVerdict {
  std::string lang;  // two-letter tag or "und"
  double confidence = 0.0;
};

struct PromptRecord {
  std::string id;
  std::string lang;
  Stage stage = Stage::seed;
  std::string text;
  std::optional<std::string> parent_id;  // absent iff stage == seed
  std::string seed_id;                   // the English ancestor (self for seeds)
  std::optional<std::string> backend_id;
  std::optional<double> temperature;
  std::string created_at;

  Json to_json() const;
  static PromptRecord from_json(const Json& j);
};

struct CompletionRecord {
  std::string id;
  std::string prompt_id;
  std::string lang;
  std::string text;
  std::string backend_id;
  double temperature = 0.3;
  std::optional<LangIdVerdict> lang_verdict;

  Json to_json() const;
  static CompletionRecord from_json(const Json& j);
};

struct PairedExample {
  PromptRecord prompt;
  CompletionRecord completion;

  Json to_json() const;
  static PairedExample from_json(const Json& j);
};

struct DatasetManifest {
  std::string name;
  std::string stage;  // stage label, or "pairs"/"mixture" for derived sets
  std::vector<std::string> records;
  std::map<std::string, std::size_t> per_lang_counts;
  std::vector<std::pair<std::string, double>> source_manifests;

  void validate() const;  // unique ids, counts sum to record count
  Json to_json() const;
  static DatasetManifest from_json(const Json& j);
};

// Creates a seed-stage record. seed_id is the record's own id.
PromptRecord make_seed(std::string id, std::string lang, std::string text,
                       const std::string& created_at);

// Derives a child record one stage downstream of `parent`. `target_lang`
// is required for translated-stage children and must be empty otherwise.
// An empty `id` draws from a process-wide unique sequence; pipeline code
// passes deterministic ids instead.
PromptRecord derive_child(const PromptRecord& parent, Stage stage, std::string text,
                          std::string backend_id, double temperature,
                          const std::string& created_at, std::string id = "",
                          const std::string& target_lang = "");

std::string fresh_record_id();

// In-memory id -> record index shared by the engines.
class RecordStore {
 public:
  void insert(PromptRecord record);
  bool has(const std::string& id) const;
  const PromptRecord& require(const std::string& id) const;
  const PromptRecord* find(const std::string& id) const;
  std::size_t size() const { return records_.size(); }

  // Records named by a manifest, sorted by (seed_id, lang, id).
  std::vector<PromptRecord> select(const DatasetManifest& manifest) const;

  // Walks parent links; throws DataError on a broken chain, a chain longer
  // than four hops, or an illegal stage transition anywhere on the path.
  void validate_lineage(const PromptRecord& record) const;

 private:
  std::unordered_map<std::string, PromptRecord> records_;
};

struct LineError {
  std::size_t line;  // 1-based
  std::string message;
};

template <typename T>
struct LoadResult {
  std::vector<T> items;
  std::vector<LineError> errors;
};

enum class ParseMode { strict, lenient };

LoadResult<PromptRecord> load_prompt_records(const std::filesystem::path& path,
                                             ParseMode mode = ParseMode::strict);
LoadResult<CompletionRecord> load_completion_records(const std::filesystem::path& path,
                                                     ParseMode mode = ParseMode::strict);
LoadResult<PairedExample> load_pairs(const std::filesystem::path& path,
                                     ParseMode mode = ParseMode::strict);

// One record per line, UTF-8, LF, stable field order; byte-identical for
// identical input.
void save_prompt_records(const std::vector<PromptRecord>& records,
                         const std::filesystem::path& path);
void save_completion_records(const std::vector<CompletionRecord>& records,
                             const std::filesystem::path& path);
void save_pairs(const std::vector<PairedExample>& pairs, const std::filesystem::path& path);

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

bool record_sort_key_less(const PromptRecord& a, const PromptRecord& b);

}  // namespace pforge
