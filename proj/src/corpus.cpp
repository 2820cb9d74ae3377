#include "pforge/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <sstream>

#include "pforge/errors.hpp"
#include "pforge/util.hpp"

namespace pforge {

bool is_valid_language_code(const std::string& code) {
  return code.size() == 2 && code[0] >= 'a' && code[0] <= 'z' && code[1] >= 'a' &&
         code[1] <= 'z';
}

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::seed: return "seed";
    case Stage::translated: return "translated";
    case Stage::naturalized: return "naturalized";
    case Stage::cultural: return "cultural";
    case Stage::difficulty: return "difficulty";
  }
  throw DataError("unknown stage value");
}

Stage stage_from_string(const std::string& s) {
  if (s == "seed") return Stage::seed;
  if (s == "translated") return Stage::translated;
  if (s == "naturalized") return Stage::naturalized;
  if (s == "cultural") return Stage::cultural;
  if (s == "difficulty") return Stage::difficulty;
  throw DataError("unknown stage: \"" + s + "\"");
}

std::optional<Stage> parent_stage_of(Stage stage) {
  switch (stage) {
    case Stage::seed: return std::nullopt;
    case Stage::translated: return Stage::seed;
    case Stage::naturalized: return Stage::translated;
    case Stage::cultural: return Stage::naturalized;
    case Stage::difficulty: return Stage::naturalized;
  }
  throw DataError("unknown stage value");
}

bool legal_transition(Stage parent, Stage child) {
  const auto required = parent_stage_of(child);
  return required.has_value() && *required == parent;
}

namespace {

std::string require_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw DataError(std::string("missing or non-string field \"") + key + "\"");
  }
  return j[key].get<std::string>();
}

void require_version(const Json& j) {
  if (!j.contains("v") || !j["v"].is_number_integer() || j["v"].get<int>() != kSchemaVersion) {
    throw DataError("missing or unsupported schema version (expected v=1)");
  }
}

}  // namespace

Json PromptRecord::to_json() const {
  Json j;
  j["v"] = kSchemaVersion;
  j["id"] = id;
  j["lang"] = lang;
  j["stage"] = pforge::to_string(stage);
  j["text"] = text;
  if (parent_id) j["parent_id"] = *parent_id;
  j["seed_id"] = seed_id;
  if (backend_id) j["backend_id"] = *backend_id;
  if (temperature) j["temperature"] = *temperature;
  j["created_at"] = created_at;
  return j;
}

PromptRecord PromptRecord::from_json(const Json& j) {
  require_version(j);
  PromptRecord r;
  r.id = require_string(j, "id");
  r.lang = require_string(j, "lang");
  r.stage = stage_from_string(require_string(j, "stage"));
  r.text = require_string(j, "text");
  if (j.contains("parent_id")) r.parent_id = require_string(j, "parent_id");
  r.seed_id = require_string(j, "seed_id");
  if (j.contains("backend_id")) r.backend_id = require_string(j, "backend_id");
  if (j.contains("temperature")) {
    if (!j["temperature"].is_number()) throw DataError("non-numeric temperature");
    r.temperature = j["temperature"].get<double>();
  }
  r.created_at = require_string(j, "created_at");

  if (trim(r.text).empty()) throw DataError("record " + r.id + ": empty text");
  if (!is_valid_language_code(r.lang)) {
    throw DataError("record " + r.id + ": bad language code \"" + r.lang + "\"");
  }
  if (r.parent_id.has_value() == (r.stage == Stage::seed)) {
    throw DataError("record " + r.id + ": parent_id must be absent iff stage is seed");
  }
  return r;
}

Json CompletionRecord::to_json() const {
  Json j;
  j["v"] = kSchemaVersion;
  j["id"] = id;
  j["prompt_id"] = prompt_id;
  j["lang"] = lang;
  j["text"] = text;
  j["backend_id"] = backend_id;
  j["temperature"] = temperature;
  if (lang_verdict) {
    j["lang_verdict"] = Json{{"lang", lang_verdict->lang},
                             {"confidence", lang_verdict->confidence}};
  }
  return j;
}

CompletionRecord CompletionRecord::from_json(const Json& j) {
  require_version(j);
  CompletionRecord r;
  r.id = require_string(j, "id");
  r.prompt_id = require_string(j, "prompt_id");
  r.lang = require_string(j, "lang");
  r.text = require_string(j, "text");
  r.backend_id = require_string(j, "backend_id");
  if (!j.contains("temperature") || !j["temperature"].is_number()) {
    throw DataError("completion " + r.id + ": missing temperature");
  }
  r.temperature = j["temperature"].get<double>();
  if (j.contains("lang_verdict")) {
    const Json& v = j["lang_verdict"];
    LangIdVerdict verdict;
    verdict.lang = require_string(v, "lang");
    if (!v.contains("confidence") || !v["confidence"].is_number()) {
      throw DataError("completion " + r.id + ": bad lang_verdict");
    }
    verdict.confidence = v["confidence"].get<double>();
    r.lang_verdict = verdict;
  }
  if (!is_valid_language_code(r.lang)) {
    throw DataError("completion " + r.id + ": bad language code \"" + r.lang + "\"");
  }
  return r;
}

Json PairedExample::to_json() const {
  Json j;
  j["v"] = kSchemaVersion;
  j["prompt"] = prompt.to_json();
  j["completion"] = completion.to_json();
  return j;
}

PairedExample PairedExample::from_json(const Json& j) {
  require_version(j);
  if (!j.contains("prompt") || !j.contains("completion")) {
    throw DataError("pair line must contain prompt and completion objects");
  }
  PairedExample p;
  p.prompt = PromptRecord::from_json(j["prompt"]);
  p.completion = CompletionRecord::from_json(j["completion"]);
  if (p.completion.prompt_id != p.prompt.id) {
    throw DataError("pair " + p.completion.id + ": completion.prompt_id != prompt.id");
  }
  if (p.completion.lang != p.prompt.lang) {
    throw DataError("pair " + p.completion.id + ": language mismatch with prompt");
  }
  return p;
}

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  for (const auto& id : records) {
    if (!seen.insert(id).second) throw DataError("manifest " + name + ": duplicate id " + id);
  }
  std::size_t sum = 0;
  for (const auto& [lang, count] : per_lang_counts) {
    if (!is_valid_language_code(lang)) {
      throw DataError("manifest " + name + ": bad language key \"" + lang + "\"");
    }
    sum += count;
  }
  if (sum != records.size()) {
    throw DataError("manifest " + name + ": per_lang_counts sum " + std::to_string(sum) +
                    " != record count " + std::to_string(records.size()));
  }
}

Json DatasetManifest::to_json() const {
  Json j;
  j["v"] = kSchemaVersion;
  j["name"] = name;
  j["stage"] = stage;
  j["records"] = records;
  Json counts = Json::object();
  for (const auto& [lang, count] : per_lang_counts) counts[lang] = count;
  j["per_lang_counts"] = counts;
  if (!source_manifests.empty()) {
    Json sources = Json::array();
    for (const auto& [src, proportion] : source_manifests) {
      sources.push_back(Json{{"name", src}, {"proportion", proportion}});
    }
    j["source_manifests"] = sources;
  }
  return j;
}

DatasetManifest DatasetManifest::from_json(const Json& j) {
  require_version(j);
  DatasetManifest m;
  m.name = require_string(j, "name");
  m.stage = require_string(j, "stage");
  if (!j.contains("records") || !j["records"].is_array()) {
    throw DataError("manifest " + m.name + ": missing records array");
  }
  for (const auto& id : j["records"]) m.records.push_back(id.get<std::string>());
  if (j.contains("per_lang_counts")) {
    for (const auto& [lang, count] : j["per_lang_counts"].items()) {
      m.per_lang_counts[lang] = count.get<std::size_t>();
    }
  }
  if (j.contains("source_manifests")) {
    for (const auto& src : j["source_manifests"]) {
      m.source_manifests.emplace_back(src["name"].get<std::string>(),
                                      src["proportion"].get<double>());
    }
  }
  m.validate();
  return m;
}

PromptRecord make_seed(std::string id, std::string lang, std::string text,
                       const std::string& created_at) {
  PromptRecord r;
  r.id = std::move(id);
  r.lang = std::move(lang);
  r.stage = Stage::seed;
  r.text = std::move(text);
  r.seed_id = r.id;
  r.created_at = created_at;
  if (trim(r.text).empty()) throw DataError("seed " + r.id + ": empty text");
  return r;
}

std::string fresh_record_id() {
  static std::atomic<std::uint64_t> counter{0};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "r-%012llu",
                static_cast<unsigned long long>(counter.fetch_add(1)));
  return buf;
}

PromptRecord derive_child(const PromptRecord& parent, Stage stage, std::string text,
                          std::string backend_id, double temperature,
                          const std::string& created_at, std::string id,
                          const std::string& target_lang) {
  if (!legal_transition(parent.stage, stage)) {
    throw DataError("illegal stage transition " + pforge::to_string(parent.stage) + " -> " +
                    pforge::to_string(stage) + " (parent " + parent.id + ")");
  }
  PromptRecord child;
  child.id = id.empty() ? fresh_record_id() : std::move(id);
  if (stage == Stage::translated) {
    if (!is_valid_language_code(target_lang)) {
      throw DataError("translated child of " + parent.id + " needs a target language");
    }
    child.lang = target_lang;
  } else {
    if (!target_lang.empty()) {
      throw DataError("target language is only valid for translated children");
    }
    child.lang = parent.lang;
  }
  child.stage = stage;
  child.text = std::move(text);
  child.parent_id = parent.id;
  child.seed_id = parent.stage == Stage::seed ? parent.id : parent.seed_id;
  child.backend_id = std::move(backend_id);
  child.temperature = temperature;
  child.created_at = created_at;
  if (trim(child.text).empty()) {
    throw DataError("record " + child.id + ": empty text from transform");
  }
  return child;
}

void RecordStore::insert(PromptRecord record) {
  std::string id = record.id;
  if (!records_.emplace(id, std::move(record)).second) {
    throw DataError("duplicate record id: " + id);
  }
}

bool RecordStore::has(const std::string& id) const { return records_.count(id) > 0; }

const PromptRecord* RecordStore::find(const std::string& id) const {
  const auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

const PromptRecord& RecordStore::require(const std::string& id) const {
  const PromptRecord* r = find(id);
  if (!r) throw DataError("unknown record id: " + id);
  return *r;
}

bool record_sort_key_less(const PromptRecord& a, const PromptRecord& b) {
  if (a.seed_id != b.seed_id) return a.seed_id < b.seed_id;
  if (a.lang != b.lang) return a.lang < b.lang;
  return a.id < b.id;
}

std::vector<PromptRecord> RecordStore::select(const DatasetManifest& manifest) const {
  std::vector<PromptRecord> out;
  out.reserve(manifest.records.size());
  for (const auto& id : manifest.records) out.push_back(require(id));
  std::sort(out.begin(), out.end(), record_sort_key_less);
  return out;
}

void RecordStore::validate_lineage(const PromptRecord& record) const {
  const PromptRecord* current = &record;
  std::size_t hops = 0;
  while (current->stage != Stage::seed) {
    if (++hops > 4) {
      throw DataError("record " + record.id + ": lineage exceeds 4 hops");
    }
    if (!current->parent_id) {
      throw DataError("record " + current->id + ": non-seed record lacks parent_id");
    }
    const PromptRecord* parent = find(*current->parent_id);
    if (!parent) {
      throw DataError("record " + current->id + ": missing parent " + *current->parent_id);
    }
    if (!legal_transition(parent->stage, current->stage)) {
      throw DataError("record " + current->id + ": illegal transition " +
                      pforge::to_string(parent->stage) + " -> " +
                      pforge::to_string(current->stage));
    }
    current = parent;
  }
  if (current->seed_id != current->id) {
    throw DataError("seed record " + current->id + ": seed_id must equal id");
  }
  if (record.seed_id != current->id) {
    throw DataError("record " + record.id + ": seed_id " + record.seed_id +
                    " does not match lineage root " + current->id);
  }
}

namespace {

template <typename T, typename ParseFn>
LoadResult<T> load_jsonl(const std::filesystem::path& path, ParseMode mode, ParseFn parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file: " + path.string());
  LoadResult<T> result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    try {
      const Json j = Json::parse(line);
      result.items.push_back(parse(j));
    } catch (const std::exception& e) {
      if (mode == ParseMode::strict) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      result.errors.push_back({line_no, e.what()});
    }
  }
  return result;
}

template <typename T>
void save_jsonl(const std::vector<T>& items, const std::filesystem::path& path) {
  std::string out;
  for (const auto& item : items) {
    out += item.to_json().dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace

LoadResult<PromptRecord> load_prompt_records(const std::filesystem::path& path,
                                             ParseMode mode) {
  return load_jsonl<PromptRecord>(path, mode,
                                  [](const Json& j) { return PromptRecord::from_json(j); });
}

LoadResult<CompletionRecord> load_completion_records(const std::filesystem::path& path,
                                                     ParseMode mode) {
  return load_jsonl<CompletionRecord>(
      path, mode, [](const Json& j) { return CompletionRecord::from_json(j); });
}

LoadResult<PairedExample> load_pairs(const std::filesystem::path& path, ParseMode mode) {
  return load_jsonl<PairedExample>(path, mode,
                                   [](const Json& j) { return PairedExample::from_json(j); });
}

void save_prompt_records(const std::vector<PromptRecord>& records,
                         const std::filesystem::path& path) {
  save_jsonl(records, path);
}

void save_completion_records(const std::vector<CompletionRecord>& records,
                             const std::filesystem::path& path) {
  save_jsonl(records, path);
}

void save_pairs(const std::vector<PairedExample>& pairs, const std::filesystem::path& path) {
  save_jsonl(pairs, path);
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  write_file_atomic(path, manifest.to_json().dump(2) + "\n");
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const std::string body = read_file(path);
  try {
    return DatasetManifest::from_json(Json::parse(body));
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace pforge
