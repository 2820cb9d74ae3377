#include "pforge/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "pforge/errors.hpp"
#include "pforge/judge.hpp"
#include "pforge/metrics.hpp"
#include "pforge/mixture.hpp"
#include "pforge/rng.hpp"
#include "pforge/templates.hpp"

namespace pforge {

// --- WorkspaceLock ---------------------------------------------------------------

WorkspaceLock::WorkspaceLock(const std::filesystem::path& workspace) {
  std::filesystem::create_directories(workspace);
  const std::filesystem::path path = workspace / "lock";
  fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
  if (fd_ < 0) throw ConfigError("cannot open workspace lock: " + path.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw ConfigError("workspace is locked by another process: " + path.string());
  }
}

WorkspaceLock::~WorkspaceLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

// --- Workspace --------------------------------------------------------------------

Workspace::Workspace(std::filesystem::path root) : root_(std::move(root)) {}

void Workspace::ensure_layout() const {
  for (const char* dir : {"data", "data/manifests", "state", "logs", "reports"}) {
    std::filesystem::create_directories(root_ / dir);
  }
}

std::filesystem::path Workspace::stage_file(Stage stage, const std::string& lang) const {
  return root_ / "data" / (to_string(stage) + "." + lang + ".jsonl");
}

std::filesystem::path Workspace::pairs_file(const std::string& variant,
                                            const std::string& lang) const {
  return root_ / "data" / ("pairs." + variant + "." + lang + ".jsonl");
}

std::filesystem::path Workspace::mixture_file() const {
  return root_ / "data" / "mixture.jsonl";
}

std::filesystem::path Workspace::manifest_file(const std::string& name) const {
  return root_ / "data" / "manifests" / (name + ".json");
}

std::filesystem::path Workspace::done_log(const std::string& step,
                                          const std::string& lang) const {
  return root_ / "state" / (step + "." + lang + ".done.jsonl");
}

std::filesystem::path Workspace::drops_log(const std::string& step,
                                           const std::string& lang) const {
  return root_ / "logs" / (step + "." + lang + ".drops.jsonl");
}

std::filesystem::path Workspace::report_file(const std::string& name) const {
  return root_ / "reports" / name;
}

std::filesystem::path Workspace::config_snapshot() const {
  return root_ / "config.snapshot.json";
}

std::filesystem::path Workspace::lock_file() const { return root_ / "lock"; }

// --- Pipeline ----------------------------------------------------------------------

namespace {

constexpr std::uint64_t kNoBudget = UINT64_MAX;

std::string padded_index(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%06zu", i);
  return buf;
}

const char* id_prefix(TransformKind kind) {
  switch (kind) {
    case TransformKind::translate: return "t";
    case TransformKind::naturalize: return "n";
    case TransformKind::culturalize: return "c";
    case TransformKind::difficultify: return "d";
  }
  throw ConfigError("unknown transform kind value");
}

// Reads a done-log into input_id -> latest entry body.
std::map<std::string, Json> read_done_log(const std::filesystem::path& path) {
  std::map<std::string, Json> done;
  const auto body = read_file_if_exists(path);
  if (!body) return done;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(*body)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      Json j = Json::parse(line);
      // Pull the key out before the move: the assignment's right operand is
      // sequenced first, and json's operator= takes its argument by value.
      std::string input_id = j.at("input_id").get<std::string>();
      done[std::move(input_id)] = std::move(j);
    } catch (const Json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": corrupt progress log: " + e.what());
    }
  }
  return done;
}

Json mean_or_null(const std::vector<double>& values) {
  if (values.empty()) return nullptr;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

void accumulate(std::vector<double>& into, const Json& value) {
  if (value.is_number()) into.push_back(value.get<double>());
}

std::string format_cell(const Json& value, int width) {
  char buf[48];
  if (value.is_number()) {
    std::snprintf(buf, sizeof(buf), "%*.3f", width, value.get<double>());
  } else {
    std::snprintf(buf, sizeof(buf), "%*s", width, "n/a");
  }
  return buf;
}

}  // namespace

Pipeline::Pipeline(RunConfig config, std::shared_ptr<Clock> clock)
    : config_(std::move(config)), ws_(config_.workspace), clock_(std::move(clock)) {
  validate_config(config_);
  if (!clock_) {
    clock_ = config_.fixed_clock ? std::shared_ptr<Clock>(std::make_shared<FixedClock>())
                                 : std::make_shared<SystemClock>();
  }
  ws_.ensure_layout();
  lock_ = std::make_unique<WorkspaceLock>(ws_.root());
  if (!std::filesystem::exists(config_.langid_rules)) {
    throw ConfigError("language-id rule file missing: " + config_.langid_rules.string());
  }
  langid_ = std::make_shared<TableLangId>(TableLangId::from_file(config_.langid_rules));
  write_config_snapshot();
}

void Pipeline::write_config_snapshot() {
  Json snapshot = config_.canonical;
  snapshot.erase("workspace");  // identical experiments hash alike from any workspace
  Json wrapper;
  wrapper["v"] = 1;
  wrapper["config_hash"] = config_hash(config_);
  wrapper["config"] = snapshot;
  write_file_atomic(ws_.config_snapshot(), wrapper.dump(2) + "\n");
}

Gateway& Pipeline::gateway_for(const std::string& role) {
  const auto& sb = config_.stage_backends;
  std::string backend_id;
  if (role == "translate") backend_id = sb.translate;
  else if (role == "naturalize") backend_id = sb.naturalize;
  else if (role == "culturalize") backend_id = sb.culturalize;
  else if (role == "difficultify") backend_id = sb.difficultify;
  else if (role == "complete") backend_id = sb.complete;
  else if (role == "judge") backend_id = sb.judge;
  else if (role == "pairwise") backend_id = sb.pairwise;
  else if (role == "scorer") backend_id = sb.scorer;
  else throw ConfigError("unknown backend role: " + role);
  if (backend_id.empty()) {
    throw ConfigError("no backend configured for role \"" + role + "\"");
  }

  auto it = gateways_.find(backend_id);
  if (it == gateways_.end()) {
    const auto spec = config_.backends.find(backend_id);
    if (spec == config_.backends.end()) {
      throw ConfigError("backend \"" + backend_id + "\" is not defined");
    }
    auto gateway =
        std::make_shared<Gateway>(make_backend(spec->second), config_.max_in_flight,
                                  config_.retry, mix_seed(config_.seed, "gw." + backend_id));
    it = gateways_.emplace(backend_id, std::move(gateway)).first;
  }
  return *it->second;
}

std::uint64_t Pipeline::total_calls() const {
  std::uint64_t total = 0;
  for (const auto& [_, gw] : gateways_) total += gw->calls_issued();
  return total;
}

std::vector<std::string> Pipeline::effective_languages(const RunOptions& options) const {
  if (options.languages.empty()) return config_.languages;
  for (const auto& lang : options.languages) {
    if (std::find(config_.languages.begin(), config_.languages.end(), lang) ==
        config_.languages.end()) {
      throw ConfigError("--lang " + lang + " is not in the configured language set");
    }
  }
  return options.languages;
}

std::vector<PromptRecord> Pipeline::load_stage(Stage stage, const std::string& lang) const {
  const auto path = ws_.stage_file(stage, lang);
  if (!std::filesystem::exists(path)) {
    throw DataError("missing " + to_string(stage) + " data for " + lang + ": " +
                    path.string());
  }
  auto loaded = load_prompt_records(path, config_.strict ? ParseMode::strict
                                                         : ParseMode::lenient);
  std::sort(loaded.items.begin(), loaded.items.end(), record_sort_key_less);
  return std::move(loaded.items);
}

// --- ingest --------------------------------------------------------------------------

StepCounts Pipeline::ingest(bool dedup) {
  const std::filesystem::path seeds_path = config_.seeds_file;
  const auto body = read_file_if_exists(seeds_path);
  if (!body) throw ConfigError("seeds file missing: " + seeds_path.string());

  StepCounts counts;
  std::vector<std::string> texts;
  std::set<std::string> seen;
  for (const std::string& line : split_lines(*body)) {
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    ++counts.inputs;
    std::string text;
    if (trimmed.front() == '"' || trimmed.front() == '{') {
      try {
        const Json j = Json::parse(trimmed);
        if (j.is_string()) {
          text = j.get<std::string>();
        } else if (j.is_object() && j.contains("text")) {
          text = j["text"].get<std::string>();
        } else {
          throw DataError("seed line is neither a string nor an object with \"text\"");
        }
      } catch (const Json::exception& e) {
        throw DataError(seeds_path.string() + ": bad seed line: " + e.what());
      }
    } else {
      text = trimmed;  // bare text line
    }
    if (trim(text).empty()) {
      ++counts.dropped;
      continue;
    }
    if (dedup && !seen.insert(text).second) {
      ++counts.dropped;
      continue;
    }
    texts.push_back(std::move(text));
  }

  std::vector<PromptRecord> seeds;
  std::vector<DropLogEntry> drops;
  const std::string now = clock_->now();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const LangIdVerdict verdict = langid_->identify(texts[i]);
    if (verdict.lang != "en" || verdict.confidence < config_.min_confidence) {
      ++counts.dropped;
      drops.push_back({"seed-line-" + padded_index(i), "en", verdict.lang,
                       verdict.confidence, "language_mismatch"});
      continue;
    }
    seeds.push_back(
        make_seed("s-en-" + padded_index(seeds.size()), "en", texts[i], now));
  }
  counts.produced = seeds.size();

  if (config_.dry_run) return counts;

  save_prompt_records(seeds, ws_.stage_file(Stage::seed, "en"));
  {
    std::string log;
    for (const auto& d : drops) {
      log += Json{{"id", d.id},
                  {"lang", d.lang},
                  {"detected", d.detected},
                  {"confidence", d.confidence},
                  {"reason", d.reason}}
                 .dump();
      log += '\n';
    }
    write_file_atomic(ws_.drops_log("ingest", "en"), log);
  }

  DatasetManifest manifest;
  manifest.name = "seed";
  manifest.stage = "seed";
  for (const auto& r : seeds) manifest.records.push_back(r.id);
  manifest.per_lang_counts["en"] = seeds.size();
  save_manifest(manifest, ws_.manifest_file("seed"));
  return counts;
}

// --- generic per-language step runner ----------------------------------------------

struct Pipeline::TransformItem {
  PromptRecord input;
  std::string out_id;
};

// Runs `work` over every input not already in the step's done-log, appending
// one done entry per item as it completes (so progress survives a crash),
// then rebuilds the step's outputs from the log. `work` returns the entry
// body: {"output": ...} for a kept record, {"drop": {...}} for a filtered
// one; data-level failures become {"failed": ...} entries. Backend-outage
// errors abort the step.
StepCounts Pipeline::run_language_step(
    const std::string& step, const std::string& lang,
    const std::vector<PromptRecord>& inputs, const RunOptions& options,
    std::uint64_t budget_left,
    const std::function<Json(const PromptRecord&, const std::string& id)>& work,
    std::vector<Json>* outputs) {
  StepCounts counts;
  counts.inputs = inputs.size();

  const std::filesystem::path done_path = ws_.done_log(step, lang);
  std::map<std::string, Json> done = read_done_log(done_path);

  std::vector<TransformItem> pending;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    TransformItem item;
    item.input = inputs[i];
    item.out_id = inputs[i].id;  // steps that mint new ids override below
    if (done.count(inputs[i].id)) {
      ++counts.resumed;
    } else {
      pending.push_back(std::move(item));
    }
  }

  if (options.dry_run) {
    counts.calls = pending.size();
    return counts;
  }

  if (budget_left == 0 && !pending.empty()) {
    counts.interrupted = true;
    return counts;
  }

  std::atomic<std::size_t> cursor{0};
  std::atomic<std::uint64_t> dispatched{0};
  std::atomic<bool> stop{false};
  std::atomic<bool> interrupted{false};
  std::mutex io_mutex;
  std::ofstream done_out(done_path, std::ios::binary | std::ios::app);
  if (!done_out) throw DataError("cannot append to progress log: " + done_path.string());
  std::exception_ptr fatal;

  const auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= pending.size()) break;
      if (budget_left != kNoBudget &&
          dispatched.fetch_add(1) >= budget_left) {
        interrupted.store(true);
        stop.store(true);
        break;
      }
      Json body;
      try {
        body = work(pending[i].input, pending[i].out_id);
      } catch (const DataError& e) {
        body = Json{{"failed", e.what()}};
      } catch (const PermanentRejection& e) {
        body = Json{{"failed", e.what()}};
      } catch (...) {
        std::lock_guard lock(io_mutex);
        if (!fatal) fatal = std::current_exception();
        stop.store(true);
        break;
      }
      Json entry;
      entry["input_id"] = pending[i].input.id;
      for (auto& [key, value] : body.items()) entry[key] = std::move(value);
      {
        std::lock_guard lock(io_mutex);
        done_out << entry.dump() << '\n';
        done_out.flush();
      }
    }
  };

  const int n_workers =
      static_cast<int>(std::min<std::size_t>(config_.workers, std::max<std::size_t>(pending.size(), 1)));
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  done_out.close();
  if (fatal) std::rethrow_exception(fatal);

  done = read_done_log(done_path);
  std::size_t processed_now = 0;
  for (const auto& item : pending) {
    if (done.count(item.input.id)) ++processed_now;
  }
  counts.calls = processed_now;  // refined by the caller via gateway counters

  if (interrupted.load()) {
    counts.interrupted = true;
    return counts;
  }

  // Every current input is now logged; rebuild the step outputs and the
  // drops sidecar from the log, in deterministic order.
  std::vector<Json> drops;
  for (const auto& input : inputs) {
    const auto it = done.find(input.id);
    if (it == done.end()) {
      throw DataError("step " + step + "." + lang + ": input " + input.id +
                      " missing from progress log after run");
    }
    const Json& entry = it->second;
    if (entry.contains("output")) {
      ++counts.produced;
      if (outputs) outputs->push_back(entry["output"]);
    } else if (entry.contains("drop")) {
      ++counts.dropped;
      drops.push_back(entry["drop"]);
    } else {
      ++counts.dropped;
      drops.push_back(Json{{"id", input.id}, {"reason", "failed"},
                           {"detail", entry.value("failed", "unknown")}});
    }
  }

  std::sort(drops.begin(), drops.end(), [](const Json& a, const Json& b) {
    return a.value("id", "") < b.value("id", "");
  });
  std::string drops_text;
  for (const auto& d : drops) {
    drops_text += d.dump();
    drops_text += '\n';
  }
  write_file_atomic(ws_.drops_log(step, lang), drops_text);

  // Compact the done-log: entries for the current input set, sorted by
  // input id, so repeated runs leave byte-identical state behind.
  std::string compacted;
  for (const auto& [input_id, entry] : done) {
    compacted += entry.dump();
    compacted += '\n';
  }
  write_file_atomic(done_path, compacted);
  return counts;
}

// --- transforms ------------------------------------------------------------------------

StepCounts Pipeline::run_transform(TransformKind kind, const RunOptions& options) {
  const std::vector<std::string> langs = effective_languages(options);
  const Stage input_stage = required_input_stage(kind);
  const Stage out_stage = output_stage(kind);

  // Auto-chain prerequisites for languages whose input data is missing.
  if (kind == TransformKind::translate) {
    if (!std::filesystem::exists(ws_.stage_file(Stage::seed, "en"))) {
      ingest();
      if (config_.dry_run) return {};
    }
  } else {
    RunOptions chained = options;
    chained.languages.clear();
    for (const auto& lang : langs) {
      if (!std::filesystem::exists(ws_.stage_file(input_stage, lang))) {
        chained.languages.push_back(lang);
      }
    }
    if (!chained.languages.empty()) {
      TransformKind prereq = TransformKind::translate;
      switch (input_stage) {
        case Stage::translated: prereq = TransformKind::translate; break;
        case Stage::naturalized: prereq = TransformKind::naturalize; break;
        default:
          throw DataError("no producer for stage " + to_string(input_stage));
      }
      const StepCounts chained_counts = run_transform(prereq, chained);
      if (chained_counts.interrupted) return chained_counts;
    }
  }

  Gateway& gateway = gateway_for(to_string(kind));
  const std::string step = to_string(kind);
  StepCounts total;
  std::uint64_t budget_left = options.call_budget.value_or(kNoBudget);

  for (const auto& lang : langs) {
    std::vector<PromptRecord> inputs =
        kind == TransformKind::translate ? load_stage(Stage::seed, "en")
                                         : load_stage(input_stage, lang);
    if (options.sample && *options.sample < inputs.size()) {
      Rng rng(mix_seed(config_.seed, "sample." + step + "." + lang));
      auto picks = rng.sample_indices(inputs.size(), *options.sample);
      std::sort(picks.begin(), picks.end());
      std::vector<PromptRecord> sampled;
      sampled.reserve(picks.size());
      for (std::size_t idx : picks) sampled.push_back(std::move(inputs[idx]));
      inputs = std::move(sampled);
    }

    // Deterministic output ids keyed to the input's rank, not to worker
    // scheduling; retries get an "r1" suffix inside the transformer.
    std::map<std::string, std::string> out_ids;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      out_ids[inputs[i].id] =
          std::string(id_prefix(kind)) + "-" + lang + "-" + padded_index(i);
    }

    const Transformer transformer(kind, kind == TransformKind::translate ? lang : "");
    const double temperature = config_.transform_temperature;
    const std::string created_at = clock_->now();
    const auto work = [&](const PromptRecord& input, const std::string&) -> Json {
      const PromptRecord child = transformer.apply(
          input, gateway, temperature, created_at, out_ids.at(input.id));
      const LangIdVerdict verdict = langid_->identify(child.text);
      if (verdict.lang == child.lang && verdict.confidence >= config_.min_confidence) {
        return Json{{"output", child.to_json()}};
      }
      return Json{{"drop", Json{{"id", child.id},
                                {"lang", child.lang},
                                {"detected", verdict.lang},
                                {"confidence", verdict.confidence},
                                {"reason", "language_mismatch"}}}};
    };

    const std::uint64_t before = gateway.calls_issued();
    std::vector<Json> outputs;
    StepCounts counts = run_language_step(step, lang, inputs, options, budget_left, work,
                                          &outputs);
    if (!options.dry_run) counts.calls = gateway.calls_issued() - before;
    if (budget_left != kNoBudget) {
      budget_left = budget_left > counts.calls ? budget_left - counts.calls : 0;
    }

    total.inputs += counts.inputs;
    total.resumed += counts.resumed;
    total.produced += counts.produced;
    total.dropped += counts.dropped;
    total.calls += counts.calls;
    if (counts.interrupted) {
      total.interrupted = true;
      return total;
    }
    if (options.dry_run) continue;

    std::vector<PromptRecord> records;
    records.reserve(outputs.size());
    for (const auto& j : outputs) records.push_back(PromptRecord::from_json(j));
    std::sort(records.begin(), records.end(), record_sort_key_less);
    save_prompt_records(records, ws_.stage_file(out_stage, lang));
  }

  if (options.dry_run) return total;

  // Manifest covers every configured language with data on disk, so partial
  // (--lang) runs still leave a coherent snapshot.
  std::map<std::string, std::vector<std::string>> ids_by_lang;
  for (const auto& lang : config_.languages) {
    const auto path = ws_.stage_file(out_stage, lang);
    if (!std::filesystem::exists(path)) continue;
    auto loaded = load_prompt_records(path, ParseMode::strict);
    for (const auto& r : loaded.items) ids_by_lang[lang].push_back(r.id);
  }
  write_manifest_for(to_string(out_stage), to_string(out_stage), ids_by_lang, {});
  return total;
}

StepCounts Pipeline::run_complete(const std::string& variant, const RunOptions& options) {
  const Stage prompt_stage = stage_from_string(variant);
  if (prompt_stage == Stage::seed) {
    throw ConfigError("completion runs on transformed prompts, not seeds");
  }
  const std::vector<std::string> langs = effective_languages(options);

  // Auto-chain the transform that produces this variant.
  {
    RunOptions chained = options;
    chained.languages.clear();
    for (const auto& lang : langs) {
      if (!std::filesystem::exists(ws_.stage_file(prompt_stage, lang))) {
        chained.languages.push_back(lang);
      }
    }
    if (!chained.languages.empty()) {
      TransformKind producer = TransformKind::translate;
      switch (prompt_stage) {
        case Stage::translated: producer = TransformKind::translate; break;
        case Stage::naturalized: producer = TransformKind::naturalize; break;
        case Stage::cultural: producer = TransformKind::culturalize; break;
        case Stage::difficulty: producer = TransformKind::difficultify; break;
        default: break;
      }
      const StepCounts chained_counts = run_transform(producer, chained);
      if (chained_counts.interrupted) return chained_counts;
    }
  }

  Gateway& gateway = gateway_for("complete");
  const std::string step = "complete." + variant;
  StepCounts total;
  std::uint64_t budget_left = options.call_budget.value_or(kNoBudget);

  for (const auto& lang : langs) {
    std::vector<PromptRecord> inputs = load_stage(prompt_stage, lang);
    if (options.sample && *options.sample < inputs.size()) {
      Rng rng(mix_seed(config_.seed, "sample." + step + "." + lang));
      auto picks = rng.sample_indices(inputs.size(), *options.sample);
      std::sort(picks.begin(), picks.end());
      std::vector<PromptRecord> sampled;
      sampled.reserve(picks.size());
      for (std::size_t idx : picks) sampled.push_back(std::move(inputs[idx]));
      inputs = std::move(sampled);
    }

    const double temperature = config_.completion_temperature;
    const auto work = [&](const PromptRecord& prompt, const std::string&) -> Json {
      CompletionRecord completion = complete_prompt(prompt, gateway, temperature);
      const LangIdVerdict verdict = langid_->identify(completion.text);
      completion.lang_verdict = verdict;
      if (verdict.lang == completion.lang && verdict.confidence >= config_.min_confidence) {
        PairedExample pair;
        pair.prompt = prompt;
        pair.completion = std::move(completion);
        return Json{{"output", pair.to_json()}};
      }
      return Json{{"drop", Json{{"id", completion.id},
                                {"lang", completion.lang},
                                {"detected", verdict.lang},
                                {"confidence", verdict.confidence},
                                {"reason", "language_mismatch"}}}};
    };

    const std::uint64_t before = gateway.calls_issued();
    std::vector<Json> outputs;
    StepCounts counts = run_language_step(step, lang, inputs, options, budget_left, work,
                                          &outputs);
    if (!options.dry_run) counts.calls = gateway.calls_issued() - before;
    if (budget_left != kNoBudget) {
      budget_left = budget_left > counts.calls ? budget_left - counts.calls : 0;
    }

    total.inputs += counts.inputs;
    total.resumed += counts.resumed;
    total.produced += counts.produced;
    total.dropped += counts.dropped;
    total.calls += counts.calls;
    if (counts.interrupted) {
      total.interrupted = true;
      return total;
    }
    if (options.dry_run) continue;

    std::vector<PairedExample> pairs;
    pairs.reserve(outputs.size());
    for (const auto& j : outputs) pairs.push_back(PairedExample::from_json(j));
    std::sort(pairs.begin(), pairs.end(), [](const PairedExample& a, const PairedExample& b) {
      return record_sort_key_less(a.prompt, b.prompt);
    });
    save_pairs(pairs, ws_.pairs_file(variant, lang));
  }

  if (options.dry_run) return total;

  std::map<std::string, std::vector<std::string>> ids_by_lang;
  for (const auto& lang : config_.languages) {
    const auto path = ws_.pairs_file(variant, lang);
    if (!std::filesystem::exists(path)) continue;
    auto loaded = load_pairs(path, ParseMode::strict);
    for (const auto& p : loaded.items) ids_by_lang[lang].push_back(p.completion.id);
  }
  write_manifest_for("pairs." + variant, variant, ids_by_lang, {});
  return total;
}

void Pipeline::write_manifest_for(
    const std::string& name, const std::string& stage_label,
    const std::map<std::string, std::vector<std::string>>& ids_by_lang,
    const std::vector<std::pair<std::string, double>>& sources) {
  DatasetManifest manifest;
  manifest.name = name;
  manifest.stage = stage_label;
  manifest.source_manifests = sources;
  for (const auto& [lang, ids] : ids_by_lang) {
    manifest.per_lang_counts[lang] = ids.size();
    for (const auto& id : ids) manifest.records.push_back(id);
  }
  save_manifest(manifest, ws_.manifest_file(name));
}

// --- evaluation ---------------------------------------------------------------------

namespace {

struct SideTexts {
  std::vector<std::string> prompts;
  std::vector<std::string> completions;
};

SideTexts side_texts(const std::vector<PairedExample>& pairs) {
  SideTexts t;
  t.prompts.reserve(pairs.size());
  t.completions.reserve(pairs.size());
  for (const auto& p : pairs) {
    t.prompts.push_back(p.prompt.text);
    t.completions.push_back(p.completion.text);
  }
  return t;
}

Json diversity_or_null(const std::vector<std::string>& corpus) {
  if (corpus.empty()) return nullptr;
  try {
    return ngram_diversity(corpus, 4);
  } catch (const DataError&) {
    return nullptr;  // corpus too short for 4-grams
  }
}

double mean_length_cp(const std::vector<std::string>& corpus) {
  if (corpus.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& text : corpus) total += codepoint_count(text);
  return static_cast<double>(total) / static_cast<double>(corpus.size());
}

}  // namespace

Json Pipeline::eval_data(const std::string& candidate, const std::string& baseline) {
  const bool judge_available = !config_.stage_backends.judge.empty();
  const bool scorer_available = !config_.stage_backends.scorer.empty();

  Json report;
  report["v"] = 1;
  report["kind"] = "eval-data";
  report["config_hash"] = config_hash(config_);
  report["generated_at"] = clock_->now();
  report["candidate"] = candidate;
  report["baseline"] = baseline;
  Json per_language = Json::object();

  // Accumulators for the overall (macro across languages) block.
  std::map<std::string, std::map<std::string, std::vector<double>>> overall;
  std::map<std::string, std::size_t> overall_n;
  std::size_t join_missing_total = 0;

  for (const auto& lang : config_.languages) {
    const auto candidate_path = ws_.pairs_file(candidate, lang);
    const auto baseline_path = ws_.pairs_file(baseline, lang);
    if (!std::filesystem::exists(candidate_path)) {
      throw DataError("candidate dataset missing: " + candidate_path.string());
    }
    if (!std::filesystem::exists(baseline_path)) {
      throw DataError("baseline dataset missing: " + baseline_path.string());
    }
    const auto cand = load_pairs(candidate_path, ParseMode::strict).items;
    const auto base = load_pairs(baseline_path, ParseMode::strict).items;

    std::map<std::string, const PairedExample*> base_by_seed;
    for (const auto& p : base) base_by_seed[p.prompt.seed_id] = &p;

    std::vector<double> prompt_dist;
    std::vector<double> completion_dist;
    std::size_t join_missing = 0;
    for (const auto& p : cand) {
      const auto it = base_by_seed.find(p.prompt.seed_id);
      if (it == base_by_seed.end()) {
        ++join_missing;
        continue;
      }
      prompt_dist.push_back(relative_edit_distance(p.prompt.text, it->second->prompt.text));
      completion_dist.push_back(
          relative_edit_distance(p.completion.text, it->second->completion.text));
    }
    join_missing_total += join_missing;

    const auto build_side = [&](const std::vector<PairedExample>& pairs,
                                bool is_candidate) -> Json {
      const SideTexts texts = side_texts(pairs);
      Json side;
      side["n"] = pairs.size();
      Json prompt = Json::object();
      Json completion = Json::object();
      prompt["mean_len"] = mean_length_cp(texts.prompts);
      completion["mean_len"] = mean_length_cp(texts.completions);
      prompt["rel_edit"] = is_candidate ? mean_or_null(prompt_dist) : Json(nullptr);
      completion["rel_edit"] = is_candidate ? mean_or_null(completion_dist) : Json(nullptr);
      prompt["diversity"] = diversity_or_null(texts.prompts);
      completion["diversity"] = diversity_or_null(texts.completions);

      if (texts.prompts.size() >= 2) {
        // Self-BLEU over a deterministic subsample: quadratic in corpus size
        // otherwise.
        BleuOptions bleu;
        bleu.max_references = 50;
        std::vector<std::string> sample(
            texts.prompts.begin(),
            texts.prompts.begin() +
                static_cast<std::ptrdiff_t>(std::min<std::size_t>(texts.prompts.size(), 200)));
        prompt["self_bleu"] = self_bleu(sample, bleu);
      } else {
        prompt["self_bleu"] = nullptr;
      }

      if (scorer_available && !pairs.empty()) {
        Gateway& scorer = gateway_for("scorer");
        std::vector<double> prompt_ppl;
        std::vector<double> completion_ppl;
        for (const auto& p : pairs) {
          prompt_ppl.push_back(perplexity_from_logprobs(scorer.score(p.prompt.text).token_logprobs));
          completion_ppl.push_back(
              perplexity_from_logprobs(scorer.score(p.completion.text).token_logprobs));
        }
        prompt["perplexity"] = mean_or_null(prompt_ppl);
        completion["perplexity"] = mean_or_null(completion_ppl);
      } else {
        prompt["perplexity"] = nullptr;
        completion["perplexity"] = nullptr;
      }

      if (judge_available && !pairs.empty()) {
        Gateway& judge = gateway_for("judge");
        std::vector<double> p_quality, p_difficulty, c_quality, c_difficulty;
        std::size_t failures = 0;
        for (const auto& p : pairs) {
          const GradeOutcome on_prompt = grade_prompt(p.prompt, judge);
          if (on_prompt.quality && on_prompt.difficulty) {
            p_quality.push_back(on_prompt.quality->score);
            p_difficulty.push_back(on_prompt.difficulty->score);
          } else {
            ++failures;
          }
          const GradeOutcome on_pair = grade_pair(p, judge);
          if (on_pair.quality && on_pair.difficulty) {
            c_quality.push_back(on_pair.quality->score);
            c_difficulty.push_back(on_pair.difficulty->score);
          } else {
            ++failures;
          }
        }
        prompt["quality"] = mean_or_null(p_quality);
        prompt["difficulty"] = mean_or_null(p_difficulty);
        completion["quality"] = mean_or_null(c_quality);
        completion["difficulty"] = mean_or_null(c_difficulty);
        side["grade_parse_failures"] = failures;
      } else {
        prompt["quality"] = nullptr;
        prompt["difficulty"] = nullptr;
        completion["quality"] = nullptr;
        completion["difficulty"] = nullptr;
      }

      {
        std::vector<double> lprs;
        for (const auto& p : pairs) {
          const auto lpr = line_pass_rate(*langid_, p.completion.text, p.prompt.lang);
          if (lpr) lprs.push_back(lpr->rate);
        }
        completion["lpr"] = mean_or_null(lprs);
      }

      side["prompt"] = prompt;
      side["completion"] = completion;
      return side;
    };

    Json lang_block;
    lang_block["candidate"] = build_side(cand, true);
    lang_block["baseline"] = build_side(base, false);
    lang_block["join_missing"] = join_missing;
    per_language[lang] = lang_block;

    for (const char* dataset : {"candidate", "baseline"}) {
      overall_n[dataset] += per_language[lang][dataset]["n"].get<std::size_t>();
      for (const char* side : {"prompt", "completion"}) {
        for (const auto& [metric, value] : per_language[lang][dataset][side].items()) {
          accumulate(overall[dataset][std::string(side) + "." + metric], value);
        }
      }
    }
  }

  report["per_language"] = per_language;
  Json overall_json = Json::object();
  for (const auto& [dataset, metrics] : overall) {
    Json block;
    block["n"] = overall_n[dataset];
    Json prompt = Json::object();
    Json completion = Json::object();
    for (const auto& [key, values] : metrics) {
      const std::size_t dot = key.find('.');
      const std::string side = key.substr(0, dot);
      const std::string metric = key.substr(dot + 1);
      (side == "prompt" ? prompt : completion)[metric] = mean_or_null(values);
    }
    block["prompt"] = prompt;
    block["completion"] = completion;
    overall_json[dataset] = block;
  }
  report["overall"] = overall_json;
  report["join_missing"] = join_missing_total;

  const std::string base_name = "eval." + candidate + "_vs_" + baseline;
  write_file_atomic(ws_.report_file(base_name + ".json"), report.dump(2) + "\n");

  // Plain-text companion table: one row per dataset and side.
  std::ostringstream text;
  text << "Data metrics: " << candidate << " (candidate) vs " << baseline << " (baseline)\n";
  char header[160];
  std::snprintf(header, sizeof(header), "%-12s %-4s %8s %10s %10s %10s %10s %10s %10s\n",
                "dataset", "side", "n", "len", "rel.dist", "ppl", "diversity",
                "difficulty", "quality");
  text << header;
  for (const char* dataset : {"candidate", "baseline"}) {
    const Json& block = report["overall"][dataset];
    const std::string label = dataset == std::string("candidate") ? candidate : baseline;
    for (const char* side : {"prompt", "completion"}) {
      const Json& cells = block[side];
      char row[200];
      std::snprintf(row, sizeof(row), "%-12s %-4s %8zu %s %s %s %s %s %s\n", label.c_str(),
                    side == std::string("prompt") ? "P" : "C",
                    block["n"].get<std::size_t>(),
                    format_cell(cells["mean_len"], 10).c_str(),
                    format_cell(cells["rel_edit"], 10).c_str(),
                    format_cell(cells["perplexity"], 10).c_str(),
                    format_cell(cells["diversity"], 10).c_str(),
                    format_cell(cells["difficulty"], 10).c_str(),
                    format_cell(cells["quality"], 10).c_str());
      text << row;
    }
  }
  write_file_atomic(ws_.report_file(base_name + ".txt"), text.str());
  return report;
}

Json Pipeline::judge_dataset(const std::string& variant, const RunOptions& options) {
  if (config_.stage_backends.judge.empty()) {
    throw ConfigError("judge: no judge backend configured");
  }
  Gateway& judge = gateway_for("judge");
  const std::vector<std::string> langs = effective_languages(options);

  Json report;
  report["v"] = 1;
  report["kind"] = "judge";
  report["config_hash"] = config_hash(config_);
  report["generated_at"] = clock_->now();
  report["dataset"] = variant;
  Json per_language = Json::object();
  std::vector<double> all_pq, all_pd, all_cq, all_cd;
  std::size_t failures_total = 0;

  std::string audit;
  for (const auto& lang : langs) {
    const auto path = ws_.pairs_file(variant, lang);
    if (!std::filesystem::exists(path)) {
      throw DataError("pairs dataset missing: " + path.string());
    }
    auto pairs = load_pairs(path, ParseMode::strict).items;
    if (options.sample && *options.sample < pairs.size()) {
      Rng rng(mix_seed(config_.seed, "sample.judge." + variant + "." + lang));
      auto picks = rng.sample_indices(pairs.size(), *options.sample);
      std::sort(picks.begin(), picks.end());
      std::vector<PairedExample> sampled;
      for (std::size_t idx : picks) sampled.push_back(std::move(pairs[idx]));
      pairs = std::move(sampled);
    }

    std::vector<double> pq, pd, cq, cd;
    std::size_t failures = 0;
    for (const auto& pair : pairs) {
      const GradeOutcome on_prompt = grade_prompt(pair.prompt, judge);
      const GradeOutcome on_pair = grade_pair(pair, judge);
      Json line;
      line["prompt_id"] = pair.prompt.id;
      line["completion_id"] = pair.completion.id;
      line["lang"] = lang;
      line["prompt_quality"] =
          on_prompt.quality ? Json(std::string(1, on_prompt.quality->letter)) : Json(nullptr);
      line["prompt_difficulty"] =
          on_prompt.difficulty ? Json(on_prompt.difficulty->label) : Json(nullptr);
      line["pair_quality"] =
          on_pair.quality ? Json(std::string(1, on_pair.quality->letter)) : Json(nullptr);
      line["pair_difficulty"] =
          on_pair.difficulty ? Json(on_pair.difficulty->label) : Json(nullptr);
      line["parse_failed"] = on_prompt.parse_failed || on_pair.parse_failed;
      audit += line.dump();
      audit += '\n';

      if (on_prompt.quality && on_prompt.difficulty) {
        pq.push_back(on_prompt.quality->score);
        pd.push_back(on_prompt.difficulty->score);
      } else {
        ++failures;
      }
      if (on_pair.quality && on_pair.difficulty) {
        cq.push_back(on_pair.quality->score);
        cd.push_back(on_pair.difficulty->score);
      } else {
        ++failures;
      }
    }

    Json block;
    block["n"] = pairs.size();
    block["prompt_quality"] = mean_or_null(pq);
    block["prompt_difficulty"] = mean_or_null(pd);
    block["pair_quality"] = mean_or_null(cq);
    block["pair_difficulty"] = mean_or_null(cd);
    block["parse_failures"] = failures;
    per_language[lang] = block;
    failures_total += failures;
    all_pq.insert(all_pq.end(), pq.begin(), pq.end());
    all_pd.insert(all_pd.end(), pd.begin(), pd.end());
    all_cq.insert(all_cq.end(), cq.begin(), cq.end());
    all_cd.insert(all_cd.end(), cd.begin(), cd.end());
  }

  report["per_language"] = per_language;
  report["overall"] = Json{{"prompt_quality", mean_or_null(all_pq)},
                           {"prompt_difficulty", mean_or_null(all_pd)},
                           {"pair_quality", mean_or_null(all_cq)},
                           {"pair_difficulty", mean_or_null(all_cd)},
                           {"parse_failures", failures_total}};
  write_file_atomic(ws_.report_file("grades." + variant + ".verdicts.jsonl"), audit);
  write_file_atomic(ws_.report_file("grades." + variant + ".json"), report.dump(2) + "\n");
  return report;
}

Json Pipeline::winrate(const std::string& variant_x, const std::string& variant_y,
                       const std::string& mode_name, std::size_t n_bootstrap) {
  if (config_.stage_backends.pairwise.empty()) {
    throw ConfigError("winrate: no pairwise judge backend configured");
  }
  const JudgeMode mode = judge_mode_from_string(mode_name);
  Gateway& judge = gateway_for("pairwise");

  Json report;
  report["v"] = 1;
  report["kind"] = "winrate";
  report["config_hash"] = config_hash(config_);
  report["generated_at"] = clock_->now();
  report["x"] = variant_x;
  report["y"] = variant_y;
  report["mode"] = mode_name;

  std::vector<PairwiseVerdict> all_verdicts;
  Json per_language = Json::object();
  std::size_t join_missing = 0;
  std::size_t parse_failures = 0;
  std::string audit;

  for (const auto& lang : config_.languages) {
    const auto x_path = ws_.pairs_file(variant_x, lang);
    const auto y_path = ws_.pairs_file(variant_y, lang);
    if (!std::filesystem::exists(x_path) || !std::filesystem::exists(y_path)) {
      throw DataError("winrate: missing pairs dataset for language " + lang);
    }
    const auto x_pairs = load_pairs(x_path, ParseMode::strict).items;
    const auto y_pairs = load_pairs(y_path, ParseMode::strict).items;
    std::map<std::string, const PairedExample*> y_by_seed;
    for (const auto& p : y_pairs) y_by_seed[p.prompt.seed_id] = &p;

    std::vector<PairwiseVerdict> verdicts;
    for (const auto& p : x_pairs) {
      const auto it = y_by_seed.find(p.prompt.seed_id);
      if (it == y_by_seed.end()) {
        ++join_missing;
        continue;
      }
      PairwiseItem item;
      // The two sides answered different rewrites of the same seed; the
      // judge sees the candidate's phrasing as the instruction.
      item.prompt_id = p.prompt.seed_id + "." + lang;
      item.prompt_text = p.prompt.text;
      item.lang = lang;
      item.completion_x = p.completion.text;
      item.completion_y = it->second->completion.text;
      PairwiseVerdict verdict = judge_pair_preference(item, mode, judge, config_.seed);

      Json line;
      line["prompt_id"] = verdict.prompt_id;
      line["lang"] = lang;
      line["x_shown_as_a"] = verdict.x_shown_as_a;
      line["choice"] = verdict.parse_failed          ? "unparsed"
                       : verdict.choice == Preference::a ? "A"
                       : verdict.choice == Preference::b ? "B"
                                                         : "TIE";
      line["x_score"] = verdict.x_score;
      line["parse_failed"] = verdict.parse_failed;
      line["raw_reply"] = verdict.raw_reply;
      audit += line.dump();
      audit += '\n';

      if (verdict.parse_failed) {
        ++parse_failures;
        continue;
      }
      verdicts.push_back(verdict);
    }

    if (!verdicts.empty()) {
      const WinRateSummary lang_summary = win_rate_summary(
          verdicts, n_bootstrap, mix_seed(config_.seed, "bootstrap." + lang));
      per_language[lang] = Json{{"n", lang_summary.n},
                                {"wins", lang_summary.wins},
                                {"losses", lang_summary.losses},
                                {"ties", lang_summary.ties},
                                {"win_rate", lang_summary.win_rate},
                                {"ci95", Json::array({lang_summary.ci_low, lang_summary.ci_high})}};
    } else {
      per_language[lang] = Json{{"n", 0}};
    }
    all_verdicts.insert(all_verdicts.end(), verdicts.begin(), verdicts.end());
  }

  if (all_verdicts.empty()) {
    throw DataError("winrate: empty join between " + variant_x + " and " + variant_y);
  }
  const WinRateSummary summary =
      win_rate_summary(all_verdicts, n_bootstrap, mix_seed(config_.seed, "bootstrap"));
  report["n"] = summary.n;
  report["wins"] = summary.wins;
  report["losses"] = summary.losses;
  report["ties"] = summary.ties;
  report["win_rate"] = summary.win_rate;
  report["ci95"] = Json::array({summary.ci_low, summary.ci_high});
  report["n_bootstrap"] = summary.n_bootstrap;
  report["per_language"] = per_language;
  report["join_missing"] = join_missing;
  report["parse_failures"] = parse_failures;

  const std::string base_name = "winrate." + variant_x + "_vs_" + variant_y + "." + mode_name;
  write_file_atomic(ws_.report_file(base_name + ".verdicts.jsonl"), audit);
  write_file_atomic(ws_.report_file(base_name + ".json"), report.dump(2) + "\n");
  return report;
}

Json Pipeline::mix() {
  std::vector<std::vector<PairedExample>> pools;
  std::vector<std::size_t> available;
  for (const auto& component : config_.mixture) {
    std::vector<PairedExample> pool;
    for (const auto& lang : config_.languages) {
      const auto path = ws_.pairs_file(component.name, lang);
      if (!std::filesystem::exists(path)) {
        throw DataError("mixture component \"" + component.name +
                        "\" has no pairs for language " + lang + "; run complete first");
      }
      auto loaded = load_pairs(path, ParseMode::strict).items;
      pool.insert(pool.end(), std::make_move_iterator(loaded.begin()),
                  std::make_move_iterator(loaded.end()));
    }
    available.push_back(pool.size());
    pools.push_back(std::move(pool));
  }

  MixtureOptions options;
  options.size = config_.mixture_size;
  options.per_language_balance = config_.per_language_balance;
  options.seed = mix_seed(config_.seed, "mixture");
  const MixtureResult result = mix_datasets(config_.mixture, pools, options);

  save_pairs(result.examples, ws_.mixture_file());

  std::map<std::string, std::vector<std::string>> ids_by_lang;
  std::map<std::string, std::map<std::string, std::size_t>> stage_lang_counts;
  for (const auto& ex : result.examples) {
    ids_by_lang[ex.prompt.lang].push_back(ex.completion.id);
    ++stage_lang_counts[to_string(ex.prompt.stage)][ex.prompt.lang];
  }
  for (auto& [lang, ids] : ids_by_lang) std::sort(ids.begin(), ids.end());
  std::vector<std::pair<std::string, double>> sources;
  for (const auto& component : config_.mixture) {
    const double realized =
        result.examples.empty()
            ? 0.0
            : static_cast<double>(result.per_component.at(component.name)) /
                  static_cast<double>(result.examples.size());
    sources.emplace_back(component.name, realized);
  }
  write_manifest_for("mixture", "mixture", ids_by_lang, sources);

  Json report;
  report["v"] = 1;
  report["kind"] = "mixture";
  report["config_hash"] = config_hash(config_);
  report["generated_at"] = clock_->now();
  report["total"] = result.examples.size();
  Json components = Json::object();
  for (const auto& [name, count] : result.per_component) components[name] = count;
  report["per_component"] = components;

  // Count table: rows = prompt stages, columns = languages, plus totals.
  Json table = Json::object();
  std::map<std::string, std::size_t> column_totals;
  for (const auto& [stage, by_lang] : stage_lang_counts) {
    Json row = Json::object();
    std::size_t row_total = 0;
    for (const auto& [lang, count] : by_lang) {
      row[lang] = count;
      row_total += count;
      column_totals[lang] += count;
    }
    row["total"] = row_total;
    table[stage] = row;
  }
  Json totals = Json::object();
  std::size_t grand = 0;
  for (const auto& [lang, count] : column_totals) {
    totals[lang] = count;
    grand += count;
  }
  totals["total"] = grand;
  table["total"] = totals;
  report["counts"] = table;

  write_file_atomic(ws_.report_file("mixture_counts.json"), report.dump(2) + "\n");

  std::ostringstream text;
  text << "Mixture counts (rows = prompt stage, columns = language)\n";
  std::vector<std::string> langs;
  for (const auto& [lang, _] : column_totals) langs.push_back(lang);
  text << "stage       ";
  for (const auto& lang : langs) {
    char cell[16];
    std::snprintf(cell, sizeof(cell), " %8s", lang.c_str());
    text << cell;
  }
  text << "    total\n";
  for (const auto& [stage, row] : table.items()) {
    if (stage == "total") continue;
    char head[32];
    std::snprintf(head, sizeof(head), "%-12s", stage.c_str());
    text << head;
    for (const auto& lang : langs) {
      char cell[16];
      std::snprintf(cell, sizeof(cell), " %8zu", row.value(lang, std::size_t{0}));
      text << cell;
    }
    char tail[16];
    std::snprintf(tail, sizeof(tail), " %8zu\n", row["total"].get<std::size_t>());
    text << tail;
  }
  char foot[32];
  std::snprintf(foot, sizeof(foot), "%-12s", "total");
  text << foot;
  for (const auto& lang : langs) {
    char cell[16];
    std::snprintf(cell, sizeof(cell), " %8zu", column_totals[lang]);
    text << cell;
  }
  char grand_cell[16];
  std::snprintf(grand_cell, sizeof(grand_cell), " %8zu\n", grand);
  text << grand_cell;
  write_file_atomic(ws_.report_file("mixture_counts.txt"), text.str());
  return report;
}

Json Pipeline::report() const {
  Json summary;
  summary["v"] = 1;
  summary["kind"] = "summary";
  summary["config_hash"] = config_hash(config_);
  summary["generated_at"] = clock_->now();

  // Dataset counts: rows = stage/variant, columns = languages.
  Json counts = Json::object();
  const std::filesystem::path manifest_dir = ws_.root() / "data" / "manifests";
  std::vector<std::filesystem::path> manifest_paths;
  if (std::filesystem::exists(manifest_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(manifest_dir)) {
      if (entry.path().extension() == ".json") manifest_paths.push_back(entry.path());
    }
  }
  std::sort(manifest_paths.begin(), manifest_paths.end());
  for (const auto& path : manifest_paths) {
    const DatasetManifest manifest = load_manifest(path);
    Json row = Json::object();
    std::size_t total = 0;
    for (const auto& [lang, count] : manifest.per_lang_counts) {
      row[lang] = count;
      total += count;
    }
    row["total"] = total;
    counts[manifest.name] = row;
  }
  summary["datasets"] = counts;

  Json reports = Json::array();
  const std::filesystem::path report_dir = ws_.root() / "reports";
  std::vector<std::string> names;
  if (std::filesystem::exists(report_dir)) {
    for (const auto& entry : std::filesystem::directory_iterator(report_dir)) {
      if (entry.path().filename() != "summary.json") {
        names.push_back(entry.path().filename().string());
      }
    }
  }
  std::sort(names.begin(), names.end());
  for (const auto& name : names) reports.push_back(name);
  summary["reports"] = reports;

  write_file_atomic(ws_.report_file("summary.json"), summary.dump(2) + "\n");
  return summary;
}

// --- tree fingerprint -----------------------------------------------------------------

std::string tree_fingerprint(const std::filesystem::path& root,
                             const std::vector<std::string>& exclude_names) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (std::find(exclude_names.begin(), exclude_names.end(), name) != exclude_names.end()) {
      continue;
    }
    files.push_back(std::filesystem::relative(entry.path(), root));
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto fold = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& rel : files) {
    fold(rel.string());
    fold("\x1e");
    fold(read_file(root / rel));
    fold("\x1f");
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pforge
