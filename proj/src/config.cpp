#include "pforge/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pforge/errors.hpp"
#include "pforge/templates.hpp"
#include "pforge/util.hpp"

namespace pforge {

namespace {

Json defaults() {
  Json j;
  j["v"] = 1;
  j["workspace"] = "ws";
  j["languages"] = Json::array({"de", "es"});
  j["seed"] = 0;
  j["seeds_file"] = "seeds.jsonl";
  j["backends"] = Json::object();
  j["stage_backends"] = Json{{"translate", ""},    {"naturalize", ""}, {"culturalize", ""},
                             {"difficultify", ""}, {"complete", ""},   {"judge", ""},
                             {"pairwise", ""},     {"scorer", ""}};
  j["temperatures"] = Json{{"transform", 0.3}, {"completion", 0.3}, {"judge", 0.0}};
  j["max_in_flight"] = 8;
  j["workers"] = 4;
  j["retry"] = Json{{"max_retries", 3},
                    {"initial_backoff_s", 1.0},
                    {"backoff_multiplier", 2.0},
                    {"max_backoff_s", 60.0},
                    {"sleep_scale", 1.0}};
  j["langid_rules"] = "langid_rules.jsonl";
  j["min_confidence"] = 0.0;
  j["strict"] = false;
  j["fixed_clock"] = false;
  j["dry_run"] = false;
  j["mixture"] =
      Json{{"components", Json::array({Json{{"name", "cultural"}, {"proportion", 0.5}},
                                       Json{{"name", "difficulty"}, {"proportion", 0.5}}})},
           {"size", nullptr},
           {"per_language_balance", false}};
  return j;
}

// Recursive overlay: objects merge key-by-key, everything else replaces.
void merge_into(Json& base, const Json& overlay) {
  if (!overlay.is_object() || !base.is_object()) {
    base = overlay;
    return;
  }
  for (const auto& [key, value] : overlay.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object()) {
      merge_into(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path = p;
  return path.is_absolute() ? path : base / path;
}

BackendSpec parse_backend(const std::string& id, const Json& j) {
  BackendSpec spec;
  spec.id = id;
  spec.kind = j.value("kind", "mock:echo");
  spec.expand_factor = j.value("expand_factor", 3);
  spec.salt = j.value("salt", std::uint64_t{0});
  spec.hashed_scoring = j.value("hashed_scoring", false);
  spec.flaky_failures = j.value("flaky_failures", 0);
  spec.base_url = j.value("base_url", "");
  spec.model = j.value("model", "");
  spec.api_key_env = j.value("api_key_env", "");
  spec.timeout_s = j.value("timeout_s", 120);
  spec.max_tokens = j.value("max_tokens", 1024);
  return spec;
}

}  // namespace

RunConfig config_from_json(const Json& raw, const std::filesystem::path& config_dir) {
  if (raw.contains("v") && (!raw["v"].is_number_integer() || raw["v"].get<int>() != 1)) {
    throw ConfigError("unsupported config version (expected v=1)");
  }
  Json j = defaults();
  merge_into(j, raw);

  RunConfig config;
  config.canonical = j;
  try {
    config.workspace = resolve(config_dir, j["workspace"].get<std::string>());
    config.languages = j["languages"].get<std::vector<std::string>>();
    config.seed = j["seed"].get<std::uint64_t>();
    config.seeds_file = resolve(config_dir, j["seeds_file"].get<std::string>()).string();

    for (const auto& [id, spec] : j["backends"].items()) {
      config.backends[id] = parse_backend(id, spec);
    }
    const Json& sb = j["stage_backends"];
    config.stage_backends.translate = sb.value("translate", "");
    config.stage_backends.naturalize = sb.value("naturalize", "");
    config.stage_backends.culturalize = sb.value("culturalize", "");
    config.stage_backends.difficultify = sb.value("difficultify", "");
    config.stage_backends.complete = sb.value("complete", "");
    config.stage_backends.judge = sb.value("judge", "");
    config.stage_backends.pairwise = sb.value("pairwise", "");
    config.stage_backends.scorer = sb.value("scorer", "");

    config.transform_temperature = j["temperatures"].value("transform", 0.3);
    config.completion_temperature = j["temperatures"].value("completion", 0.3);
    config.judge_temperature = j["temperatures"].value("judge", 0.0);

    config.max_in_flight = j["max_in_flight"].get<int>();
    config.workers = j["workers"].get<int>();
    config.retry.max_retries = j["retry"].value("max_retries", 3);
    config.retry.initial_backoff_s = j["retry"].value("initial_backoff_s", 1.0);
    config.retry.backoff_multiplier = j["retry"].value("backoff_multiplier", 2.0);
    config.retry.max_backoff_s = j["retry"].value("max_backoff_s", 60.0);
    config.retry.sleep_scale = j["retry"].value("sleep_scale", 1.0);

    config.langid_rules = resolve(config_dir, j["langid_rules"].get<std::string>());
    config.min_confidence = j["min_confidence"].get<double>();
    config.strict = j["strict"].get<bool>();
    config.fixed_clock = j["fixed_clock"].get<bool>();
    config.dry_run = j["dry_run"].get<bool>();

    for (const auto& c : j["mixture"]["components"]) {
      config.mixture.push_back(
          {c["name"].get<std::string>(), c["proportion"].get<double>()});
    }
    if (!j["mixture"]["size"].is_null()) {
      config.mixture_size = j["mixture"]["size"].get<std::size_t>();
    }
    config.per_language_balance = j["mixture"].value("per_language_balance", false);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string body = read_file_if_exists(path).value_or("");
  if (body.empty()) throw ConfigError("config file missing or empty: " + path.string());
  Json raw;
  try {
    raw = Json::parse(body);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  const std::filesystem::path dir =
      path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  RunConfig config = config_from_json(raw, dir);
  validate_config(config);
  return config;
}

void validate_config(const RunConfig& config) {
  std::vector<std::string> problems;

  if (config.languages.empty()) problems.push_back("languages: empty list");
  const auto& known = supported_languages();
  for (const auto& lang : config.languages) {
    if (std::find(known.begin(), known.end(), lang) == known.end()) {
      problems.push_back("languages: \"" + lang + "\" is not a supported target");
    }
  }

  const auto check_backend = [&](const std::string& role, const std::string& id,
                                 bool required) {
    if (id.empty()) {
      if (required) problems.push_back("stage_backends." + role + ": no backend configured");
      return;
    }
    if (!config.backends.count(id)) {
      problems.push_back("stage_backends." + role + ": unknown backend \"" + id + "\"");
    }
  };
  check_backend("translate", config.stage_backends.translate, true);
  check_backend("naturalize", config.stage_backends.naturalize, true);
  check_backend("culturalize", config.stage_backends.culturalize, true);
  check_backend("difficultify", config.stage_backends.difficultify, true);
  check_backend("complete", config.stage_backends.complete, true);
  check_backend("judge", config.stage_backends.judge, false);
  check_backend("pairwise", config.stage_backends.pairwise, false);
  check_backend("scorer", config.stage_backends.scorer, false);

  for (const auto& [id, spec] : config.backends) {
    if (spec.kind == "http") {
      if (spec.base_url.empty()) problems.push_back("backend " + id + ": base_url missing");
    } else if (starts_with(spec.kind, "mock:")) {
      try {
        mock_profile_from_string(spec.kind.substr(5));
      } catch (const ConfigError& e) {
        problems.push_back("backend " + id + ": " + e.what());
      }
    } else {
      problems.push_back("backend " + id + ": unknown kind \"" + spec.kind +
                         "\" (expected http or mock:<profile>)");
    }
  }

  if (config.max_in_flight < 1) problems.push_back("max_in_flight: must be >= 1");
  if (config.workers < 1) problems.push_back("workers: must be >= 1");
  if (config.retry.max_retries < 0) problems.push_back("retry.max_retries: must be >= 0");
  if (config.min_confidence < 0.0 || config.min_confidence > 1.0) {
    problems.push_back("min_confidence: must be in [0, 1]");
  }
  for (const auto& t : {config.transform_temperature, config.completion_temperature,
                        config.judge_temperature}) {
    if (t < 0.0 || t > 2.0) problems.push_back("temperatures: must be in [0, 2]");
  }

  if (config.mixture.empty()) {
    problems.push_back("mixture.components: empty");
  } else {
    double sum = 0.0;
    for (const auto& c : config.mixture) {
      if (c.proportion < 0.0) {
        problems.push_back("mixture component " + c.name + ": negative proportion");
      }
      sum += c.proportion;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      problems.push_back("mixture.components: proportions sum to " + std::to_string(sum) +
                         ", expected 1");
    }
  }

  if (!problems.empty()) {
    std::string message = "invalid configuration:";
    for (const auto& p : problems) message += "\n  - " + p;
    throw ConfigError(message);
  }
}

std::string config_hash(const RunConfig& config) {
  Json canonical = config.canonical;
  canonical.erase("workspace");
  // nlohmann::json sorts object keys on regular json; ordered_json keeps
  // insertion order, which is deterministic here because defaults() builds
  // the skeleton in a fixed order before user values overlay it.
  const std::uint64_t h = fnv1a64(canonical.dump());
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::shared_ptr<Backend> make_backend(const BackendSpec& spec) {
  if (spec.kind == "http") {
    HttpBackendConfig http;
    http.id = spec.id;
    http.base_url = spec.base_url;
    http.model = spec.model;
    http.api_key_env = spec.api_key_env;
    http.timeout_s = spec.timeout_s;
    http.max_tokens = spec.max_tokens;
    return std::make_shared<HttpBackend>(http);
  }
  if (!starts_with(spec.kind, "mock:")) {
    throw ConfigError("backend " + spec.id + ": unknown kind \"" + spec.kind + "\"");
  }
  MockOptions options;
  options.profile = mock_profile_from_string(spec.kind.substr(5));
  options.expand_factor = spec.expand_factor;
  options.salt = spec.salt;
  options.hashed_scoring = spec.hashed_scoring;
  std::shared_ptr<Backend> backend = std::make_shared<MockBackend>(spec.id, options);
  if (spec.flaky_failures > 0) {
    backend = std::make_shared<FlakyBackend>(backend, spec.flaky_failures);
  }
  return backend;
}

Json default_mock_config_json(const std::filesystem::path& workspace,
                              const std::filesystem::path& seeds_file,
                              const std::filesystem::path& langid_rules,
                              const std::vector<std::string>& languages) {
  Json j;
  j["v"] = 1;
  j["workspace"] = workspace.string();
  j["languages"] = languages;
  j["seed"] = 42;
  j["seeds_file"] = seeds_file.string();
  j["backends"] = Json{{"xform", Json{{"kind", "mock:tag"}}},
                       {"teacher", Json{{"kind", "mock:tag"}}},
                       {"grader", Json{{"kind", "mock:grade"}}},
                       {"referee", Json{{"kind", "mock:prefer_hash"}}},
                       {"scorer", Json{{"kind", "mock:echo"}}}};
  j["stage_backends"] = Json{{"translate", "xform"},    {"naturalize", "xform"},
                             {"culturalize", "xform"},  {"difficultify", "xform"},
                             {"complete", "teacher"},   {"judge", "grader"},
                             {"pairwise", "referee"},   {"scorer", "scorer"}};
  j["langid_rules"] = langid_rules.string();
  j["retry"] = Json{{"max_retries", 2}, {"initial_backoff_s", 0.01}, {"sleep_scale", 0.0}};
  return j;
}

}  // namespace pforge
