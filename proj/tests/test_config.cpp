#include "pforge/config.hpp"

#include <fstream>
#include <string>

#include "doctest.h"
#include "pforge/errors.hpp"
#include "pforge/gateway.hpp"
#include "pforge/util.hpp"
#include "test_support.hpp"

using namespace pforge;

namespace {

Json minimal_valid() {
  Json j;
  j["backends"] = Json{{"m", Json{{"kind", "mock:echo"}}}};
  j["stage_backends"] = Json{{"translate", "m"},    {"naturalize", "m"},
                             {"culturalize", "m"},  {"difficultify", "m"},
                             {"complete", "m"}};
  return j;
}

}  // namespace

TEST_CASE("defaults fill every field") {
  const RunConfig config = config_from_json(Json::object(), "/tmp/cfgdir");
  CHECK(config.languages == std::vector<std::string>{"de", "es"});
  CHECK(config.seed == 0);
  CHECK(config.transform_temperature == doctest::Approx(0.3));
  CHECK(config.completion_temperature == doctest::Approx(0.3));
  CHECK(config.judge_temperature == doctest::Approx(0.0));
  CHECK(config.max_in_flight == 8);
  CHECK(config.workers == 4);
  CHECK(config.retry.max_retries == 3);
  CHECK(config.min_confidence == 0.0);
  REQUIRE(config.mixture.size() == 2);
  CHECK(config.mixture[0].name == "cultural");
  CHECK(config.mixture[0].proportion == doctest::Approx(0.5));
  CHECK(config.mixture[1].name == "difficulty");
  CHECK_FALSE(config.mixture_size.has_value());
  CHECK_FALSE(config.per_language_balance);
  CHECK_FALSE(config.strict);
  // Relative paths resolve against the config directory.
  CHECK(config.workspace == std::filesystem::path("/tmp/cfgdir/ws"));
  CHECK(config.langid_rules == std::filesystem::path("/tmp/cfgdir/langid_rules.jsonl"));
}

TEST_CASE("absolute paths pass through unresolved") {
  Json j;
  j["workspace"] = "/abs/ws";
  j["seeds_file"] = "/abs/seeds.jsonl";
  const RunConfig config = config_from_json(j, "/tmp/cfgdir");
  CHECK(config.workspace == std::filesystem::path("/abs/ws"));
  CHECK(config.seeds_file == "/abs/seeds.jsonl");
}

TEST_CASE("overlay merges nested objects and replaces scalars") {
  Json j;
  j["temperatures"] = Json{{"judge", 0.7}};
  j["retry"] = Json{{"max_retries", 9}};
  j["languages"] = Json::array({"cy"});
  const RunConfig config = config_from_json(j, ".");
  CHECK(config.judge_temperature == doctest::Approx(0.7));
  CHECK(config.transform_temperature == doctest::Approx(0.3));  // untouched sibling
  CHECK(config.retry.max_retries == 9);
  CHECK(config.retry.backoff_multiplier == doctest::Approx(2.0));
  CHECK(config.languages == std::vector<std::string>{"cy"});  // arrays replace
}

TEST_CASE("unsupported config versions are rejected") {
  Json j;
  j["v"] = 2;
  CHECK_THROWS_AS(config_from_json(j, "."), ConfigError);
  Json ok;
  ok["v"] = 1;
  CHECK_NOTHROW(config_from_json(ok, "."));
}

TEST_CASE("type errors surface as config errors") {
  Json j;
  j["seed"] = "not a number";
  CHECK_THROWS_AS(config_from_json(j, "."), ConfigError);
  Json j2;
  j2["mixture"] = Json{{"components", Json::array({Json{{"name", "x"}}})}};
  CHECK_THROWS_AS(config_from_json(j2, "."), ConfigError);
}

TEST_CASE("validation reports every violation at once") {
  Json j = minimal_valid();
  j["languages"] = Json::array({"de", "xx"});
  j["stage_backends"]["complete"] = "ghost";
  j["temperatures"] = Json{{"transform", 5.0}};
  j["mixture"] = Json{
      {"components", Json::array({Json{{"name", "a"}, {"proportion", 0.4}},
                                  Json{{"name", "b"}, {"proportion", 0.4}}})}};
  const RunConfig config = config_from_json(j, ".");
  try {
    validate_config(config);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string message = e.what();
    CHECK(contains(message, "\"xx\""));
    CHECK(contains(message, "ghost"));
    CHECK(contains(message, "temperatures"));
    CHECK(contains(message, "sum to"));
  }
}

TEST_CASE("required stage backends must be wired") {
  Json j = minimal_valid();
  j["stage_backends"]["translate"] = "";
  CHECK_THROWS_WITH_AS(validate_config(config_from_json(j, ".")),
                       doctest::Contains("translate"), ConfigError);
  // Judge, pairwise, and scorer are optional.
  CHECK_NOTHROW(validate_config(config_from_json(minimal_valid(), ".")));
}

TEST_CASE("backend kinds are checked") {
  Json j = minimal_valid();
  j["backends"]["m"]["kind"] = "carrier-pigeon";
  CHECK_THROWS_WITH_AS(validate_config(config_from_json(j, ".")),
                       doctest::Contains("carrier-pigeon"), ConfigError);
  Json j2 = minimal_valid();
  j2["backends"]["m"]["kind"] = "mock:nonsense";
  CHECK_THROWS_AS(validate_config(config_from_json(j2, ".")), ConfigError);
  Json j3 = minimal_valid();
  j3["backends"]["h"] = Json{{"kind", "http"}};  // no base_url
  CHECK_THROWS_WITH_AS(validate_config(config_from_json(j3, ".")),
                       doctest::Contains("base_url"), ConfigError);
}

TEST_CASE("config hash ignores the workspace and tracks everything else") {
  Json a = minimal_valid();
  a["workspace"] = "/somewhere/a";
  Json b = minimal_valid();
  b["workspace"] = "/elsewhere/b";
  const std::string hash_a = config_hash(config_from_json(a, "."));
  CHECK(hash_a == config_hash(config_from_json(b, ".")));
  CHECK(hash_a.size() == 16);

  Json c = minimal_valid();
  c["seed"] = 7;
  CHECK(hash_a != config_hash(config_from_json(c, ".")));
  Json d = minimal_valid();
  d["languages"] = Json::array({"cy", "eu"});
  CHECK(hash_a != config_hash(config_from_json(d, ".")));
}

TEST_CASE("make_backend builds the configured implementation") {
  BackendSpec echo;
  echo.id = "e";
  echo.kind = "mock:echo";
  auto backend = make_backend(echo);
  CHECK(backend->id() == "e");
  CHECK(backend->deterministic());

  BackendSpec flaky = echo;
  flaky.flaky_failures = 2;
  auto wrapped = make_backend(flaky);
  GenerationRequest request;
  request.instruction = "Say something about picnics";
  CHECK_THROWS_AS(wrapped->generate(request), BackendError);
  CHECK_THROWS_AS(wrapped->generate(request), BackendError);
  CHECK(wrapped->generate(request).text ==
        request.instruction);  // echo shines through after the failures

  BackendSpec bogus;
  bogus.id = "b";
  bogus.kind = "smoke-signal";
  CHECK_THROWS_AS(make_backend(bogus), ConfigError);
}

TEST_CASE("load_config reads, merges, and validates from disk") {
  pftest::TempDir dir("cfg");
  const auto path = dir.path() / "config.json";

  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(load_config(path), doctest::Contains("config.json"), ConfigError);
  }
  SUBCASE("malformed json") {
    write_file_atomic(path, "{not json");
    CHECK_THROWS_AS(load_config(path), ConfigError);
  }
  SUBCASE("valid file resolves paths against its own directory") {
    Json j = minimal_valid();
    write_file_atomic(path, j.dump(2));
    const RunConfig config = load_config(path);
    CHECK(config.workspace == dir.path() / "ws");
    CHECK(config.seeds_file == (dir.path() / "seeds.jsonl").string());
  }
}

TEST_CASE("the built-in mock config is itself valid") {
  const Json j = default_mock_config_json("/tmp/ws", "/tmp/seeds.jsonl",
                                          pftest::test_data("langid_rules.jsonl"),
                                          {"de", "es", "cy"});
  const RunConfig config = config_from_json(j, "/tmp");
  CHECK_NOTHROW(validate_config(config));
  CHECK(config.seed == 42);
  CHECK(config.stage_backends.judge == "grader");
  CHECK(config.stage_backends.pairwise == "referee");
  CHECK(config.retry.sleep_scale == doctest::Approx(0.0));
  CHECK(config.languages == std::vector<std::string>{"de", "es", "cy"});
}
