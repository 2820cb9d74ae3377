#include "pforge/transform.hpp"

#include <vector>

#include "doctest.h"
#include "pforge/errors.hpp"
#include "pforge/rng.hpp"
#include "pforge/util.hpp"

using namespace pforge;

namespace {

const std::string kNow = "1970-01-01T00:00:00Z";

Gateway echo_gateway() {
  RetryPolicy policy;
  policy.sleep_scale = 0.0;
  return Gateway(std::make_shared<MockBackend>("mock", MockOptions{MockProfile::echo}), 4,
                 policy, 0);
}

PromptRecord seed() { return make_seed("s-en-000000", "en", "Plan a picnic", kNow); }

PromptRecord translated() {
  return derive_child(seed(), Stage::translated, "Plane ein Picknick", "mock", 0.3, kNow,
                      "t-de-000000", "de");
}

PromptRecord naturalized() {
  return derive_child(translated(), Stage::naturalized, "Plan doch ein Picknick", "mock", 0.3,
                      kNow, "n-de-000000");
}

// Replies with a queue of canned texts, for retry and fence tests.
class Scripted : public Backend {
 public:
  explicit Scripted(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  const std::string& id() const override { return id_; }
  bool deterministic() const override { return true; }
  GenerationResult generate(const GenerationRequest& request) override {
    GenerationResult r;
    r.backend_id = id_;
    r.text = calls_ < replies_.size() ? replies_[calls_] : replies_.back();
    ++calls_;
    seeds_.push_back(request.seed);
    return r;
  }
  std::size_t calls() const { return calls_; }
  const std::vector<std::uint64_t>& seeds() const { return seeds_; }

 private:
  std::string id_ = "scripted";
  std::vector<std::string> replies_;
  std::size_t calls_ = 0;
  std::vector<std::uint64_t> seeds_;
};

Gateway scripted_gateway(std::shared_ptr<Scripted> backend) {
  RetryPolicy policy;
  policy.sleep_scale = 0.0;
  return Gateway(std::move(backend), 4, policy, 0);
}

}  // namespace

TEST_CASE("kind conversions accept stage aliases") {
  CHECK(transform_kind_from_string("translate") == TransformKind::translate);
  CHECK(transform_kind_from_string("naturalize") == TransformKind::naturalize);
  CHECK(transform_kind_from_string("naturalness") == TransformKind::naturalize);
  CHECK(transform_kind_from_string("culturalize") == TransformKind::culturalize);
  CHECK(transform_kind_from_string("cultural") == TransformKind::culturalize);
  CHECK(transform_kind_from_string("difficultify") == TransformKind::difficultify);
  CHECK(transform_kind_from_string("difficulty") == TransformKind::difficultify);
  CHECK_THROWS_AS(transform_kind_from_string("bogus"), ConfigError);
}

TEST_CASE("stage mapping per kind") {
  CHECK(output_stage(TransformKind::translate) == Stage::translated);
  CHECK(required_input_stage(TransformKind::translate) == Stage::seed);
  CHECK(output_stage(TransformKind::naturalize) == Stage::naturalized);
  CHECK(required_input_stage(TransformKind::naturalize) == Stage::translated);
  CHECK(output_stage(TransformKind::culturalize) == Stage::cultural);
  CHECK(required_input_stage(TransformKind::culturalize) == Stage::naturalized);
  CHECK(output_stage(TransformKind::difficultify) == Stage::difficulty);
  CHECK(required_input_stage(TransformKind::difficultify) == Stage::naturalized);
}

TEST_CASE("translate instruction renders the full template") {
  Transformer t(TransformKind::translate, "de");
  CHECK(t.build_instruction(seed()) ==
        "Translate the following into German, output only the translation.\n"
        "Here is the prompt to translate: Plan a picnic");
}

TEST_CASE("non-translate instructions use the record's own language") {
  Transformer nat(TransformKind::naturalize);
  const std::string instruction = nat.build_instruction(translated());
  CHECK(contains(instruction, "German"));
  CHECK(contains(instruction, "Here is the prompt to naturalize: Plane ein Picknick"));

  Transformer cult(TransformKind::culturalize);
  CHECK(contains(cult.build_instruction(naturalized()),
                 "Here is the prompt to adapt: Plan doch ein Picknick"));

  Transformer diff(TransformKind::difficultify);
  CHECK(contains(diff.build_instruction(naturalized()),
                 "Here is the prompt to complexify: Plan doch ein Picknick"));
}

TEST_CASE("translate requires a target language") {
  CHECK_THROWS_AS(Transformer(TransformKind::translate), ConfigError);
  CHECK_THROWS_AS(Transformer(TransformKind::translate, "xx"), ConfigError);
  CHECK_NOTHROW(Transformer(TransformKind::naturalize));
}

TEST_CASE("apply enforces the input stage") {
  Gateway gateway = echo_gateway();
  // Cultural/difficulty operators reject merely-translated input.
  CHECK_THROWS_AS(Transformer(TransformKind::culturalize)
                      .apply(translated(), gateway, 0.3, kNow, "c-de-000000"),
                  DataError);
  CHECK_THROWS_AS(Transformer(TransformKind::difficultify)
                      .apply(translated(), gateway, 0.3, kNow, "d-de-000000"),
                  DataError);
  CHECK_THROWS_AS(Transformer(TransformKind::naturalize)
                      .apply(seed(), gateway, 0.3, kNow, "n-de-000000"),
                  DataError);
  CHECK_THROWS_AS(Transformer(TransformKind::translate, "de")
                      .apply(translated(), gateway, 0.3, kNow, "t-de-000001"),
                  DataError);
}

TEST_CASE("apply derives a child with lineage and provenance") {
  Gateway gateway = echo_gateway();
  const PromptRecord child =
      Transformer(TransformKind::naturalize).apply(translated(), gateway, 0.3, kNow,
                                                   "n-de-000000");
  CHECK(child.id == "n-de-000000");
  CHECK(child.stage == Stage::naturalized);
  CHECK(child.lang == "de");
  CHECK(child.parent_id.value() == "t-de-000000");
  CHECK(child.seed_id == "s-en-000000");
  CHECK(child.backend_id.value() == "mock");
  CHECK(child.text == "Plane ein Picknick");  // echo mock returns the embedded prompt
}

TEST_CASE("per-record generation seeds are deterministic and id-bound") {
  auto backend = std::make_shared<Scripted>(std::vector<std::string>{"ok text"});
  Gateway gateway = scripted_gateway(backend);
  Transformer nat(TransformKind::naturalize);
  nat.apply(translated(), gateway, 0.3, kNow, "n-de-000000");
  nat.apply(translated(), gateway, 0.3, kNow, "n-de-000000");
  nat.apply(translated(), gateway, 0.3, kNow, "n-de-000777");
  REQUIRE(backend->seeds().size() == 3);
  CHECK(backend->seeds()[0] == backend->seeds()[1]);
  CHECK(backend->seeds()[0] != backend->seeds()[2]);
}

TEST_CASE("an enclosing code fence is stripped") {
  auto backend = std::make_shared<Scripted>(
      std::vector<std::string>{"```\nDer eigentliche Text\n```"});
  Gateway gateway = scripted_gateway(backend);
  const PromptRecord child = Transformer(TransformKind::naturalize)
                                 .apply(translated(), gateway, 0.3, kNow, "n-de-000000");
  CHECK(child.text == "Der eigentliche Text");

  // A fence in the middle of a longer reply is left alone.
  auto partial = std::make_shared<Scripted>(
      std::vector<std::string>{"Vorspann\n```\ncode\n```\nAbspann"});
  Gateway gateway2 = scripted_gateway(partial);
  const PromptRecord kept = Transformer(TransformKind::naturalize)
                                .apply(translated(), gateway2, 0.3, kNow, "n-de-000001");
  CHECK(kept.text == "Vorspann\n```\ncode\n```\nAbspann");
}

TEST_CASE("empty reply triggers exactly one retry with a suffixed id") {
  auto backend =
      std::make_shared<Scripted>(std::vector<std::string>{"", "Zweiter Versuch"});
  Gateway gateway = scripted_gateway(backend);
  const PromptRecord child = Transformer(TransformKind::naturalize)
                                 .apply(translated(), gateway, 0.3, kNow, "n-de-000000");
  CHECK(backend->calls() == 2);
  CHECK(child.id == "n-de-000000r1");
  CHECK(child.text == "Zweiter Versuch");
  // Retry draws a fresh generation seed.
  CHECK(backend->seeds()[0] != backend->seeds()[1]);

  SUBCASE("still-empty reply is a data error") {
    auto hopeless = std::make_shared<Scripted>(std::vector<std::string>{"", "```\n\n```"});
    Gateway gateway2 = scripted_gateway(hopeless);
    CHECK_THROWS_AS(Transformer(TransformKind::naturalize)
                        .apply(translated(), gateway2, 0.3, kNow, "n-de-000000"),
                    DataError);
  }
}

TEST_CASE("completion uses the bare prompt text as instruction") {
  const PromptRecord prompt = naturalized();
  CHECK(completion_instruction(prompt) == prompt.text);

  auto backend = std::make_shared<Scripted>(std::vector<std::string>{"Antwort hier"});
  Gateway gateway = scripted_gateway(backend);
  const CompletionRecord completion = complete_prompt(prompt, gateway, 0.3);
  CHECK(completion.id == "y-n-de-000000");
  CHECK(completion.prompt_id == "n-de-000000");
  CHECK(completion.lang == "de");
  CHECK(completion.text == "Antwort hier");
  CHECK(completion.temperature == doctest::Approx(0.3));
}

TEST_CASE("random stage walks only ever produce legal lineages") {
  // Property: whatever order operators are attempted in, a record at
  // cultural/difficulty stage always has a naturalized parent.
  Gateway gateway = echo_gateway();
  Rng rng(99);
  const TransformKind kinds[] = {TransformKind::translate, TransformKind::naturalize,
                                 TransformKind::culturalize, TransformKind::difficultify};
  for (int round = 0; round < 200; ++round) {
    PromptRecord current = seed();
    RecordStore store;
    store.insert(current);
    for (int hop = 0; hop < 4; ++hop) {
      const TransformKind kind = kinds[rng.below(4)];
      Transformer op(kind, kind == TransformKind::translate ? "de" : "");
      const std::string id = "x-de-" + std::to_string(round) + "-" + std::to_string(hop);
      if (required_input_stage(kind) != current.stage) {
        CHECK_THROWS_AS(op.apply(current, gateway, 0.3, kNow, id), DataError);
        continue;
      }
      current = op.apply(current, gateway, 0.3, kNow, id);
      store.insert(current);
      CHECK_NOTHROW(store.validate_lineage(current));
      if (current.stage == Stage::cultural || current.stage == Stage::difficulty) {
        const PromptRecord& parent = store.require(current.parent_id.value());
        CHECK(parent.stage == Stage::naturalized);
      }
    }
  }
}
