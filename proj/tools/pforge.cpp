// pforge: multilingual prompt-pipeline driver.
//
// Subcommands: ingest, run <stage>, eval-data, judge, winrate, mix, report,
// validate-config. Exit codes: 0 success, 1 usage/config error, 2 data
// error, 3 backend failure.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pforge/config.hpp"
#include "pforge/errors.hpp"
#include "pforge/pipeline.hpp"
#include "pforge/transform.hpp"

namespace {

struct CommonFlags {
  std::string config_path = "config.json";
  std::vector<std::string> langs;
  std::optional<std::size_t> sample;
  std::optional<std::uint64_t> seed;
  bool strict = false;
  bool fixed_clock = false;
  bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Run configuration file")
      ->capture_default_str();
  cmd->add_option("--lang", flags.langs, "Restrict to these languages (repeatable)");
  cmd->add_option("--sample", flags.sample, "Cap inputs per language to a seeded subsample");
  cmd->add_option("--seed", flags.seed, "Override the configured RNG seed");
  cmd->add_flag("--strict", flags.strict, "Treat malformed dataset lines as errors");
  cmd->add_flag("--fixed-clock", flags.fixed_clock,
                "Pin timestamps to the epoch for byte-stable output");
  cmd->add_flag("--dry-run", flags.dry_run,
                "Render templates and count calls without contacting backends");
}

pforge::RunConfig load(const CommonFlags& flags) {
  pforge::RunConfig config = pforge::load_config(flags.config_path);
  if (flags.seed) {
    config.seed = *flags.seed;
    config.canonical["seed"] = *flags.seed;
  }
  if (flags.strict) {
    config.strict = true;
    config.canonical["strict"] = true;
  }
  if (flags.fixed_clock) {
    config.fixed_clock = true;
    config.canonical["fixed_clock"] = true;
  }
  if (flags.dry_run) {
    config.dry_run = true;
    config.canonical["dry_run"] = true;
  }
  return config;
}

pforge::RunOptions run_options(const CommonFlags& flags) {
  pforge::RunOptions options;
  options.languages = flags.langs;
  options.sample = flags.sample;
  options.dry_run = flags.dry_run;
  return options;
}

void print_counts(const std::string& step, const pforge::StepCounts& counts, bool dry_run) {
  std::printf("%s: inputs=%zu resumed=%zu produced=%zu dropped=%zu calls=%llu%s%s\n",
              step.c_str(), counts.inputs, counts.resumed, counts.produced, counts.dropped,
              static_cast<unsigned long long>(counts.calls),
              dry_run ? " (dry run)" : "",
              counts.interrupted ? " [interrupted: call budget exhausted]" : "");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multilingual prompt pipeline"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* cmd_ingest = app.add_subcommand("ingest", "Import and filter English seed prompts");
  add_common(cmd_ingest, flags);
  std::string ingest_input;
  bool dedup = false;
  cmd_ingest->add_option("input", ingest_input, "Seed file (overrides the configured one)");
  cmd_ingest->add_flag("--dedup", dedup, "Drop exact duplicate seed texts");

  auto* cmd_run = app.add_subcommand("run", "Run a pipeline stage");
  add_common(cmd_run, flags);
  std::string stage;
  std::string variant = "cultural";
  std::optional<std::uint64_t> call_budget;
  cmd_run
      ->add_option("stage", stage,
                   "translate | naturalize | culturalize | difficultify | complete")
      ->required();
  cmd_run->add_option("--variant", variant,
                      "Prompt variant to complete (complete stage only)");
  cmd_run->add_option("--call-budget", call_budget,
                      "Stop dispatching after this many backend calls (for tests)");

  auto* cmd_eval = app.add_subcommand("eval-data", "Metric report: candidate vs baseline");
  add_common(cmd_eval, flags);
  std::string candidate, baseline;
  cmd_eval->add_option("candidate", candidate, "Candidate pairs variant")->required();
  cmd_eval->add_option("baseline", baseline, "Baseline pairs variant")->required();

  auto* cmd_judge = app.add_subcommand("judge", "Grade a pairs dataset for quality/difficulty");
  add_common(cmd_judge, flags);
  std::string judge_variant;
  cmd_judge->add_option("variant", judge_variant, "Pairs variant to grade")->required();

  auto* cmd_winrate = app.add_subcommand("winrate", "Pairwise preference of two pairs datasets");
  add_common(cmd_winrate, flags);
  std::string set_x, set_y, mode = "general";
  std::size_t n_bootstrap = 10000;
  cmd_winrate->add_option("set_x", set_x, "Candidate pairs variant")->required();
  cmd_winrate->add_option("set_y", set_y, "Baseline pairs variant")->required();
  cmd_winrate->add_option("--mode", mode, "general | naturalness")->capture_default_str();
  cmd_winrate->add_option("--bootstrap", n_bootstrap, "Bootstrap resamples for the CI")
      ->capture_default_str();

  auto* cmd_mix = app.add_subcommand("mix", "Blend completed variants into the final mixture");
  add_common(cmd_mix, flags);

  auto* cmd_report = app.add_subcommand("report", "Summarize workspace datasets and reports");
  add_common(cmd_report, flags);

  auto* cmd_validate = app.add_subcommand("validate-config", "Check a config file and print its hash");
  add_common(cmd_validate, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_validate->parsed()) {
      const pforge::RunConfig config = load(flags);
      std::printf("config OK (hash %s)\n", pforge::config_hash(config).c_str());
      return 0;
    }

    pforge::RunConfig config = load(flags);
    if (cmd_ingest->parsed() && !ingest_input.empty()) {
      config.seeds_file = ingest_input;
      config.canonical["seeds_file"] = ingest_input;
    }
    pforge::Pipeline pipeline(std::move(config));

    if (cmd_ingest->parsed()) {
      const pforge::StepCounts counts = pipeline.ingest(dedup);
      print_counts("ingest", counts, flags.dry_run);
      return 0;
    }

    if (cmd_run->parsed()) {
      pforge::RunOptions options = run_options(flags);
      options.call_budget = call_budget;
      pforge::StepCounts counts;
      if (stage == "complete") {
        counts = pipeline.run_complete(variant, options);
        print_counts("complete." + variant, counts, flags.dry_run);
      } else {
        const pforge::TransformKind kind = pforge::transform_kind_from_string(stage);
        counts = pipeline.run_transform(kind, options);
        print_counts(stage, counts, flags.dry_run);
      }
      return 0;
    }

    if (cmd_eval->parsed()) {
      pipeline.eval_data(candidate, baseline);
      const auto text_path =
          pipeline.workspace().report_file("eval." + candidate + "_vs_" + baseline + ".txt");
      std::printf("%s", pforge::read_file(text_path).c_str());
      std::printf("reports: %s\n",
                  pipeline.workspace()
                      .report_file("eval." + candidate + "_vs_" + baseline + ".json")
                      .string()
                      .c_str());
      return 0;
    }

    if (cmd_judge->parsed()) {
      const pforge::Json report = pipeline.judge_dataset(judge_variant, run_options(flags));
      const auto& overall = report["overall"];
      std::printf("graded %s: prompt quality=%s difficulty=%s | pair quality=%s difficulty=%s "
                  "(parse failures: %zu)\n",
                  judge_variant.c_str(), overall["prompt_quality"].dump().c_str(),
                  overall["prompt_difficulty"].dump().c_str(),
                  overall["pair_quality"].dump().c_str(),
                  overall["pair_difficulty"].dump().c_str(),
                  overall["parse_failures"].get<std::size_t>());
      return 0;
    }

    if (cmd_winrate->parsed()) {
      const pforge::Json report = pipeline.winrate(set_x, set_y, mode, n_bootstrap);
      std::printf("win rate %s vs %s (%s): %.4f  CI95 [%.4f, %.4f]  n=%zu\n", set_x.c_str(),
                  set_y.c_str(), mode.c_str(), report["win_rate"].get<double>(),
                  report["ci95"][0].get<double>(), report["ci95"][1].get<double>(),
                  report["n"].get<std::size_t>());
      for (const auto& [lang, block] : report["per_language"].items()) {
        if (block.value("n", std::size_t{0}) == 0) continue;
        std::printf("  %s: %.4f  CI95 [%.4f, %.4f]  n=%zu\n", lang.c_str(),
                    block["win_rate"].get<double>(), block["ci95"][0].get<double>(),
                    block["ci95"][1].get<double>(), block["n"].get<std::size_t>());
      }
      return 0;
    }

    if (cmd_mix->parsed()) {
      const pforge::Json report = pipeline.mix();
      std::printf("%s", pforge::read_file(
                            pipeline.workspace().report_file("mixture_counts.txt"))
                            .c_str());
      std::printf("mixture: %zu examples -> %s\n", report["total"].get<std::size_t>(),
                  pipeline.workspace().mixture_file().string().c_str());
      return 0;
    }

    if (cmd_report->parsed()) {
      const pforge::Json summary = pipeline.report();
      std::printf("%s\n", summary.dump(2).c_str());
      return 0;
    }
  } catch (const pforge::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const pforge::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const pforge::GatewayFailure& e) {
    std::fprintf(stderr, "backend failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
