// Runs the installed command-line binary end to end: exit codes, printed
// summaries, and flag plumbing. The binary path comes in via PF_CLI_PATH.

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "pforge/config.hpp"
#include "pforge/util.hpp"
#include "test_support.hpp"

using namespace pforge;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr, interleaved
};

CliResult run_cli(const std::string& args, const fs::path& scratch) {
  static std::atomic<int> counter{0};
  const fs::path out = scratch / ("cli-" + std::to_string(counter.fetch_add(1)) + ".out");
  const std::string command = std::string("\"") + PF_CLI_PATH + "\" " + args + " > \"" +
                              out.string() + "\" 2>&1";
  const int status = std::system(command.c_str());
  CliResult result;
  if (status >= 0 && WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  result.output = read_file_if_exists(out).value_or("");
  return result;
}

// Writes seeds plus a ready-to-run mock config; returns the config path.
fs::path write_cli_config(const fs::path& dir, std::size_t n_seeds,
                          const std::vector<std::string>& langs,
                          const std::function<void(Json&)>& mutate = {}) {
  write_file_atomic(dir / "seeds.jsonl", pftest::synthetic_seed_lines(n_seeds));
  Json j = default_mock_config_json(dir / "ws", dir / "seeds.jsonl",
                                    pftest::test_data("langid_rules.jsonl"), langs);
  j["fixed_clock"] = true;
  if (mutate) mutate(j);
  const fs::path path = dir / "config.json";
  write_file_atomic(path, j.dump(2) + "\n");
  return path;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("cli: validate-config reports the hash and rejects bad files") {
  pftest::TempDir tmp("cli-validate");
  const fs::path config = write_cli_config(tmp.path(), 2, {"de"});

  const CliResult ok = run_cli("validate-config --config " + quoted(config), tmp.path());
  CHECK(ok.exit_code == 0);
  CHECK(contains(ok.output, "config OK"));

  // A seed override must change the printed hash.
  const CliResult reseeded =
      run_cli("validate-config --seed 7 --config " + quoted(config), tmp.path());
  CHECK(reseeded.exit_code == 0);
  CHECK(reseeded.output != ok.output);

  const fs::path bad = tmp.path() / "bad.json";
  write_file_atomic(bad, "{\"v\": 2}\n");
  const CliResult rejected = run_cli("validate-config --config " + quoted(bad), tmp.path());
  CHECK(rejected.exit_code == 1);
  CHECK(contains(rejected.output, "config error"));

  const CliResult missing =
      run_cli("validate-config --config " + quoted(tmp.path() / "nope.json"), tmp.path());
  CHECK(missing.exit_code == 1);
}

TEST_CASE("cli: the full offline flow runs through every subcommand") {
  pftest::TempDir tmp("cli-flow");
  const fs::path config = write_cli_config(tmp.path(), 4, {"de", "es"});
  const std::string cfg = " --config " + quoted(config);

  const CliResult ingest = run_cli("ingest --dedup" + cfg, tmp.path());
  CHECK(ingest.exit_code == 0);
  CHECK(contains(ingest.output, "ingest: inputs=4 resumed=0 produced=4 dropped=0"));

  const CliResult translate = run_cli("run translate" + cfg, tmp.path());
  CHECK(translate.exit_code == 0);
  CHECK(contains(translate.output, "translate: inputs=8 resumed=0 produced=8"));

  const CliResult cultural = run_cli("run complete --variant cultural" + cfg, tmp.path());
  CHECK(cultural.exit_code == 0);
  CHECK(contains(cultural.output, "complete.cultural: inputs=8"));

  const CliResult difficulty =
      run_cli("run complete --variant difficulty" + cfg, tmp.path());
  CHECK(difficulty.exit_code == 0);

  const CliResult eval = run_cli("eval-data cultural difficulty" + cfg, tmp.path());
  CHECK(eval.exit_code == 0);
  CHECK(contains(eval.output, "dataset"));
  CHECK(contains(eval.output, "eval.cultural_vs_difficulty.json"));

  const CliResult judged = run_cli("judge cultural" + cfg, tmp.path());
  CHECK(judged.exit_code == 0);
  CHECK(contains(judged.output, "graded cultural:"));
  CHECK(contains(judged.output, "parse failures: 0"));

  const CliResult winrate =
      run_cli("winrate cultural difficulty --bootstrap 200" + cfg, tmp.path());
  CHECK(winrate.exit_code == 0);
  CHECK(contains(winrate.output, "win rate cultural vs difficulty"));

  const CliResult mixed = run_cli("mix" + cfg, tmp.path());
  CHECK(mixed.exit_code == 0);
  CHECK(contains(mixed.output, "mixture: 16 examples"));

  const CliResult report = run_cli("report" + cfg, tmp.path());
  CHECK(report.exit_code == 0);
  CHECK(contains(report.output, "\"datasets\""));
  CHECK(contains(report.output, "\"mixture\""));
}

TEST_CASE("cli: positional ingest input overrides the configured seeds") {
  pftest::TempDir tmp("cli-ingest-arg");
  const fs::path config = write_cli_config(tmp.path(), 2, {"de"});
  const fs::path other = tmp.path() / "other_seeds.jsonl";
  write_file_atomic(other,
                    "One handwritten seed line about canals and bridges.\n"
                    "One handwritten seed line about canals and bridges.\n"
                    "Another seed line about festivals in autumn rain.\n");
  const CliResult r = run_cli("ingest " + quoted(other) + " --dedup --config " +
                                  quoted(config),
                              tmp.path());
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "produced=2 dropped=1"));
}

TEST_CASE("cli: dry runs print estimates and leave the workspace untouched") {
  pftest::TempDir tmp("cli-dry");
  const fs::path config = write_cli_config(tmp.path(), 3, {"de"});
  const CliResult r = run_cli("run translate --dry-run --config " + quoted(config),
                              tmp.path());
  CHECK(r.exit_code == 0);
  CHECK(contains(r.output, "(dry run)"));
  CHECK_FALSE(fs::exists(tmp.path() / "ws" / "data" / "seed.en.jsonl"));
  CHECK_FALSE(fs::exists(tmp.path() / "ws" / "data" / "translated.de.jsonl"));
}

TEST_CASE("cli: failure classes map to distinct exit codes") {
  pftest::TempDir tmp("cli-errors");

  SUBCASE("an unknown stage name is a usage error") {
    const fs::path config = write_cli_config(tmp.path(), 2, {"de"});
    const CliResult r = run_cli("run fly --config " + quoted(config), tmp.path());
    CHECK(r.exit_code == 1);
    CHECK(contains(r.output, "config error"));
  }

  SUBCASE("evaluating an absent dataset is a data error") {
    const fs::path config = write_cli_config(tmp.path(), 2, {"de"});
    REQUIRE(run_cli("run complete --variant cultural --config " + quoted(config), tmp.path())
                .exit_code == 0);
    const CliResult r =
        run_cli("eval-data cultural missing --config " + quoted(config), tmp.path());
    CHECK(r.exit_code == 2);
    CHECK(contains(r.output, "data error"));

    const CliResult w =
        run_cli("winrate cultural naturalized --config " + quoted(config), tmp.path());
    CHECK(w.exit_code == 2);
  }

  SUBCASE("a backend that stays down exhausts retries and fails") {
    const fs::path config = write_cli_config(tmp.path(), 2, {"de"}, [](Json& j) {
      j["backends"]["xform"]["flaky_failures"] = 5;  // beats max_retries=2
    });
    const CliResult r = run_cli("run translate --config " + quoted(config), tmp.path());
    CHECK(r.exit_code == 3);
    CHECK(contains(r.output, "backend failure"));
  }
}
