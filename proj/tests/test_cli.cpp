#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "qualbench/dataset.hpp"
#include "qualbench/detail/util.hpp"
#include "qualbench/reporter.hpp"
#include "test_util.hpp"

using namespace qualbench;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  std::string cmd;
  if (!env_prefix.empty()) cmd += env_prefix + " ";
  cmd += std::string(QUALBENCH_CLI_BIN) + " " + args + " 2>&1";

  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {};
  CliResult result;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) {
    result.output.append(buf, n);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string fixture_arg() { return "--dataset " + testutil::fixture_dir().string(); }

int count_lines(const std::string& text) {
  int lines = 0;
  for (char c : text) {
    if (c == '\n') ++lines;
  }
  return lines;
}

}  // namespace

TEST(CliValidate, FixturePassesWithExitZero) {
  const CliResult r = run_cli("validate " + fixture_arg());
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("OK: 3 papers, 32 items"), std::string::npos) << r.output;
}

TEST(CliValidate, DuplicateIdExitsOne) {
  Dataset ds = load_dataset(testutil::fixture_dir());
  ds.papers[1].items[0].item_id = 1;
  const fs::path dir = testutil::fresh_temp_dir("cli-bad-dataset");
  save_dataset(ds, dir);

  const CliResult r = run_cli("validate --dataset " + dir.string());
  EXPECT_EQ(r.exit_code, 1) << r.output;
  EXPECT_NE(r.output.find("appears more than once"), std::string::npos) << r.output;
  fs::remove_all(dir);
}

TEST(CliValidate, MissingPathExitsTwo) {
  const CliResult r = run_cli("validate --dataset /nonexistent/dataset");
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_NE(r.output.find("error:"), std::string::npos) << r.output;
}

TEST(CliRun, MockRunWritesTheArtifactSet) {
  const fs::path out = testutil::fresh_temp_dir("cli-run");
  const CliResult r =
      run_cli("run " + fixture_arg() + " --mock --out " + out.string() + " --run-id cli-run");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("run cli-run: 32 items scored"), std::string::npos) << r.output;

  const fs::path run_dir = out / "cli-run";
  for (const char* name :
       {"report.json", "report.csv", "violin.json", "summary.md", "scores.svg"}) {
    EXPECT_TRUE(fs::exists(run_dir / name)) << name;
  }
  EXPECT_TRUE(fs::exists(run_dir / "generations" / "item-0001-iter-1.json"));

  const std::string csv = detail::read_text_file(run_dir / "report.csv");
  EXPECT_EQ(count_lines(csv), 33);  // header + 32 items

  const auto report = nlohmann::json::parse(detail::read_text_file(run_dir / "report.json"));
  EXPECT_EQ(report["item_scores"].size(), 32u);
  EXPECT_EQ(report["run_stats"]["chat_calls"], 160);

  // Same run id again: the on-disk cache must satisfy every request.
  const CliResult again =
      run_cli("run " + fixture_arg() + " --mock --out " + out.string() + " --run-id cli-run");
  ASSERT_EQ(again.exit_code, 0) << again.output;
  const auto rerun = nlohmann::json::parse(detail::read_text_file(run_dir / "report.json"));
  EXPECT_EQ(rerun["run_stats"]["chat_calls"], 0);
  EXPECT_EQ(rerun["run_stats"]["embed_calls"], 0);
  fs::remove_all(out);
}

TEST(CliRun, IterationsFlagControlsScoreColumns) {
  const fs::path out = testutil::fresh_temp_dir("cli-it3");
  const CliResult r = run_cli("run " + fixture_arg() + " --mock --iterations 3 --out " +
                              out.string() + " --run-id it3");
  ASSERT_EQ(r.exit_code, 0) << r.output;

  const std::string csv = detail::read_text_file(out / "it3" / "report.csv");
  EXPECT_EQ(csv.rfind("item_id,paper_id,score_1,score_2,score_3,mean,sd,flagged\n", 0), 0u);
  EXPECT_EQ(csv.find("score_4"), std::string::npos);
  fs::remove_all(out);
}

TEST(CliRun, PaperFilterSelectsOnePaper) {
  const fs::path out = testutil::fresh_temp_dir("cli-p2");
  const CliResult r = run_cli("run " + fixture_arg() +
                              " --mock --paper p2-voice-kitchen --out " + out.string() +
                              " --run-id p2");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("run p2: 1 items scored"), std::string::npos) << r.output;

  const auto report =
      nlohmann::json::parse(detail::read_text_file(out / "p2" / "report.json"));
  EXPECT_EQ(report["item_scores"].size(), 1u);
  EXPECT_EQ(report["item_scores"][0]["item_id"], 28);
  EXPECT_EQ(report["per_paper_groups"].size(), 1u);
  EXPECT_EQ(report["per_paper_groups"]["p2-voice-kitchen"]["first"], 28);
  fs::remove_all(out);
}

TEST(CliRun, UnknownPaperFails) {
  const fs::path out = testutil::fresh_temp_dir("cli-nopaper");
  const CliResult r = run_cli("run " + fixture_arg() + " --mock --paper no-such-paper --out " +
                              out.string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("no paper with id 'no-such-paper'"), std::string::npos) << r.output;
  fs::remove_all(out);
}

TEST(CliRun, MissingDatasetFlagFails) {
  const CliResult r = run_cli("run --mock");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("--dataset is required"), std::string::npos) << r.output;
}

TEST(CliSummarize, MockOutputMatchesGolden) {
  const fs::path out = testutil::fresh_temp_dir("cli-summarize");
  const fs::path summary = out / "summary.txt";
  const CliResult r =
      run_cli("summarize --mock --input " +
              (testutil::fixture_dir() / "sample_paper.txt").string() + " --output " +
              summary.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("wrote " + summary.string()), std::string::npos) << r.output;
  testutil::expect_matches_golden("summarize_mock_output.txt",
                                  detail::read_text_file(summary));
  fs::remove_all(out);
}

TEST(CliSummarize, LiveProviderWithoutKeyFails) {
  const CliResult r =
      run_cli("summarize --input " + (testutil::fixture_dir() / "sample_paper.txt").string() +
                  " --base-url http://127.0.0.1:9/v1 --retry-cap 1",
              "env -u QUALBENCH_API_KEY");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("no API key configured"), std::string::npos) << r.output;
}

TEST(CliReport, PrintsTableToStdout) {
  const fs::path out = testutil::fresh_temp_dir("cli-report");
  ASSERT_EQ(run_cli("run " + fixture_arg() + " --mock --paper p2-voice-kitchen --out " +
                    out.string() + " --run-id rep")
                .exit_code,
            0);

  const fs::path run_dir = out / "rep";
  const CliResult csv = run_cli("report --run " + run_dir.string() + " --format csv");
  ASSERT_EQ(csv.exit_code, 0) << csv.output;
  EXPECT_EQ(csv.output, detail::read_text_file(run_dir / "report.csv"));

  const CliResult md = run_cli("report --run " + run_dir.string() + " --format markdown");
  ASSERT_EQ(md.exit_code, 0);
  EXPECT_NE(md.output.find("| item_id | paper_id |"), std::string::npos);

  const CliResult bad = run_cli("report --run " + run_dir.string() + " --format yaml");
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_NE(bad.output.find("unknown table format"), std::string::npos);
  fs::remove_all(out);
}

TEST(CliReport, ReemitsArtifactsElsewhere) {
  const fs::path out = testutil::fresh_temp_dir("cli-reemit");
  ASSERT_EQ(run_cli("run " + fixture_arg() + " --mock --paper p3-ar-campus-nav --out " +
                    out.string() + " --run-id src")
                .exit_code,
            0);

  const fs::path dest = out / "elsewhere";
  const CliResult r =
      run_cli("report --run " + (out / "src").string() + " --out " + dest.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  for (const char* name : {"summary.md", "report.csv", "violin.json", "scores.svg"}) {
    EXPECT_TRUE(fs::exists(dest / name)) << name;
  }
  EXPECT_EQ(detail::read_text_file(dest / "report.csv"),
            detail::read_text_file(out / "src" / "report.csv"));
  fs::remove_all(out);
}

TEST(CliReport, MissingRunExitsTwo) {
  const CliResult r = run_cli("report --run /nonexistent/run --format csv");
  EXPECT_EQ(r.exit_code, 2);
}

TEST(CliConfig, FileSuppliesDefaultsAndFlagsOverride) {
  const fs::path out = testutil::fresh_temp_dir("cli-config");
  const fs::path cfg_path = out / "qualbench.json";
  const nlohmann::json cfg = {{"dataset", testutil::fixture_dir().string()},
                              {"mock", true},
                              {"iterations", 3},
                              {"out", out.string()},
                              {"paper", "p2-voice-kitchen"}};
  detail::write_text_file(cfg_path, cfg.dump(2) + "\n");

  ASSERT_EQ(run_cli("run --config " + cfg_path.string() + " --run-id from-config").exit_code, 0);
  const std::string from_config =
      detail::read_text_file(out / "from-config" / "report.csv");
  EXPECT_NE(from_config.find("score_3,mean"), std::string::npos);
  EXPECT_EQ(from_config.find("score_4"), std::string::npos);

  ASSERT_EQ(run_cli("run --config " + cfg_path.string() +
                    " --iterations 4 --run-id flag-wins")
                .exit_code,
            0);
  const std::string flag_wins = detail::read_text_file(out / "flag-wins" / "report.csv");
  EXPECT_NE(flag_wins.find("score_4,mean"), std::string::npos);
  fs::remove_all(out);
}
