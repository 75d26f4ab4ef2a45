#include "qualbench/reporter.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "qualbench/detail/util.hpp"
#include "test_util.hpp"

using namespace qualbench;
namespace fs = std::filesystem;

namespace {

ItemScore make_item(int id, const std::string& paper_id, std::vector<double> scores,
                    double threshold, bool with_generations = false) {
  ItemScore s;
  s.item_id = id;
  s.paper_id = paper_id;
  s.stats = iteration_stats(std::move(scores));
  s.flagged = s.stats.mean < threshold;
  if (with_generations) {
    for (std::size_t i = 0; i < s.stats.scores.size(); ++i) {
      GenerationRun g;
      g.item_id = id;
      g.iteration = static_cast<int>(i) + 1;
      g.prompt_hash = "deadbeef";
      g.output_text = "output " + std::to_string(id) + "/" + std::to_string(i + 1);
      g.prompt_tokens = 10;
      g.completion_tokens = 5;
      g.timestamp = "2026-01-01T00:00:00Z";
      s.generations.push_back(std::move(g));
    }
  }
  return s;
}

EvaluationReport make_report(bool with_generations = false) {
  EvaluationReport r;
  r.run_config.run_id = "r-test";
  r.run_config.iterations = 5;
  r.run_config.flag_threshold = 0.7;
  r.created_at = "2026-01-01T00:00:00Z";
  r.item_scores.push_back(make_item(1, "pA", {0.437, 0.437, 0.437, 0.437, 0.437}, 0.7,
                                    with_generations));
  r.item_scores.push_back(make_item(2, "pA", {0.503, 0.503, 0.503, 0.503, 0.503}, 0.7,
                                    with_generations));
  r.item_scores.push_back(make_item(3, "pB", {0.95, 0.95, 0.95, 0.95, 0.95}, 0.7,
                                    with_generations));
  r.per_paper_groups["pA"] = IdRange{1, 2};
  r.per_paper_groups["pB"] = IdRange{3, 3};
  r.aggregates = compute_aggregates(r.item_scores);
  r.run_stats = GatewayStats{15, 3, 0};
  return r;
}

EvaluationReport empty_report() {
  EvaluationReport r;
  r.run_config.run_id = "r-empty";
  return r;
}

}  // namespace

TEST(EmitTable, CsvSingleItemPerfectScores) {
  EvaluationReport r;
  r.run_config.run_id = "r1";
  r.run_config.iterations = 5;
  r.run_config.flag_threshold = 0.7;
  r.item_scores.push_back(make_item(1, "pX", {1.0, 1.0, 1.0, 1.0, 1.0}, 0.7));
  r.aggregates = compute_aggregates(r.item_scores);

  const std::string csv = emit_table(r, TableFormat::csv);
  EXPECT_EQ(csv,
            "item_id,paper_id,score_1,score_2,score_3,score_4,score_5,mean,sd,flagged\n"
            "1,pX,1.000000,1.000000,1.000000,1.000000,1.000000,1.000000,0.000000,false\n");
  EXPECT_NE(csv.find(",1.000000,0.000000,false"), std::string::npos);
}

TEST(EmitTable, CsvHeaderTracksIterationCount) {
  EvaluationReport r;
  r.run_config.iterations = 3;
  r.run_config.flag_threshold = 0.7;
  r.item_scores.push_back(make_item(4, "pY", {0.8, 0.9, 1.0}, 0.7));

  const std::string csv = emit_table(r, TableFormat::csv);
  EXPECT_NE(csv.find("item_id,paper_id,score_1,score_2,score_3,mean,sd,flagged\n"),
            std::string::npos);
  EXPECT_EQ(csv.find("score_4"), std::string::npos);
}

TEST(EmitTable, CsvQuotesAwkwardFields) {
  EXPECT_EQ(detail::csv_field("plain"), "plain");
  EXPECT_EQ(detail::csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(detail::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(detail::csv_field("line\nbreak"), "\"line\nbreak\"");

  EvaluationReport r;
  r.run_config.iterations = 2;
  r.item_scores.push_back(make_item(1, "p,odd", {0.5, 0.5}, 0.7));
  EXPECT_NE(emit_table(r, TableFormat::csv).find("1,\"p,odd\","), std::string::npos);
}

TEST(EmitTable, MarkdownLaysOutRowsAndRule) {
  const std::string md = emit_table(make_report(), TableFormat::markdown);
  EXPECT_NE(md.find("| item_id | paper_id | score_1 | score_2 | score_3 | score_4 | score_5 "
                    "| mean | sd | flagged |"),
            std::string::npos);
  EXPECT_NE(md.find("| --- | --- | --- | --- | --- | --- | --- | --- | --- | --- |"),
            std::string::npos);
  EXPECT_NE(md.find("| 1 | pA | 0.437000 | 0.437000 | 0.437000 | 0.437000 | 0.437000 | "
                    "0.437000 | 0.000000 | true |"),
            std::string::npos);
  EXPECT_NE(md.find("| 3 | pB |"), std::string::npos);
}

TEST(EmitTable, JsonRowsCarryRoundedScores) {
  const auto rows = nlohmann::json::parse(emit_table(make_report(), TableFormat::json));
  ASSERT_TRUE(rows.is_array());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0]["item_id"], 1);
  EXPECT_EQ(rows[0]["paper_id"], "pA");
  EXPECT_EQ(rows[0]["scores"].size(), 5u);
  EXPECT_DOUBLE_EQ(rows[0]["mean"].get<double>(), 0.437);
  EXPECT_DOUBLE_EQ(rows[0]["sd"].get<double>(), 0.0);
  EXPECT_TRUE(rows[0]["flagged"].get<bool>());
  EXPECT_FALSE(rows[2]["flagged"].get<bool>());
}

TEST(EmitTable, EmptyReportThrowsEverywhere) {
  const EvaluationReport r = empty_report();
  EXPECT_THROW(emit_table(r, TableFormat::csv), EmptyReport);
  EXPECT_THROW(emit_table(r, TableFormat::json), EmptyReport);
  EXPECT_THROW(emit_table(r, TableFormat::markdown), EmptyReport);
  EXPECT_THROW(emit_violin_data(r), EmptyReport);
  EXPECT_THROW(emit_strip_svg(r), EmptyReport);
}

TEST(EmitSummary, FlagsItemsBelowThreshold) {
  const std::string md = emit_summary(make_report());
  EXPECT_NE(md.find("# Evaluation summary"), std::string::npos);
  EXPECT_NE(md.find("Run `r-test`"), std::string::npos);
  EXPECT_NE(md.find("- Items scored: 3\n"), std::string::npos);
  EXPECT_NE(md.find("- Flagged items (mean < 0.700000): 2 — 1, 2\n"), std::string::npos);
  EXPECT_NE(md.find("- Items with score SD >= 0.020000: 0\n"), std::string::npos);
  EXPECT_NE(md.find("- Max SD: 0.000000\n"), std::string::npos);

  double expected_mean = (0.437 + 0.503 + 0.95) / 3.0;
  EXPECT_NE(md.find("- Overall mean similarity: " + detail::fmt6(expected_mean) + "\n"),
            std::string::npos);
}

TEST(EmitSummary, CountsDispersedItems) {
  EvaluationReport r = make_report();
  r.item_scores.push_back(make_item(9, "pB", {0.40, 0.80, 0.60, 0.50, 0.70}, 0.7));
  r.aggregates = compute_aggregates(r.item_scores);
  ASSERT_GE(r.item_scores.back().stats.sd, kSdDispersionThreshold);

  const std::string md = emit_summary(r);
  EXPECT_NE(md.find("- Items with score SD >= 0.020000: 1\n"), std::string::npos);
}

TEST(EmitSummary, EmptyReportSaysSo) {
  const std::string md = emit_summary(empty_report());
  EXPECT_NE(md.find("No items were scored.\n"), std::string::npos);
  EXPECT_EQ(md.find("Flagged"), std::string::npos);
}

TEST(EmitSummary, ListsErrors) {
  EvaluationReport r = make_report();
  r.errors.push_back(ItemError{7, "provider gave up"});
  r.errors.push_back(ItemError{11, "budget exceeded"});

  const std::string md = emit_summary(r);
  EXPECT_NE(md.find("## Errors"), std::string::npos);
  EXPECT_NE(md.find("- item 7: provider gave up\n"), std::string::npos);
  EXPECT_NE(md.find("- item 11: budget exceeded\n"), std::string::npos);
  EXPECT_EQ(emit_summary(make_report()).find("## Errors"), std::string::npos);
}

TEST(EmitViolin, CarriesGroupsAndRawScores) {
  const auto doc = nlohmann::json::parse(emit_violin_data(make_report()));
  ASSERT_TRUE(doc.contains("groups"));
  ASSERT_TRUE(doc.contains("items"));
  EXPECT_EQ(doc["groups"]["pA"]["first"], 1);
  EXPECT_EQ(doc["groups"]["pA"]["last"], 2);
  EXPECT_EQ(doc["groups"]["pB"]["first"], 3);
  EXPECT_EQ(doc["groups"]["pB"]["last"], 3);
  ASSERT_EQ(doc["items"].size(), 3u);
  EXPECT_EQ(doc["items"][0]["item_id"], 1);
  EXPECT_EQ(doc["items"][0]["paper_id"], "pA");
  ASSERT_EQ(doc["items"][0]["scores"].size(), 5u);
  EXPECT_DOUBLE_EQ(doc["items"][0]["scores"][0].get<double>(), 0.437);
}

TEST(EmitSvg, DrawsDotsThresholdAndFlags) {
  const EvaluationReport r = make_report();
  const std::string svg = emit_strip_svg(r);
  EXPECT_EQ(svg.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\"", 0), 0u);

  std::size_t circles = 0;
  for (std::size_t pos = svg.find("<circle"); pos != std::string::npos;
       pos = svg.find("<circle", pos + 1)) {
    ++circles;
  }
  EXPECT_EQ(circles, 15u);  // 3 items x 5 iteration dots

  EXPECT_NE(svg.find("stroke-dasharray=\"4 3\""), std::string::npos);
  EXPECT_NE(svg.find("stroke=\"#cc3333\" stroke-width=\"2\""), std::string::npos);  // flagged tick
  EXPECT_NE(svg.find("stroke=\"#222222\" stroke-width=\"2\""), std::string::npos);  // plain tick
  EXPECT_NE(svg.find(">1<"), std::string::npos);
  EXPECT_NE(svg.find(">3<"), std::string::npos);
}

TEST(EmitSvg, StableForAFixedReport) {
  const EvaluationReport r = make_report();
  EXPECT_EQ(emit_strip_svg(r), emit_strip_svg(r));
}

TEST(ReportJson, RoundTripPreservesEverything) {
  EvaluationReport r = make_report(true);
  r.errors.push_back(ItemError{5, "timed out"});
  QuestionSet qs;
  qs.item_id = 1;
  qs.questions = {"What did participants report?"};
  qs.raw_data_notes = "needs Q1";
  qs.transcript = "What did participants report?\nneeds Q1";
  r.question_sets.push_back(qs);

  const nlohmann::json j = report_to_json(r);
  EXPECT_EQ(j["schema_version"], "1");
  EXPECT_EQ(j["run_id"], "r-test");
  EXPECT_EQ(j["item_scores"][0]["generations"][0], "generations/item-0001-iter-1.json");

  const EvaluationReport back = report_from_json(j);
  EXPECT_EQ(back.run_config, r.run_config);
  EXPECT_EQ(back.created_at, r.created_at);
  ASSERT_EQ(back.item_scores.size(), r.item_scores.size());
  for (std::size_t i = 0; i < r.item_scores.size(); ++i) {
    EXPECT_EQ(back.item_scores[i].item_id, r.item_scores[i].item_id);
    EXPECT_EQ(back.item_scores[i].paper_id, r.item_scores[i].paper_id);
    EXPECT_EQ(back.item_scores[i].stats, r.item_scores[i].stats);
    EXPECT_EQ(back.item_scores[i].flagged, r.item_scores[i].flagged);
  }
  EXPECT_EQ(back.per_paper_groups.at("pA"), (IdRange{1, 2}));
  ASSERT_EQ(back.errors.size(), 1u);
  EXPECT_EQ(back.errors[0].item_id, 5);
  EXPECT_EQ(back.errors[0].message, "timed out");
  ASSERT_EQ(back.question_sets.size(), 1u);
  EXPECT_EQ(back.question_sets[0].questions, qs.questions);
  EXPECT_DOUBLE_EQ(back.aggregates.overall_mean, r.aggregates.overall_mean);
  EXPECT_EQ(back.run_stats.chat_calls, 15);
}

TEST(ReportJson, ReEmissionIsByteIdentical) {
  const EvaluationReport r = make_report();
  const EvaluationReport back = report_from_json(report_to_json(r));
  EXPECT_EQ(emit_table(back, TableFormat::csv), emit_table(r, TableFormat::csv));
  EXPECT_EQ(emit_violin_data(back), emit_violin_data(r));
  EXPECT_EQ(emit_summary(back), emit_summary(r));
  EXPECT_EQ(emit_strip_svg(back), emit_strip_svg(r));
}

TEST(ReportJson, MalformedDocumentsAreRejected) {
  EXPECT_THROW(report_from_json(nlohmann::json::object()), SchemaViolation);
  nlohmann::json j = report_to_json(make_report());
  j["item_scores"][0].erase("mean");
  EXPECT_THROW(report_from_json(j), SchemaViolation);
}

TEST(LoadReport, MissingAndBrokenFiles) {
  EXPECT_THROW(load_report("/nonexistent/report.json"), MissingFile);

  const fs::path dir = testutil::fresh_temp_dir("load-report");
  const fs::path bad = dir / "report.json";
  detail::write_text_file(bad, "{not json");
  EXPECT_THROW(load_report(bad), SchemaViolation);
  fs::remove_all(dir);
}

TEST(WriteArtifacts, ProducesTheFullSet) {
  const fs::path dir = testutil::fresh_temp_dir("artifacts") / "run-x";
  const EvaluationReport r = make_report(true);
  write_run_artifacts(r, dir);

  for (const char* name : {"report.json", "report.csv", "violin.json", "summary.md",
                           "scores.svg"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  EXPECT_TRUE(fs::exists(dir / "generations" / "item-0001-iter-1.json"));
  EXPECT_TRUE(fs::exists(dir / "generations" / "item-0003-iter-5.json"));

  const auto gen = nlohmann::json::parse(
      detail::read_text_file(dir / "generations" / "item-0001-iter-1.json"));
  EXPECT_EQ(gen["output_text"], "output 1/1");

  const EvaluationReport loaded = load_report(dir / "report.json");
  EXPECT_EQ(emit_table(loaded, TableFormat::csv),
            detail::read_text_file(dir / "report.csv"));
  EXPECT_EQ(emit_summary(loaded), detail::read_text_file(dir / "summary.md"));
  fs::remove_all(dir.parent_path());
}

TEST(WriteArtifacts, EmptyReportStillWritesSummary) {
  const fs::path dir = testutil::fresh_temp_dir("artifacts-empty") / "run-y";
  write_run_artifacts(empty_report(), dir);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "summary.md"));
  EXPECT_FALSE(fs::exists(dir / "report.csv"));
  fs::remove_all(dir.parent_path());
}

TEST(Formatting, SixDecimalsAndNoNegativeZero) {
  EXPECT_EQ(detail::fmt6(0.7), "0.700000");
  EXPECT_EQ(detail::fmt6(0.4370004), "0.437000");
  EXPECT_EQ(detail::fmt6(-1e-9), "0.000000");
  EXPECT_EQ(detail::fmt6(-0.0), "0.000000");
  EXPECT_EQ(detail::fmt6(-0.25), "-0.250000");
  EXPECT_DOUBLE_EQ(detail::round6(0.1234564), 0.123456);
  EXPECT_DOUBLE_EQ(detail::round6(0.9999996), 1.0);
  EXPECT_DOUBLE_EQ(detail::round6(-1e-9), 0.0);
}

TEST(Aggregates, RecomputedFromScores) {
  const EvaluationReport r = make_report();
  EXPECT_NEAR(r.aggregates.overall_mean, (0.437 + 0.503 + 0.95) / 3.0, 1e-12);
  EXPECT_NEAR(r.aggregates.flagged_share, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.aggregates.max_sd, 0.0);

  const Aggregates empty = compute_aggregates({});
  EXPECT_DOUBLE_EQ(empty.overall_mean, 0.0);
  EXPECT_DOUBLE_EQ(empty.flagged_share, 0.0);
}
