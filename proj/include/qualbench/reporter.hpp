#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "qualbench/detail/util.hpp"
#include "qualbench/errors.hpp"
#include "qualbench/evaluator.hpp"

namespace qualbench {

enum class TableFormat { csv, json, markdown };

// Items whose score SD reaches this level are called out in the summary as
// unusually dispersed across iterations.
inline constexpr double kSdDispersionThreshold = 0.02;

namespace detail {

// 6 decimal places everywhere a number is rendered; keeps emissions
// byte-stable and diffs quiet.
inline std::string fmt6(double v) { return format_fixed(v, 6); }

// Round to 6 places before handing a double to the JSON serializer, so the
// JSON table carries the same precision as the CSV.
inline double round6(double v) { return std::stod(fmt6(v)); }

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

}  // namespace detail

/// One row per scored item. Bit-stable for a fixed report: fixed 6-decimal
/// formatting, sorted JSON keys.
inline std::string emit_table(const EvaluationReport& r, TableFormat format) {
  if (r.item_scores.empty()) {
    throw EmptyReport("emit_table: report has no item scores");
  }
  const int iterations = r.run_config.iterations;

  if (format == TableFormat::json) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : r.item_scores) {
      nlohmann::json row;
      row["item_id"] = s.item_id;
      row["paper_id"] = s.paper_id;
      nlohmann::json scores = nlohmann::json::array();
      for (double v : s.stats.scores) scores.push_back(detail::round6(v));
      row["scores"] = scores;
      row["mean"] = detail::round6(s.stats.mean);
      row["sd"] = detail::round6(s.stats.sd);
      row["flagged"] = s.flagged;
      rows.push_back(row);
    }
    return rows.dump(2) + "\n";
  }

  std::string out;
  if (format == TableFormat::csv) {
    out += "item_id,paper_id";
    for (int i = 1; i <= iterations; ++i) out += ",score_" + std::to_string(i);
    out += ",mean,sd,flagged\n";
    for (const auto& s : r.item_scores) {
      out += std::to_string(s.item_id) + "," + detail::csv_field(s.paper_id);
      for (double v : s.stats.scores) out += "," + detail::fmt6(v);
      out += "," + detail::fmt6(s.stats.mean) + "," + detail::fmt6(s.stats.sd) + "," +
             (s.flagged ? "true" : "false") + "\n";
    }
    return out;
  }

  // markdown
  out += "| item_id | paper_id |";
  for (int i = 1; i <= iterations; ++i) out += " score_" + std::to_string(i) + " |";
  out += " mean | sd | flagged |\n";
  out += "| --- | --- |";
  for (int i = 0; i < iterations; ++i) out += " --- |";
  out += " --- | --- | --- |\n";
  for (const auto& s : r.item_scores) {
    out += "| " + std::to_string(s.item_id) + " | " + s.paper_id + " |";
    for (double v : s.stats.scores) out += " " + detail::fmt6(v) + " |";
    out += " " + detail::fmt6(s.stats.mean) + " | " + detail::fmt6(s.stats.sd) + " | " +
           (s.flagged ? "true" : "false") + " |\n";
  }
  return out;
}

inline void emit_table_file(const EvaluationReport& r, TableFormat format,
                            const std::filesystem::path& path) {
  detail::write_text_file(path, emit_table(r, format));
}

/// Plot-ready per-item raw score lists plus per-paper group boundaries,
/// enough for any external tool to draw a violin or strip plot.
inline std::string emit_violin_data(const EvaluationReport& r) {
  if (r.item_scores.empty()) {
    throw EmptyReport("emit_violin_data: report has no item scores");
  }
  nlohmann::json groups;
  for (const auto& [paper_id, range] : r.per_paper_groups) {
    groups[paper_id] = {{"first", range.first}, {"last", range.last}};
  }
  nlohmann::json items = nlohmann::json::array();
  for (const auto& s : r.item_scores) {
    nlohmann::json scores = nlohmann::json::array();
    for (double v : s.stats.scores) scores.push_back(detail::round6(v));
    items.push_back({{"item_id", s.item_id}, {"paper_id", s.paper_id}, {"scores", scores}});
  }
  const nlohmann::json doc = {{"groups", groups}, {"items", items}};
  return doc.dump(2) + "\n";
}

inline void emit_violin_file(const EvaluationReport& r, const std::filesystem::path& path) {
  detail::write_text_file(path, emit_violin_data(r));
}

/// Human-readable digest: aggregates, flagged items, iteration dispersion,
/// and per-item errors.
inline std::string emit_summary(const EvaluationReport& r) {
  std::string out = "# Evaluation summary\n\n";
  if (!r.run_config.run_id.empty()) {
    out += "Run `" + r.run_config.run_id + "`, model `" + r.run_config.model.model_name +
           "`, " + std::to_string(r.run_config.iterations) + " iterations per item.\n\n";
  }

  if (r.item_scores.empty()) {
    out += "No items were scored.\n";
  } else {
    std::vector<int> flagged_ids;
    int dispersed = 0;
    for (const auto& s : r.item_scores) {
      if (s.flagged) flagged_ids.push_back(s.item_id);
      if (s.stats.sd >= kSdDispersionThreshold) ++dispersed;
    }
    out += "- Items scored: " + std::to_string(r.item_scores.size()) + "\n";
    out += "- Overall mean similarity: " + detail::fmt6(r.aggregates.overall_mean) + "\n";
    out += "- Flagged items (mean < " + detail::fmt6(r.run_config.flag_threshold) +
           "): " + std::to_string(flagged_ids.size());
    if (!flagged_ids.empty()) {
      out += " —";
      for (std::size_t i = 0; i < flagged_ids.size(); ++i) {
        out += (i == 0 ? " " : ", ") + std::to_string(flagged_ids[i]);
      }
    }
    out += "\n";
    out += "- Items with score SD >= " + detail::fmt6(kSdDispersionThreshold) + ": " +
           std::to_string(dispersed) + "\n";
    out += "- Max SD: " + detail::fmt6(r.aggregates.max_sd) + "\n";
  }

  if (!r.errors.empty()) {
    out += "\n## Errors\n\n";
    for (const auto& e : r.errors) {
      out += "- item " + std::to_string(e.item_id) + ": " + e.message + "\n";
    }
  }
  return out;
}

/// Minimal strip plot: one column per item, a dot per iteration score, a
/// tick at the mean, a horizontal rule at the flag threshold.
inline std::string emit_strip_svg(const EvaluationReport& r) {
  if (r.item_scores.empty()) {
    throw EmptyReport("emit_strip_svg: report has no item scores");
  }
  const int n = static_cast<int>(r.item_scores.size());
  const int col_w = 22;
  const int left = 46;
  const int top = 14;
  const int plot_h = 240;
  const int bottom = 34;
  const int width = left + n * col_w + 12;
  const int height = top + plot_h + bottom;

  // Scores live in [-1, 1] but typically in [0, 1]; plot the [0, 1] band.
  const auto y_of = [&](double v) {
    const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    return top + plot_h * (1.0 - clamped);
  };
  const auto f2 = [](double v) { return detail::format_fixed(v, 2); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (double grid : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double y = y_of(grid);
    svg += "<line x1=\"" + std::to_string(left - 6) + "\" y1=\"" + f2(y) + "\" x2=\"" +
           std::to_string(width - 8) + "\" y2=\"" + f2(y) +
           "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"4\" y=\"" + f2(y + 4) + "\" font-size=\"10\" fill=\"#444444\">" +
           detail::format_fixed(grid, 2) + "</text>\n";
  }
  const double ty = y_of(r.run_config.flag_threshold);
  svg += "<line x1=\"" + std::to_string(left - 6) + "\" y1=\"" + f2(ty) + "\" x2=\"" +
         std::to_string(width - 8) + "\" y2=\"" + f2(ty) +
         "\" stroke=\"#cc3333\" stroke-dasharray=\"4 3\" stroke-width=\"1\"/>\n";

  int col = 0;
  std::string last_paper;
  for (const auto& s : r.item_scores) {
    const double x = left + col * col_w + col_w / 2.0;
    if (!last_paper.empty() && s.paper_id != last_paper) {
      const double bx = left + col * col_w;
      svg += "<line x1=\"" + f2(bx) + "\" y1=\"" + std::to_string(top) + "\" x2=\"" + f2(bx) +
             "\" y2=\"" + std::to_string(top + plot_h) +
             "\" stroke=\"#999999\" stroke-width=\"1\"/>\n";
    }
    last_paper = s.paper_id;
    for (double v : s.stats.scores) {
      svg += "<circle cx=\"" + f2(x) + "\" cy=\"" + f2(y_of(v)) +
             "\" r=\"2.5\" fill=\"#3366aa\" fill-opacity=\"0.55\"/>\n";
    }
    svg += "<line x1=\"" + f2(x - 6) + "\" y1=\"" + f2(y_of(s.stats.mean)) + "\" x2=\"" +
           f2(x + 6) + "\" y2=\"" + f2(y_of(s.stats.mean)) +
           "\" stroke=\"" + std::string(s.flagged ? "#cc3333" : "#222222") +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + f2(x) + "\" y=\"" + std::to_string(top + plot_h + 14) +
           "\" font-size=\"9\" text-anchor=\"middle\" fill=\"#444444\">" +
           std::to_string(s.item_id) + "</text>\n";
    ++col;
  }
  svg += "</svg>\n";
  return svg;
}

// ---------------------------------------------------------------------------
// report.json is the canonical machine-readable artifact. Every number in
// any other emission is recomputable from it.

inline nlohmann::json report_to_json(const EvaluationReport& r) {
  nlohmann::json j;
  j["schema_version"] = "1";
  j["run_id"] = r.run_config.run_id;
  j["created_at"] = r.created_at;
  j["run_config"] = r.run_config;

  nlohmann::json items = nlohmann::json::array();
  for (const auto& s : r.item_scores) {
    nlohmann::json item;
    item["item_id"] = s.item_id;
    item["paper_id"] = s.paper_id;
    item["scores"] = s.stats.scores;
    item["mean"] = s.stats.mean;
    item["sd"] = s.stats.sd;
    item["flagged"] = s.flagged;
    nlohmann::json refs = nlohmann::json::array();
    for (const auto& g : s.generations) {
      char name[64];
      std::snprintf(name, sizeof(name), "generations/item-%04d-iter-%d.json", g.item_id,
                    g.iteration);
      refs.push_back(name);
    }
    item["generations"] = refs;
    items.push_back(item);
  }
  j["item_scores"] = items;

  nlohmann::json groups;
  for (const auto& [paper_id, range] : r.per_paper_groups) {
    groups[paper_id] = {{"first", range.first}, {"last", range.last}};
  }
  j["per_paper_groups"] = groups;

  nlohmann::json errors = nlohmann::json::array();
  for (const auto& e : r.errors) {
    errors.push_back({{"item_id", e.item_id}, {"error", e.message}});
  }
  j["errors"] = errors;
  j["question_sets"] = r.question_sets;
  j["aggregates"] = {{"overall_mean", r.aggregates.overall_mean},
                     {"flagged_share", r.aggregates.flagged_share},
                     {"max_sd", r.aggregates.max_sd}};
  j["run_stats"] = r.run_stats;
  return j;
}

/// Rebuilds a report from report.json. Generation texts stay on disk; the
/// returned report carries scores and metadata, which is all re-emission
/// needs.
inline EvaluationReport report_from_json(const nlohmann::json& j) {
  EvaluationReport r;
  try {
    r.run_config = j.at("run_config").get<RunConfig>();
    r.created_at = j.value("created_at", "");
    for (const auto& item : j.at("item_scores")) {
      ItemScore s;
      s.item_id = item.at("item_id").get<int>();
      s.paper_id = item.at("paper_id").get<std::string>();
      s.stats.scores = item.at("scores").get<std::vector<double>>();
      s.stats.mean = item.at("mean").get<double>();
      s.stats.sd = item.at("sd").get<double>();
      s.flagged = item.at("flagged").get<bool>();
      r.item_scores.push_back(std::move(s));
    }
    if (j.contains("per_paper_groups")) {
      for (const auto& [paper_id, range] : j.at("per_paper_groups").items()) {
        r.per_paper_groups[paper_id] =
            IdRange{range.at("first").get<int>(), range.at("last").get<int>()};
      }
    }
    if (j.contains("errors")) {
      for (const auto& e : j.at("errors")) {
        r.errors.push_back(ItemError{e.value("item_id", 0), e.value("error", "")});
      }
    }
    if (j.contains("question_sets")) {
      j.at("question_sets").get_to(r.question_sets);
    }
    if (j.contains("aggregates")) {
      const auto& a = j.at("aggregates");
      r.aggregates.overall_mean = a.value("overall_mean", 0.0);
      r.aggregates.flagged_share = a.value("flagged_share", 0.0);
      r.aggregates.max_sd = a.value("max_sd", 0.0);
    }
    if (j.contains("run_stats")) {
      j.at("run_stats").get_to(r.run_stats);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaViolation(std::string("report.json: ") + e.what());
  }
  return r;
}

inline EvaluationReport load_report(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingFile("no report at " + path.string());
  }
  return report_from_json(
      detail::parse_json_or_throw(detail::read_text_file(path), path.string()));
}

/// Writes the full artifact set for a run:
///   report.json, report.csv, violin.json, summary.md, scores.svg,
///   generations/item-NNNN-iter-K.json
inline void write_run_artifacts(const EvaluationReport& r, const std::filesystem::path& run_dir) {
  std::filesystem::create_directories(run_dir);
  detail::write_text_file(run_dir / "report.json", report_to_json(r).dump(2) + "\n");
  detail::write_text_file(run_dir / "summary.md", emit_summary(r));
  if (!r.item_scores.empty()) {
    emit_table_file(r, TableFormat::csv, run_dir / "report.csv");
    emit_violin_file(r, run_dir / "violin.json");
    detail::write_text_file(run_dir / "scores.svg", emit_strip_svg(r));
    const auto gen_dir = run_dir / "generations";
    std::filesystem::create_directories(gen_dir);
    for (const auto& s : r.item_scores) {
      for (const auto& g : s.generations) {
        char name[64];
        std::snprintf(name, sizeof(name), "item-%04d-iter-%d.json", g.item_id, g.iteration);
        detail::write_text_file(gen_dir / name, nlohmann::json(g).dump(2) + "\n");
      }
    }
  }
}

}  // namespace qualbench
