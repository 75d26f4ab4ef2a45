#pragma once

#include <cstddef>
#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qualbench/detail/util.hpp"
#include "qualbench/errors.hpp"

namespace qualbench {

// On-disk layout:
//   <root>/dataset.json                  manifest, schema_version "1"
//   <root>/<paper-dir>/summary.txt       curated summary, findings excluded
//   <root>/<paper-dir>/raw_qa.jsonl      one RawQaPair per line
//   <root>/<paper-dir>/items.jsonl       one BenchmarkItem per line
// All files UTF-8.

struct QaResponse {
  std::string participant_id;
  std::string answer_text;

  friend bool operator==(const QaResponse&, const QaResponse&) = default;
};

struct RawQaPair {
  std::string question_id;
  std::string question_text;
  std::vector<QaResponse> responses;

  friend bool operator==(const RawQaPair&, const RawQaPair&) = default;
};

struct BenchmarkItem {
  int item_id = 0;  // positive, unique across the whole dataset
  std::string paper_id;
  std::string reference_passage;    // scored against
  std::string preceding_paragraph;  // generation context only
  std::vector<std::string> themes;
  std::vector<std::string> raw_qa_refs;  // question_ids in the owning paper
  int target_tokens = 0;

  friend bool operator==(const BenchmarkItem&, const BenchmarkItem&) = default;
};

struct PaperRecord {
  std::string paper_id;
  std::string title;
  std::string summary;
  std::vector<RawQaPair> raw_qa;
  std::vector<BenchmarkItem> items;

  const RawQaPair* find_question(std::string_view question_id) const {
    for (const auto& q : raw_qa) {
      if (q.question_id == question_id) return &q;
    }
    return nullptr;
  }

  friend bool operator==(const PaperRecord&, const PaperRecord&) = default;
};

struct Dataset {
  std::string schema_version = "1";
  std::vector<std::string> default_themes;  // substitute for items with no themes
  std::vector<PaperRecord> papers;

  std::size_t item_count() const {
    std::size_t n = 0;
    for (const auto& p : papers) n += p.items.size();
    return n;
  }

  const PaperRecord* find_paper(std::string_view paper_id) const {
    for (const auto& p : papers) {
      if (p.paper_id == paper_id) return &p;
    }
    return nullptr;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class Severity { error, warning };

struct ValidationIssue {
  Severity severity = Severity::error;
  std::string code;      // stable machine-readable identifier
  std::string location;  // e.g. "paper 'p1' item 7"
  std::string message;

  friend bool operator==(const ValidationIssue&, const ValidationIssue&) = default;
};

inline const char* to_string(Severity s) {
  return s == Severity::error ? "error" : "warning";
}

// ---------------------------------------------------------------------------
// JSON conversion

inline void to_json(nlohmann::json& j, const QaResponse& r) {
  j = {{"participant_id", r.participant_id}, {"answer_text", r.answer_text}};
}

inline void from_json(const nlohmann::json& j, QaResponse& r) {
  j.at("participant_id").get_to(r.participant_id);
  j.at("answer_text").get_to(r.answer_text);
}

inline void to_json(nlohmann::json& j, const RawQaPair& q) {
  j = {{"question_id", q.question_id},
       {"question_text", q.question_text},
       {"responses", q.responses}};
}

inline void from_json(const nlohmann::json& j, RawQaPair& q) {
  j.at("question_id").get_to(q.question_id);
  j.at("question_text").get_to(q.question_text);
  j.at("responses").get_to(q.responses);
}

inline void to_json(nlohmann::json& j, const BenchmarkItem& it) {
  j = {{"item_id", it.item_id},
       {"paper_id", it.paper_id},
       {"reference_passage", it.reference_passage},
       {"preceding_paragraph", it.preceding_paragraph},
       {"themes", it.themes},
       {"raw_qa_refs", it.raw_qa_refs},
       {"target_tokens", it.target_tokens}};
}

inline void from_json(const nlohmann::json& j, BenchmarkItem& it) {
  j.at("item_id").get_to(it.item_id);
  j.at("paper_id").get_to(it.paper_id);
  j.at("reference_passage").get_to(it.reference_passage);
  j.at("preceding_paragraph").get_to(it.preceding_paragraph);
  j.at("themes").get_to(it.themes);
  j.at("raw_qa_refs").get_to(it.raw_qa_refs);
  j.at("target_tokens").get_to(it.target_tokens);
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

inline void add_issue(std::vector<ValidationIssue>& out, Severity sev, std::string code,
                      std::string location, std::string message) {
  out.push_back(ValidationIssue{sev, std::move(code), std::move(location), std::move(message)});
}

}  // namespace detail

/// Checks every dataset invariant. Returns an empty list iff the dataset is
/// fully valid; issues carry severity and a human-readable location.
inline std::vector<ValidationIssue> validate_dataset(const Dataset& d) {
  using detail::add_issue;
  std::vector<ValidationIssue> issues;

  if (d.schema_version != "1") {
    add_issue(issues, Severity::error, "unsupported_schema_version", "dataset",
              "schema_version '" + d.schema_version + "' is not supported (expected \"1\")");
  }
  if (d.papers.empty()) {
    add_issue(issues, Severity::error, "no_papers", "dataset", "dataset contains no papers");
    return issues;
  }
  if (d.item_count() == 0) {
    add_issue(issues, Severity::error, "no_items", "dataset", "dataset contains no items");
  }

  std::vector<int> seen_item_ids;
  std::vector<std::string> seen_paper_ids;

  for (const auto& paper : d.papers) {
    const std::string ploc = "paper '" + paper.paper_id + "'";

    if (paper.paper_id.empty()) {
      add_issue(issues, Severity::error, "empty_paper_id", ploc, "paper_id must be non-empty");
    }
    for (const auto& seen : seen_paper_ids) {
      if (seen == paper.paper_id) {
        add_issue(issues, Severity::error, "duplicate_paper_id", ploc,
                  "paper_id '" + paper.paper_id + "' appears more than once");
      }
    }
    seen_paper_ids.push_back(paper.paper_id);

    if (detail::trim(paper.summary).empty()) {
      add_issue(issues, Severity::error, "empty_summary", ploc, "summary must be non-empty");
    }

    std::vector<std::string> seen_qids;
    for (const auto& q : paper.raw_qa) {
      const std::string qloc = ploc + " question '" + q.question_id + "'";
      if (detail::trim(q.question_text).empty()) {
        add_issue(issues, Severity::error, "empty_question_text", qloc,
                  "question_text must be non-empty");
      }
      for (const auto& seen : seen_qids) {
        if (seen == q.question_id) {
          add_issue(issues, Severity::error, "duplicate_question_id", qloc,
                    "question_id '" + q.question_id + "' appears more than once in this paper");
        }
      }
      seen_qids.push_back(q.question_id);

      std::vector<std::string> seen_pids;
      for (const auto& r : q.responses) {
        for (const auto& seen : seen_pids) {
          if (seen == r.participant_id) {
            add_issue(issues, Severity::error, "duplicate_participant_id", qloc,
                      "participant_id '" + r.participant_id + "' appears more than once");
          }
        }
        seen_pids.push_back(r.participant_id);
      }
    }

    for (const auto& item : paper.items) {
      const std::string iloc = ploc + " item " + std::to_string(item.item_id);

      if (item.item_id <= 0) {
        add_issue(issues, Severity::error, "nonpositive_item_id", iloc,
                  "item_id must be a positive integer");
      }
      for (int seen : seen_item_ids) {
        if (seen == item.item_id) {
          add_issue(issues, Severity::error, "duplicate_item_id", iloc,
                    "item_id " + std::to_string(item.item_id) + " appears more than once");
        }
      }
      seen_item_ids.push_back(item.item_id);

      if (item.paper_id != paper.paper_id) {
        add_issue(issues, Severity::error, "paper_id_mismatch", iloc,
                  "item paper_id '" + item.paper_id + "' does not match owning paper '" +
                      paper.paper_id + "'");
      }
      if (detail::trim(item.reference_passage).empty()) {
        add_issue(issues, Severity::error, "empty_reference_passage", iloc,
                  "reference_passage must be non-empty");
      } else if (item.reference_passage == item.preceding_paragraph) {
        add_issue(issues, Severity::error, "reference_equals_preceding", iloc,
                  "reference_passage must differ from preceding_paragraph");
      }
      if (item.preceding_paragraph.empty()) {
        add_issue(issues, Severity::warning, "empty_preceding_paragraph", iloc,
                  "preceding_paragraph is empty (allowed only for the first passage of a paper)");
      }
      if (item.themes.empty() && d.default_themes.empty()) {
        add_issue(issues, Severity::warning, "empty_themes", iloc,
                  "item has no themes and the dataset declares no default_themes");
      }
      for (const auto& theme : item.themes) {
        if (detail::trim(theme).empty()) {
          add_issue(issues, Severity::error, "empty_theme", iloc, "themes must be non-empty strings");
        }
      }
      if (item.raw_qa_refs.empty()) {
        add_issue(issues, Severity::error, "empty_raw_qa_refs", iloc,
                  "raw_qa_refs must list at least one question_id");
      }
      for (const auto& ref : item.raw_qa_refs) {
        if (paper.find_question(ref) == nullptr) {
          add_issue(issues, Severity::error, "dangling_raw_qa_ref", iloc,
                    "item " + std::to_string(item.item_id) + " references question_id '" + ref +
                        "' which is not in the paper's raw_qa");
        }
      }
      if (item.target_tokens <= 0) {
        add_issue(issues, Severity::error, "nonpositive_target_tokens", iloc,
                  "target_tokens must be positive");
      }
    }
  }
  return issues;
}

inline bool has_errors(const std::vector<ValidationIssue>& issues) {
  for (const auto& i : issues) {
    if (i.severity == Severity::error) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Loading / saving

namespace detail {

inline nlohmann::json parse_json_or_throw(const std::string& text, const std::string& where) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaViolation(where + ": " + e.what());
  }
}

template <typename T>
inline T from_json_or_throw(const nlohmann::json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaViolation(where + ": " + e.what());
  }
}

template <typename T>
inline std::vector<T> read_jsonl(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw MissingFile("missing file: " + path.string());
  }
  std::vector<T> out;
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path.filename().string() + " line " + std::to_string(lineno);
    out.push_back(from_json_or_throw<T>(parse_json_or_throw(line, where), where));
  }
  return out;
}

// Maps a validation failure onto the loader's error taxonomy.
[[noreturn]] inline void throw_for_issue(const ValidationIssue& issue) {
  const std::string msg = issue.location + ": " + issue.message;
  if (issue.code == "duplicate_item_id" || issue.code == "duplicate_question_id" ||
      issue.code == "duplicate_participant_id" || issue.code == "duplicate_paper_id") {
    throw DuplicateId(msg);
  }
  if (issue.code == "dangling_raw_qa_ref") {
    throw DanglingReference(msg);
  }
  throw SchemaViolation(msg);
}

}  // namespace detail

/// Loads and fully validates a dataset directory. Error-severity issues are
/// converted to exceptions; warnings are tolerated.
inline Dataset load_dataset(const std::filesystem::path& root) {
  const auto manifest_path = root / "dataset.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw MissingFile("no dataset manifest at " + manifest_path.string());
  }
  const auto manifest =
      detail::parse_json_or_throw(detail::read_text_file(manifest_path), "dataset.json");

  Dataset ds;
  if (!manifest.contains("schema_version") || !manifest["schema_version"].is_string()) {
    throw SchemaViolation("dataset.json: schema_version must be a string");
  }
  ds.schema_version = manifest["schema_version"].get<std::string>();
  if (ds.schema_version != "1") {
    throw SchemaViolation("dataset.json: unsupported schema_version '" + ds.schema_version + "'");
  }
  if (manifest.contains("default_themes")) {
    ds.default_themes =
        detail::from_json_or_throw<std::vector<std::string>>(manifest["default_themes"],
                                                             "dataset.json default_themes");
  }
  if (!manifest.contains("papers") || !manifest["papers"].is_array()) {
    throw SchemaViolation("dataset.json: papers must be an array");
  }

  for (const auto& entry : manifest["papers"]) {
    if (!entry.is_object() || !entry.contains("paper_id")) {
      throw SchemaViolation("dataset.json: each paper entry needs a paper_id");
    }
    PaperRecord paper;
    paper.paper_id = detail::from_json_or_throw<std::string>(entry["paper_id"],
                                                             "dataset.json paper_id");
    if (entry.contains("title")) {
      paper.title = detail::from_json_or_throw<std::string>(entry["title"], "dataset.json title");
    }
    const std::string dir =
        entry.contains("dir")
            ? detail::from_json_or_throw<std::string>(entry["dir"], "dataset.json dir")
            : paper.paper_id;
    const auto paper_dir = root / dir;

    const auto summary_path = paper_dir / "summary.txt";
    if (!std::filesystem::exists(summary_path)) {
      throw MissingFile("missing file: " + summary_path.string());
    }
    paper.summary = detail::read_text_file(summary_path);
    paper.raw_qa = detail::read_jsonl<RawQaPair>(paper_dir / "raw_qa.jsonl");
    paper.items = detail::read_jsonl<BenchmarkItem>(paper_dir / "items.jsonl");
    ds.papers.push_back(std::move(paper));
  }

  const auto issues = validate_dataset(ds);
  for (const auto& issue : issues) {
    if (issue.severity == Severity::error) {
      detail::throw_for_issue(issue);
    }
  }
  return ds;
}

/// Writes the directory layout read by load_dataset. Performs no validation,
/// so invalid in-memory datasets can be persisted for tooling and tests.
inline void save_dataset(const Dataset& ds, const std::filesystem::path& root) {
  std::filesystem::create_directories(root);

  nlohmann::json manifest;
  manifest["schema_version"] = ds.schema_version;
  if (!ds.default_themes.empty()) {
    manifest["default_themes"] = ds.default_themes;
  }
  auto papers = nlohmann::json::array();
  for (const auto& paper : ds.papers) {
    papers.push_back({{"paper_id", paper.paper_id}, {"title", paper.title}});
  }
  manifest["papers"] = papers;
  detail::write_text_file(root / "dataset.json", manifest.dump(2) + "\n");

  for (const auto& paper : ds.papers) {
    const auto dir = root / paper.paper_id;
    std::filesystem::create_directories(dir);
    detail::write_text_file(dir / "summary.txt", paper.summary);

    std::string qa_lines;
    for (const auto& q : paper.raw_qa) {
      qa_lines += nlohmann::json(q).dump();
      qa_lines += '\n';
    }
    detail::write_text_file(dir / "raw_qa.jsonl", qa_lines);

    std::string item_lines;
    for (const auto& item : paper.items) {
      item_lines += nlohmann::json(item).dump();
      item_lines += '\n';
    }
    detail::write_text_file(dir / "items.jsonl", item_lines);
  }
}

}  // namespace qualbench
