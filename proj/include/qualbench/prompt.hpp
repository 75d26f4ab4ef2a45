#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qualbench/dataset.hpp"
#include "qualbench/detail/util.hpp"
#include "qualbench/errors.hpp"

namespace qualbench {

/// A text template with named `{{slot}}` markers. Rendering substitutes every
/// marker with its bound value; bound values are inserted verbatim and never
/// re-scanned, so user text containing braces cannot corrupt the render.
struct PromptTemplate {
  std::string name;
  std::string template_text;
  std::vector<std::string> required_slots;

  std::string render(const std::map<std::string, std::string>& slots) const {
    for (const auto& slot : required_slots) {
      if (slots.find(slot) == slots.end()) {
        throw MissingSlot("template '" + name + "': required slot '" + slot + "' is not bound");
      }
    }
    std::string out;
    out.reserve(template_text.size() * 2);
    std::size_t i = 0;
    while (i < template_text.size()) {
      const auto open = template_text.find("{{", i);
      if (open == std::string::npos) {
        out.append(template_text, i, std::string::npos);
        break;
      }
      out.append(template_text, i, open - i);
      const auto close = template_text.find("}}", open + 2);
      if (close == std::string::npos) {
        throw MissingSlot("template '" + name + "': unterminated slot marker");
      }
      const std::string key = detail::trim(template_text.substr(open + 2, close - open - 2));
      const auto it = slots.find(key);
      if (it == slots.end()) {
        throw MissingSlot("template '" + name + "': no binding for slot '" + key + "'");
      }
      out += it->second;
      i = close + 2;
    }
    return out;
  }
};

namespace detail {

inline void check_template(const PromptTemplate& t) {
  for (const auto& slot : t.required_slots) {
    if (t.template_text.find("{{" + slot + "}}") == std::string::npos) {
      throw MissingSlot("template '" + t.name + "': required slot '" + slot +
                        "' does not appear in the template text");
    }
  }
}

}  // namespace detail

/// The three templates of the pipeline. Shipped as text assets under
/// prompts/ (analysis.txt, summary.txt, question.txt); `builtin()` carries
/// byte-identical copies so the library works without the asset files.
struct PromptLibrary {
  PromptTemplate analysis;
  PromptTemplate paper_summary;
  PromptTemplate question_generator;

  static PromptLibrary builtin();
  static PromptLibrary from_dir(const std::filesystem::path& dir);

  void check() const {
    detail::check_template(analysis);
    detail::check_template(paper_summary);
    detail::check_template(question_generator);
  }
};

inline PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  lib.analysis = PromptTemplate{
      "analysis",
      "You are an experienced researcher performing qualitative analysis of open-ended\n"
      "questionnaire responses for a human-computer interaction study.\n"
      "\n"
      "Study context (a summary of the paper; findings and discussion are excluded):\n"
      "{{paper_summary}}\n"
      "\n"
      "Raw questionnaire data:\n"
      "{{raw_data}}\n"
      "\n"
      "Your passage will appear directly after this paragraph:\n"
      "{{preceding_paragraph}}\n"
      "\n"
      "Themes and research questions the passage must address:\n"
      "{{themes}}\n"
      "\n"
      "Task: write the findings passage that continues the text above. Analyse the raw\n"
      "responses, identify recurring patterns, and ground every claim in the responses.\n"
      "Write approximately {{target_tokens}} tokens.\n",
      {"paper_summary", "raw_data", "preceding_paragraph", "themes", "target_tokens"}};
  lib.paper_summary = PromptTemplate{
      "paper_summary",
      "Summarise the research paper below so the summary can serve as context for a\n"
      "later qualitative analysis task. Cover the motivation, background, study design,\n"
      "methods, and participants. Exclude all findings, results, and discussion content\n"
      "so the summary cannot bias the analysis.\n"
      "\n"
      "Paper text:\n"
      "{{paper_text}}\n",
      {"paper_text"}};
  lib.question_generator = PromptTemplate{
      "question_generator",
      "Each numbered line below is an answer statement taken from a qualitative\n"
      "analysis. For every answer, write exactly one question that the answer would\n"
      "directly respond to, phrased so it could only be answered from the original\n"
      "study. After the questions, list which raw data entries would be needed to\n"
      "answer them.\n"
      "\n"
      "Answers:\n"
      "{{answers}}\n",
      {"answers"}};
  lib.check();
  return lib;
}

inline PromptLibrary PromptLibrary::from_dir(const std::filesystem::path& dir) {
  auto load = [&](const char* file, const char* name,
                  std::vector<std::string> slots) -> PromptTemplate {
    PromptTemplate t{name, detail::read_text_file(dir / file), std::move(slots)};
    return t;
  };
  PromptLibrary lib;
  lib.analysis = load("analysis.txt", "analysis",
                      {"paper_summary", "raw_data", "preceding_paragraph", "themes",
                       "target_tokens"});
  lib.paper_summary = load("summary.txt", "paper_summary", {"paper_text"});
  lib.question_generator = load("question.txt", "question_generator", {"answers"});
  lib.check();
  return lib;
}

/// Canonical rendering of QA pairs for the analysis prompt: one question
/// line, then one line per response, in input order. Pair blocks are
/// separated by a blank line.
inline std::string format_raw_data(const std::vector<RawQaPair>& pairs) {
  if (pairs.empty()) {
    throw EmptyInput("format_raw_data: no QA pairs given");
  }
  std::string out;
  bool first = true;
  for (const auto& pair : pairs) {
    if (!first) out += "\n";
    first = false;
    out += pair.question_id + ": " + pair.question_text + "\n";
    for (const auto& r : pair.responses) {
      out += r.participant_id + ": " + r.answer_text + "\n";
    }
  }
  return out;
}

/// Typed input for the analysis prompt.
struct AnalysisRequest {
  std::string paper_summary;
  std::string raw_data_block;       // from format_raw_data
  std::string preceding_paragraph;  // may be empty for a paper's first passage
  std::vector<std::string> themes;
  int target_tokens = 0;
};

class PromptEngine {
 public:
  explicit PromptEngine(PromptLibrary lib) : lib_(std::move(lib)) {}
  PromptEngine() : PromptEngine(PromptLibrary::builtin()) {}

  std::string build_analysis_prompt(const AnalysisRequest& req) const {
    if (detail::trim(req.paper_summary).empty()) {
      throw MissingSlot("analysis prompt: paper_summary must be non-empty");
    }
    if (req.raw_data_block.empty()) {
      throw MissingSlot("analysis prompt: raw_data_block must be non-empty");
    }
    if (req.target_tokens <= 0) {
      throw MissingSlot("analysis prompt: target_tokens must be positive");
    }
    return lib_.analysis.render({{"paper_summary", req.paper_summary},
                                 {"raw_data", req.raw_data_block},
                                 {"preceding_paragraph", req.preceding_paragraph},
                                 {"themes", format_themes(req.themes)},
                                 {"target_tokens", std::to_string(req.target_tokens)}});
  }

  std::string build_summary_prompt(const std::string& full_paper_text) const {
    if (detail::trim(full_paper_text).empty()) {
      throw MissingSlot("summary prompt: paper_text must be non-empty");
    }
    return lib_.paper_summary.render({{"paper_text", full_paper_text}});
  }

  std::string build_question_prompt(const std::vector<std::string>& answers) const {
    if (answers.empty()) {
      throw EmptyInput("question prompt: answers list is empty");
    }
    std::string joined;
    for (std::size_t i = 0; i < answers.size(); ++i) {
      joined += std::to_string(i + 1) + ". " + answers[i];
      if (i + 1 < answers.size()) joined += "\n";
    }
    return lib_.question_generator.render({{"answers", joined}});
  }

  static std::string format_themes(const std::vector<std::string>& themes) {
    std::string out;
    for (std::size_t i = 0; i < themes.size(); ++i) {
      out += "- " + themes[i];
      if (i + 1 < themes.size()) out += "\n";
    }
    return out;
  }

  const PromptLibrary& library() const { return lib_; }

 private:
  PromptLibrary lib_;
};

}  // namespace qualbench
