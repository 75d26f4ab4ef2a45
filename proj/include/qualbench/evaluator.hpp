#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "qualbench/dataset.hpp"
#include "qualbench/gateway.hpp"
#include "qualbench/prompt.hpp"
#include "qualbench/similarity.hpp"

namespace qualbench {

/// Everything one evaluation run needs to know. Snapshotted into the report
/// so results stay interpretable after configs change.
struct RunConfig {
  ModelConfig model;
  EmbeddingBackendConfig embedding;
  int iterations = 5;
  double flag_threshold = 0.7;  // items with mean below this get flagged
  std::string run_id;
  int parallelism = 1;
  bool override_budget = false;
  bool verify_questions = false;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline void validate_run_config(const RunConfig& cfg) {
  validate_model_config(cfg.model);
  if (cfg.iterations < 2) {
    throw ConfigError("run config: iterations must be >= 2");
  }
  if (cfg.flag_threshold < 0.0 || cfg.flag_threshold > 1.0) {
    throw ConfigError("run config: flag_threshold must lie in [0, 1]");
  }
  if (cfg.parallelism < 1) {
    throw ConfigError("run config: parallelism must be >= 1");
  }
}

inline void to_json(nlohmann::json& j, const RunConfig& cfg) {
  j = {{"model", cfg.model},
       {"embedding", cfg.embedding},
       {"iterations", cfg.iterations},
       {"flag_threshold", cfg.flag_threshold},
       {"run_id", cfg.run_id},
       {"parallelism", cfg.parallelism},
       {"override_budget", cfg.override_budget},
       {"verify_questions", cfg.verify_questions}};
}

inline void from_json(const nlohmann::json& j, RunConfig& cfg) {
  if (j.contains("model")) j.at("model").get_to(cfg.model);
  if (j.contains("embedding")) j.at("embedding").get_to(cfg.embedding);
  cfg.iterations = j.value("iterations", cfg.iterations);
  cfg.flag_threshold = j.value("flag_threshold", cfg.flag_threshold);
  cfg.run_id = j.value("run_id", cfg.run_id);
  cfg.parallelism = j.value("parallelism", cfg.parallelism);
  cfg.override_budget = j.value("override_budget", cfg.override_budget);
  cfg.verify_questions = j.value("verify_questions", cfg.verify_questions);
}

/// Per-item result: one similarity score per iteration, their statistics,
/// and the flag. flagged == (stats.mean < flag_threshold), always.
struct ItemScore {
  int item_id = 0;
  std::string paper_id;
  ScoreStats stats;
  bool flagged = false;
  std::vector<GenerationRun> generations;
};

/// Auxiliary verification evidence from the question-generator prompt.
/// Never folded into the numeric score.
struct QuestionSet {
  int item_id = 0;
  std::vector<std::string> questions;
  std::string raw_data_notes;  // the prompt's identification of needed raw data
  std::string transcript;      // full model output, kept verbatim
};

inline void to_json(nlohmann::json& j, const QuestionSet& q) {
  j = {{"item_id", q.item_id},
       {"questions", q.questions},
       {"raw_data_notes", q.raw_data_notes},
       {"transcript", q.transcript}};
}

inline void from_json(const nlohmann::json& j, QuestionSet& q) {
  j.at("item_id").get_to(q.item_id);
  j.at("questions").get_to(q.questions);
  q.raw_data_notes = j.value("raw_data_notes", "");
  q.transcript = j.value("transcript", "");
}

struct ItemError {
  int item_id = 0;
  std::string message;
};

struct IdRange {
  int first = 0;
  int last = 0;

  friend bool operator==(const IdRange&, const IdRange&) = default;
};

struct Aggregates {
  double overall_mean = 0.0;  // mean of per-item means
  double flagged_share = 0.0;
  double max_sd = 0.0;
};

struct EvaluationReport {
  RunConfig run_config;
  std::string created_at;
  std::vector<ItemScore> item_scores;  // ascending item_id
  std::map<std::string, IdRange> per_paper_groups;
  std::vector<ItemError> errors;
  std::vector<QuestionSet> question_sets;
  Aggregates aggregates;
  GatewayStats run_stats;
};

inline Aggregates compute_aggregates(const std::vector<ItemScore>& scores) {
  Aggregates agg;
  if (scores.empty()) return agg;
  double sum = 0.0;
  int flagged = 0;
  for (const auto& s : scores) {
    sum += s.stats.mean;
    if (s.flagged) ++flagged;
    agg.max_sd = std::max(agg.max_sd, s.stats.sd);
  }
  agg.overall_mean = sum / static_cast<double>(scores.size());
  agg.flagged_share = static_cast<double>(flagged) / static_cast<double>(scores.size());
  return agg;
}

namespace detail {

// Splits generated analysis text into answer statements for the question
// generator: sentence-ish segments, trimmed, very short fragments dropped.
inline std::vector<std::string> extract_answer_statements(const std::string& text,
                                                          std::size_t max_answers = 12) {
  std::vector<std::string> out;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    current += c;
    const bool sentence_end =
        (c == '.' || c == '!' || c == '?') &&
        (i + 1 >= text.size() || text[i + 1] == ' ' || text[i + 1] == '\n');
    if (sentence_end || c == '\n') {
      const std::string s = trim(current);
      if (s.size() >= 12) out.push_back(s);
      current.clear();
      if (out.size() >= max_answers) return out;
    }
  }
  const std::string s = trim(current);
  if (s.size() >= 12 && out.size() < max_answers) out.push_back(s);
  return out;
}

}  // namespace detail

/// Runs the full per-item protocol: build the analysis prompt, check the
/// budget, generate `iterations` outputs, embed outputs and reference, score
/// each iteration by cosine similarity, and flag low means.
class Evaluator {
 public:
  Evaluator(LlmGateway& gateway, PromptEngine engine = PromptEngine())
      : gateway_(gateway), engine_(std::move(engine)) {}

  ItemScore evaluate_item(const BenchmarkItem& item, const PaperRecord& paper,
                          const RunConfig& cfg,
                          const std::vector<std::string>& default_themes = {}) {
    std::vector<RawQaPair> pairs;
    pairs.reserve(item.raw_qa_refs.size());
    for (const auto& ref : item.raw_qa_refs) {
      const RawQaPair* q = paper.find_question(ref);
      if (q == nullptr) {
        throw DanglingReference("item " + std::to_string(item.item_id) +
                                " references unknown question_id '" + ref + "'");
      }
      pairs.push_back(*q);
    }

    AnalysisRequest req;
    req.paper_summary = paper.summary;
    req.raw_data_block = format_raw_data(pairs);
    req.preceding_paragraph = item.preceding_paragraph;
    req.themes = item.themes.empty() ? default_themes : item.themes;
    req.target_tokens = item.target_tokens;
    const std::string prompt = engine_.build_analysis_prompt(req);

    ItemScore score;
    score.item_id = item.item_id;
    score.paper_id = item.paper_id;
    score.generations.reserve(static_cast<std::size_t>(cfg.iterations));
    for (int iteration = 1; iteration <= cfg.iterations; ++iteration) {
      CompletionRequest creq;
      creq.prompt = prompt;
      creq.item_id = item.item_id;
      creq.iteration = iteration;
      creq.seed_hint = iteration;
      score.generations.push_back(gateway_.complete(creq, cfg.override_budget));
    }

    // One batch: reference first, then the generations in iteration order.
    std::vector<std::string> texts;
    texts.reserve(score.generations.size() + 1);
    texts.push_back(item.reference_passage);
    for (const auto& run : score.generations) {
      texts.push_back(run.output_text);
    }
    const auto vectors = gateway_.embed(texts);

    std::vector<double> scores;
    scores.reserve(score.generations.size());
    for (std::size_t i = 1; i < vectors.size(); ++i) {
      scores.push_back(cosine(vectors[i], vectors[0]));
    }
    score.stats = iteration_stats(std::move(scores));
    score.flagged = score.stats.mean < cfg.flag_threshold;
    return score;
  }

  /// Evaluates every item, tolerating per-item failures: a failing item is
  /// recorded in the report and the run continues. Only AuthMissing aborts
  /// everything, since no later item could succeed either. Items may be
  /// scored concurrently (cfg.parallelism); aggregation is deterministic in
  /// item_id order regardless.
  EvaluationReport evaluate_dataset(const Dataset& dataset, const RunConfig& cfg) {
    validate_run_config(cfg);
    if (has_errors(validate_dataset(dataset))) {
      throw SchemaViolation("evaluate_dataset: dataset has validation errors; fix them first");
    }

    struct Job {
      const BenchmarkItem* item;
      const PaperRecord* paper;
    };
    std::vector<Job> jobs;
    for (const auto& paper : dataset.papers) {
      for (const auto& item : paper.items) {
        jobs.push_back(Job{&item, &paper});
      }
    }
    if (jobs.empty()) {
      throw EmptyInput("evaluate_dataset: no items selected");
    }
    std::sort(jobs.begin(), jobs.end(),
              [](const Job& a, const Job& b) { return a.item->item_id < b.item->item_id; });

    std::vector<std::optional<ItemScore>> results(jobs.size());
    std::vector<std::optional<ItemError>> failures(jobs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr fatal;
    std::mutex fatal_mu;

    auto worker = [&] {
      while (!abort.load()) {
        const std::size_t idx = next.fetch_add(1);
        if (idx >= jobs.size()) return;
        const Job& job = jobs[idx];
        try {
          results[idx] = evaluate_item(*job.item, *job.paper, cfg, dataset.default_themes);
        } catch (const AuthMissing&) {
          std::lock_guard<std::mutex> lock(fatal_mu);
          if (!fatal) fatal = std::current_exception();
          abort.store(true);
          return;
        } catch (const std::exception& e) {
          failures[idx] = ItemError{job.item->item_id, e.what()};
        }
      }
    };

    const int thread_count = std::min<int>(cfg.parallelism, static_cast<int>(jobs.size()));
    if (thread_count <= 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      threads.reserve(static_cast<std::size_t>(thread_count));
      for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    EvaluationReport report;
    report.run_config = cfg;
    report.created_at = detail::iso8601_utc_now();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (results[i]) {
        report.item_scores.push_back(std::move(*results[i]));
      } else if (failures[i]) {
        report.errors.push_back(std::move(*failures[i]));
      }
    }
    for (const auto& s : report.item_scores) {
      auto [it, inserted] = report.per_paper_groups.try_emplace(s.paper_id,
                                                                IdRange{s.item_id, s.item_id});
      if (!inserted) {
        it->second.first = std::min(it->second.first, s.item_id);
        it->second.last = std::max(it->second.last, s.item_id);
      }
    }
    report.aggregates = compute_aggregates(report.item_scores);

    if (cfg.verify_questions) {
      for (const auto& s : report.item_scores) {
        if (s.generations.empty()) continue;
        const BenchmarkItem* item = nullptr;
        for (const auto& job : jobs) {
          if (job.item->item_id == s.item_id) {
            item = job.item;
            break;
          }
        }
        try {
          report.question_sets.push_back(
              verify_with_questions(*item, s.generations.front().output_text, cfg));
        } catch (const std::exception& e) {
          report.errors.push_back(
              ItemError{s.item_id, std::string("question verification: ") + e.what()});
        }
      }
    }

    report.run_stats = gateway_.stats();
    return report;
  }

  /// Verification aid: turns the generated analysis into answer statements,
  /// asks the question-generator prompt for matching questions, and returns
  /// them with the model's note on which raw data the questions need.
  QuestionSet verify_with_questions(const BenchmarkItem& item, const std::string& generated,
                                    const RunConfig& cfg) {
    if (detail::trim(generated).empty()) {
      throw EmptyInput("verify_with_questions: generated analysis is empty");
    }
    auto answers = detail::extract_answer_statements(generated);
    if (answers.empty()) {
      answers.push_back(detail::trim(generated));
    }
    const std::string prompt = engine_.build_question_prompt(answers);

    CompletionRequest creq;
    creq.prompt = prompt;
    creq.item_id = item.item_id;
    creq.iteration = 1;
    const GenerationRun run = gateway_.complete(creq, cfg.override_budget);

    QuestionSet qs;
    qs.item_id = item.item_id;
    qs.transcript = run.output_text;
    std::istringstream lines(run.output_text);
    std::string line;
    std::string notes;
    while (std::getline(lines, line)) {
      const std::string t = detail::trim(line);
      if (t.empty()) continue;
      if (t.back() == '?') {
        qs.questions.push_back(t);
      } else {
        if (!notes.empty()) notes += "\n";
        notes += t;
      }
    }
    qs.raw_data_notes = std::move(notes);
    return qs;
  }

 private:
  LlmGateway& gateway_;
  PromptEngine engine_;
};

}  // namespace qualbench
