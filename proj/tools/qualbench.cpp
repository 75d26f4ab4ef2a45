// qualbench: batch evaluation harness for LLM-driven qualitative analysis.
//
// Subcommands:
//   validate    check a dataset directory against the schema
//   summarize   produce a findings-free paper summary via the summary prompt
//   run         full evaluation: generate, embed, score, report
//   report      re-emit report artifacts from an existing report.json

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qualbench/qualbench.hpp"

namespace fs = std::filesystem;
using namespace qualbench;

namespace {

struct CliConfig {
  std::string config_path;
  std::string dataset;
  std::string out = "runs";
  std::string run_id;
  std::string prompts_dir;
  std::string paper_filter;
  ModelConfig model;
  EmbeddingBackendConfig embedding;
  int iterations = 5;
  double threshold = 0.7;
  int parallelism = 4;
  int retry_cap = 5;
  bool mock = false;
  bool override_budget = false;
  bool verify_questions = false;
};

std::string api_key_from_env() {
  const char* key = std::getenv("QUALBENCH_API_KEY");
  return key ? key : "";
}

std::string default_run_id() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "run-%Y%m%d-%H%M%S", &tm);
  return buf;
}

// Config-file values fill in wherever the corresponding flag was not passed.
void apply_config_file(CliConfig& cfg, CLI::App* cmd) {
  if (cfg.config_path.empty()) return;
  const auto j = detail::parse_json_or_throw(detail::read_text_file(cfg.config_path),
                                             cfg.config_path);
  const auto given = [&](const std::string& flag) { return cmd->count(flag) > 0; };

  if (!given("--dataset")) cfg.dataset = j.value("dataset", cfg.dataset);
  if (!given("--out")) cfg.out = j.value("out", cfg.out);
  if (!given("--run-id")) cfg.run_id = j.value("run_id", cfg.run_id);
  if (!given("--prompts")) cfg.prompts_dir = j.value("prompts", cfg.prompts_dir);
  if (!given("--paper")) cfg.paper_filter = j.value("paper", cfg.paper_filter);
  if (!given("--iterations")) cfg.iterations = j.value("iterations", cfg.iterations);
  if (!given("--threshold")) cfg.threshold = j.value("threshold", cfg.threshold);
  if (!given("--parallelism")) cfg.parallelism = j.value("parallelism", cfg.parallelism);
  if (!given("--retry-cap")) cfg.retry_cap = j.value("retry_cap", cfg.retry_cap);
  if (!given("--mock")) cfg.mock = j.value("mock", cfg.mock);
  if (!given("--override-budget"))
    cfg.override_budget = j.value("override_budget", cfg.override_budget);
  if (!given("--verify-questions"))
    cfg.verify_questions = j.value("verify_questions", cfg.verify_questions);

  if (j.contains("model")) {
    ModelConfig from_file = j.at("model").get<ModelConfig>();
    if (!given("--base-url")) cfg.model.base_url = from_file.base_url;
    if (!given("--model")) cfg.model.model_name = from_file.model_name;
    if (!given("--temperature")) cfg.model.temperature = from_file.temperature;
    if (!given("--max-output-tokens")) cfg.model.max_output_tokens = from_file.max_output_tokens;
    if (!given("--context-window")) cfg.model.context_window = from_file.context_window;
  }
  if (j.contains("embedding")) {
    EmbeddingBackendConfig from_file = j.at("embedding").get<EmbeddingBackendConfig>();
    if (!given("--embedding-kind")) cfg.embedding.kind = from_file.kind;
    if (!given("--embedding-url")) cfg.embedding.base_url = from_file.base_url;
    if (!given("--embedding-model")) cfg.embedding.model_name = from_file.model_name;
    if (!given("--embedding-dim")) cfg.embedding.dimensions = from_file.dimensions;
  }
}

void add_model_flags(CLI::App* cmd, CliConfig& cfg) {
  cmd->add_option("--config", cfg.config_path, "JSON config file; flags override its values");
  cmd->add_option("--base-url", cfg.model.base_url, "chat endpoint root, e.g. https://host/v1");
  cmd->add_option("--model", cfg.model.model_name, "model name sent to the provider");
  cmd->add_option("--temperature", cfg.model.temperature, "sampling temperature");
  cmd->add_option("--max-output-tokens", cfg.model.max_output_tokens,
                  "tokens reserved for the reply");
  cmd->add_option("--context-window", cfg.model.context_window, "model context window, tokens");
  cmd->add_option("--retry-cap", cfg.retry_cap, "max provider attempts per request");
  cmd->add_flag("--mock", cfg.mock, "use the deterministic offline provider");
  cmd->add_flag("--override-budget", cfg.override_budget,
                "send prompts even when they exceed the token budget");
  cmd->add_option("--prompts", cfg.prompts_dir,
                  "directory with analysis.txt/summary.txt/question.txt template overrides");
}

struct Backends {
  std::unique_ptr<ChatBackend> chat;
  std::unique_ptr<EmbeddingBackend> embedding;
};

Backends make_backends(const CliConfig& cfg) {
  Backends b;
  if (cfg.mock) {
    b.chat = std::make_unique<EchoHashChatBackend>();
    EmbeddingBackendConfig ecfg = cfg.embedding;
    ecfg.kind = "mock";
    b.embedding = std::make_unique<HashEmbeddingBackend>(ecfg);
    return b;
  }
  b.chat = std::make_unique<HttpChatBackend>(api_key_from_env());
  if (cfg.embedding.kind == "mock") {
    b.embedding = std::make_unique<HashEmbeddingBackend>(cfg.embedding);
  } else {
    b.embedding = std::make_unique<HttpEmbeddingBackend>(cfg.embedding, api_key_from_env());
  }
  return b;
}

PromptEngine make_engine(const CliConfig& cfg) {
  if (!cfg.prompts_dir.empty()) {
    return PromptEngine(PromptLibrary::from_dir(cfg.prompts_dir));
  }
  return PromptEngine();
}

void print_issues(const std::vector<ValidationIssue>& issues) {
  for (const auto& issue : issues) {
    std::cout << to_string(issue.severity) << " [" << issue.code << "] " << issue.location
              << ": " << issue.message << "\n";
  }
}

int cmd_validate(const std::string& dataset_path) {
  const Dataset ds = load_dataset(dataset_path);
  const auto issues = validate_dataset(ds);
  print_issues(issues);
  std::cout << "OK: " << ds.papers.size() << " papers, " << ds.item_count() << " items";
  if (!issues.empty()) std::cout << " (" << issues.size() << " warnings)";
  std::cout << "\n";
  return 0;
}

int cmd_summarize(const CliConfig& cfg, const std::string& input_path,
                  std::string output_path) {
  const std::string paper_text = detail::read_text_file(input_path);
  const PromptEngine engine = make_engine(cfg);
  const std::string prompt = engine.build_summary_prompt(paper_text);

  Backends backends = make_backends(cfg);
  GatewayOptions opts;
  opts.retry.retry_cap = cfg.retry_cap;
  LlmGateway gateway(*backends.chat, *backends.embedding, cfg.model, opts);

  CompletionRequest req;
  req.prompt = prompt;
  req.item_id = 0;
  req.iteration = 1;
  const GenerationRun run = gateway.complete(req, cfg.override_budget);

  if (output_path.empty()) {
    output_path = (fs::path(cfg.out) / "summary.txt").string();
  }
  detail::write_text_file(output_path, run.output_text);
  std::cout << "wrote " << output_path << " (" << run.completion_tokens << " tokens)\n";
  return 0;
}

int cmd_run(CliConfig cfg) {
  Dataset ds = load_dataset(cfg.dataset);
  print_issues(validate_dataset(ds));

  if (!cfg.paper_filter.empty()) {
    const PaperRecord* paper = ds.find_paper(cfg.paper_filter);
    if (paper == nullptr) {
      std::cerr << "error: no paper with id '" << cfg.paper_filter << "' in the dataset\n";
      return 1;
    }
    Dataset filtered;
    filtered.schema_version = ds.schema_version;
    filtered.default_themes = ds.default_themes;
    filtered.papers.push_back(*paper);
    ds = std::move(filtered);
  }
  if (ds.item_count() == 0) {
    std::cerr << "error: selection contains no items\n";
    return 1;
  }

  if (cfg.run_id.empty()) cfg.run_id = default_run_id();
  const fs::path run_dir = fs::path(cfg.out) / cfg.run_id;

  Backends backends = make_backends(cfg);
  GatewayOptions opts;
  opts.cache_dir = run_dir / "cache";
  opts.retry.retry_cap = cfg.retry_cap;
  opts.parallelism = cfg.parallelism;
  LlmGateway gateway(*backends.chat, *backends.embedding, cfg.model, opts);

  RunConfig run_cfg;
  run_cfg.model = cfg.model;
  run_cfg.embedding = backends.embedding->config();
  run_cfg.iterations = cfg.iterations;
  run_cfg.flag_threshold = cfg.threshold;
  run_cfg.run_id = cfg.run_id;
  run_cfg.parallelism = cfg.parallelism;
  run_cfg.override_budget = cfg.override_budget;
  run_cfg.verify_questions = cfg.verify_questions;

  Evaluator evaluator(gateway, make_engine(cfg));
  const EvaluationReport report = evaluator.evaluate_dataset(ds, run_cfg);
  write_run_artifacts(report, run_dir);

  int flagged = 0;
  for (const auto& s : report.item_scores) {
    if (s.flagged) ++flagged;
  }
  std::cout << "run " << cfg.run_id << ": " << report.item_scores.size() << " items scored, "
            << flagged << " flagged, " << report.errors.size() << " errors\n";
  std::cout << "mean similarity " << detail::format_fixed(report.aggregates.overall_mean)
            << ", max SD " << detail::format_fixed(report.aggregates.max_sd) << "\n";
  std::cout << "artifacts in " << run_dir.string() << " (summary: "
            << (run_dir / "summary.md").string() << ")\n";
  return report.errors.empty() ? 0 : 1;
}

int cmd_report(const std::string& run_path, const std::string& format,
               std::string out_dir) {
  fs::path report_path(run_path);
  if (fs::is_directory(report_path)) {
    report_path /= "report.json";
  }
  const EvaluationReport report = load_report(report_path);

  if (!format.empty()) {
    TableFormat f = TableFormat::csv;
    if (format == "json") f = TableFormat::json;
    else if (format == "markdown") f = TableFormat::markdown;
    else if (format != "csv") throw ConfigError("unknown table format '" + format + "'");
    std::cout << emit_table(report, f);
    return 0;
  }

  if (out_dir.empty()) out_dir = report_path.parent_path().string();
  const fs::path out(out_dir);
  fs::create_directories(out);
  detail::write_text_file(out / "summary.md", emit_summary(report));
  if (!report.item_scores.empty()) {
    emit_table_file(report, TableFormat::csv, out / "report.csv");
    emit_violin_file(report, out / "violin.json");
    detail::write_text_file(out / "scores.svg", emit_strip_svg(report));
  }
  std::cout << "re-emitted artifacts in " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qualbench: LLM qualitative-analysis evaluation harness"};
  app.require_subcommand(1);

  CliConfig cfg;

  auto* validate = app.add_subcommand("validate", "validate a dataset directory");
  std::string validate_dataset_path;
  validate->add_option("--dataset", validate_dataset_path, "dataset directory")->required();

  auto* summarize = app.add_subcommand("summarize", "summarize a paper for analysis context");
  std::string summarize_input;
  std::string summarize_output;
  summarize->add_option("--input", summarize_input, "paper text file")->required();
  summarize->add_option("--output", summarize_output, "where to write the summary");
  summarize->add_option("--out", cfg.out, "output directory (default runs)");
  add_model_flags(summarize, cfg);

  auto* run = app.add_subcommand("run", "evaluate a dataset end to end");
  run->add_option("--dataset", cfg.dataset, "dataset directory");
  run->add_option("--out", cfg.out, "output directory (default runs)");
  run->add_option("--run-id", cfg.run_id, "run identifier (default: timestamp)");
  run->add_option("--paper", cfg.paper_filter, "evaluate only this paper_id");
  run->add_option("--iterations", cfg.iterations, "generations per item (default 5)");
  run->add_option("--threshold", cfg.threshold, "flag items with mean below this (default 0.7)");
  run->add_option("--parallelism", cfg.parallelism, "concurrent items (default 4)");
  run->add_flag("--verify-questions", cfg.verify_questions,
                "attach question-generator evidence to the report");
  run->add_option("--embedding-kind", cfg.embedding.kind, "mock | openai");
  run->add_option("--embedding-url", cfg.embedding.base_url, "embedding endpoint root");
  run->add_option("--embedding-model", cfg.embedding.model_name, "embedding model name");
  run->add_option("--embedding-dim", cfg.embedding.dimensions, "mock embedding dimensions");
  add_model_flags(run, cfg);

  auto* report = app.add_subcommand("report", "re-emit artifacts from report.json");
  std::string report_run;
  std::string report_format;
  std::string report_out;
  report->add_option("--run", report_run, "run directory or report.json path")->required();
  report->add_option("--format", report_format, "print table to stdout: csv | json | markdown");
  report->add_option("--out", report_out, "directory for re-emitted files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      return cmd_validate(validate_dataset_path);
    }
    if (summarize->parsed()) {
      apply_config_file(cfg, summarize);
      return cmd_summarize(cfg, summarize_input, summarize_output);
    }
    if (run->parsed()) {
      apply_config_file(cfg, run);
      if (cfg.dataset.empty()) {
        std::cerr << "error: --dataset is required (flag or config file)\n";
        return 1;
      }
      return cmd_run(cfg);
    }
    if (report->parsed()) {
      return cmd_report(report_run, report_format, report_out);
    }
  } catch (const MissingFile& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
