#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qualbench/errors.hpp"

namespace qualbench {

/// Which model to talk to and how. Models are configuration, not code: any
/// OpenAI-compatible chat endpoint works, GPT-class or Llama-class alike.
struct ModelConfig {
  std::string base_url;  // e.g. "https://api.openai.com/v1"
  std::string model_name = "gpt-4";
  double temperature = 0.7;
  int max_output_tokens = 1024;
  int context_window = 8192;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline void validate_model_config(const ModelConfig& m) {
  if (m.max_output_tokens <= 0 || m.context_window <= 0) {
    throw ConfigError("model config: max_output_tokens and context_window must be positive");
  }
  if (m.max_output_tokens >= m.context_window) {
    throw ConfigError("model config: max_output_tokens (" +
                      std::to_string(m.max_output_tokens) +
                      ") must be smaller than context_window (" +
                      std::to_string(m.context_window) + ")");
  }
  if (m.temperature < 0.0) {
    throw ConfigError("model config: temperature must be >= 0");
  }
}

inline void to_json(nlohmann::json& j, const ModelConfig& m) {
  j = {{"base_url", m.base_url},
       {"model", m.model_name},
       {"temperature", m.temperature},
       {"max_output_tokens", m.max_output_tokens},
       {"context_window", m.context_window}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& m) {
  m.base_url = j.value("base_url", "");
  m.model_name = j.value("model", m.model_name);
  m.temperature = j.value("temperature", m.temperature);
  m.max_output_tokens = j.value("max_output_tokens", m.max_output_tokens);
  m.context_window = j.value("context_window", m.context_window);
}

/// Sentence-embedding backend selection. "mock" is the deterministic local
/// hash scheme; "openai" is any OpenAI-compatible /embeddings endpoint.
struct EmbeddingBackendConfig {
  std::string kind = "mock";
  std::string base_url;
  std::string model_name = "mock-hash-v1";
  int dimensions = 32;  // used by the mock scheme only

  friend bool operator==(const EmbeddingBackendConfig&, const EmbeddingBackendConfig&) = default;
};

inline void to_json(nlohmann::json& j, const EmbeddingBackendConfig& c) {
  j = {{"kind", c.kind},
       {"base_url", c.base_url},
       {"model", c.model_name},
       {"dimensions", c.dimensions}};
}

inline void from_json(const nlohmann::json& j, EmbeddingBackendConfig& c) {
  c.kind = j.value("kind", c.kind);
  c.base_url = j.value("base_url", "");
  c.model_name = j.value("model", c.model_name);
  c.dimensions = j.value("dimensions", c.dimensions);
}

/// One chat-completion request. item_id and iteration identify the request
/// within a run; they shape the cache key and let deterministic mocks look up
/// scripted responses.
struct CompletionRequest {
  std::string prompt;
  int item_id = 0;
  int iteration = 1;
  std::optional<long> seed_hint;
};

struct ChatResult {
  std::string text;
  long prompt_tokens = -1;      // -1: provider reported no usage
  long completion_tokens = -1;  // -1: provider reported no usage
  std::string provider_model;   // identifier echoed back by the provider
};

/// One LLM output for one item, with enough metadata to replay or audit it.
struct GenerationRun {
  int item_id = 0;
  int iteration = 1;
  ModelConfig model;  // snapshot; model_name holds the provider-reported id
  std::string prompt_hash;
  std::string output_text;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  std::string timestamp;

  friend bool operator==(const GenerationRun&, const GenerationRun&) = default;
};

inline void to_json(nlohmann::json& j, const GenerationRun& r) {
  j = {{"item_id", r.item_id},
       {"iteration", r.iteration},
       {"model", r.model},
       {"prompt_hash", r.prompt_hash},
       {"output_text", r.output_text},
       {"prompt_tokens", r.prompt_tokens},
       {"completion_tokens", r.completion_tokens},
       {"timestamp", r.timestamp}};
}

inline void from_json(const nlohmann::json& j, GenerationRun& r) {
  j.at("item_id").get_to(r.item_id);
  j.at("iteration").get_to(r.iteration);
  j.at("model").get_to(r.model);
  j.at("prompt_hash").get_to(r.prompt_hash);
  j.at("output_text").get_to(r.output_text);
  j.at("prompt_tokens").get_to(r.prompt_tokens);
  j.at("completion_tokens").get_to(r.completion_tokens);
  j.at("timestamp").get_to(r.timestamp);
}

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResult complete(const CompletionRequest& req, const ModelConfig& model) = 0;
  virtual std::string id() const = 0;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
  virtual const EmbeddingBackendConfig& config() const = 0;
};

}  // namespace qualbench
