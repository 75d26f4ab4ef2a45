#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "qualbench/backend.hpp"
#include "qualbench/errors.hpp"

namespace qualbench {

namespace detail {

// Splits "http://host:1234/v1" into the client origin and the path prefix.
inline std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("base_url must start with http:// or https://: '" + base_url + "'");
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {base_url, ""};
  }
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

inline nlohmann::json post_json(const std::string& base_url, const std::string& route,
                                const std::string& api_key, const nlohmann::json& body) {
  const auto [origin, prefix] = split_base_url(base_url);
  httplib::Client client(origin);
  client.set_connection_timeout(30, 0);
  client.set_read_timeout(120, 0);
  client.set_write_timeout(30, 0);

  httplib::Headers headers;
  if (!api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key);
  }

  const auto res = client.Post(prefix + route, headers, body.dump(), "application/json");
  if (!res) {
    throw ProviderTransient("request to " + origin + route +
                            " failed: " + httplib::to_string(res.error()));
  }
  if (res->status >= 500) {
    throw ProviderTransient("HTTP " + std::to_string(res->status) + " from " + route + ": " +
                            res->body.substr(0, 200));
  }
  if (res->status != 200) {
    throw ProviderError("HTTP " + std::to_string(res->status) + " from " + route + ": " +
                        res->body.substr(0, 200));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("unparseable provider response: ") + e.what());
  }
}

}  // namespace detail

/// Chat completions over the OpenAI-compatible REST shape
/// (`POST {base}/chat/completions`), which GPT-class services and
/// Llama-class servers both speak.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(std::string api_key) : api_key_(std::move(api_key)) {}

  ChatResult complete(const CompletionRequest& req, const ModelConfig& model) override {
    if (api_key_.empty()) {
      throw AuthMissing("no API key configured; set QUALBENCH_API_KEY");
    }
    if (model.base_url.empty()) {
      throw ConfigError("model config: base_url is required for the HTTP backend");
    }
    nlohmann::json body = {
        {"model", model.model_name},
        {"temperature", model.temperature},
        {"max_tokens", model.max_output_tokens},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})}};
    if (req.seed_hint) {
      body["seed"] = *req.seed_hint;
    }

    const auto reply = detail::post_json(model.base_url, "/chat/completions", api_key_, body);

    ChatResult out;
    try {
      out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(std::string("chat response missing choices[0].message.content: ") +
                          e.what());
    }
    if (reply.contains("usage")) {
      out.prompt_tokens = reply["usage"].value("prompt_tokens", -1L);
      out.completion_tokens = reply["usage"].value("completion_tokens", -1L);
    }
    out.provider_model = reply.value("model", "");
    return out;
  }

  std::string id() const override { return "http-openai-compatible"; }

 private:
  std::string api_key_;
};

/// Sentence embeddings over `POST {base}/embeddings`. The API key is
/// optional here: local embedding servers commonly run without auth.
class HttpEmbeddingBackend : public EmbeddingBackend {
 public:
  HttpEmbeddingBackend(EmbeddingBackendConfig cfg, std::string api_key)
      : cfg_(std::move(cfg)), api_key_(std::move(api_key)) {
    if (cfg_.base_url.empty()) {
      throw ConfigError("embedding config: base_url is required for the HTTP backend");
    }
  }

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    const nlohmann::json body = {{"model", cfg_.model_name}, {"input", texts}};
    const auto reply = detail::post_json(cfg_.base_url, "/embeddings", api_key_, body);

    std::vector<std::vector<double>> out;
    try {
      for (const auto& entry : reply.at("data")) {
        out.push_back(entry.at("embedding").get<std::vector<double>>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(std::string("embedding response missing data[].embedding: ") +
                          e.what());
    }
    return out;
  }

  const EmbeddingBackendConfig& config() const override { return cfg_; }

 private:
  EmbeddingBackendConfig cfg_;
  std::string api_key_;
};

}  // namespace qualbench
