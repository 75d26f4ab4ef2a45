#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "qualbench/backend.hpp"
#include "qualbench/detail/hash.hpp"
#include "qualbench/detail/util.hpp"
#include "qualbench/errors.hpp"

namespace qualbench {

// Deterministic provider stand-ins. These are first-class (the CLI exposes
// them via --mock) so runs can be rehearsed without spending API budget.
// Every mock counts its calls so tests can observe cache behaviour.

/// Output is a pure function of (prompt, iteration): a tag line followed by
/// pseudo-words drawn from sha256(prompt + iteration). Distinct iterations
/// give distinct but reproducible texts.
class EchoHashChatBackend : public ChatBackend {
 public:
  ChatResult complete(const CompletionRequest& req, const ModelConfig& model) override {
    calls_.fetch_add(1);
    const std::string digest =
        detail::sha256_hex(req.prompt + "\n#iter=" + std::to_string(req.iteration));
    std::string text = "mock analysis iteration " + std::to_string(req.iteration) + ":";
    for (std::size_t i = 0; i + 4 <= 32; i += 4) {
      text += " w" + digest.substr(i, 4);
    }
    return ChatResult{text, -1, -1, model.model_name + "-mock"};
  }
  std::string id() const override { return "mock-echo-hash"; }
  long calls() const { return calls_.load(); }

 private:
  std::atomic<long> calls_{0};
};

/// Always returns the same text.
class FixedChatBackend : public ChatBackend {
 public:
  explicit FixedChatBackend(std::string text) : text_(std::move(text)) {}
  ChatResult complete(const CompletionRequest&, const ModelConfig& model) override {
    calls_.fetch_add(1);
    return ChatResult{text_, -1, -1, model.model_name + "-mock"};
  }
  std::string id() const override { return "mock-fixed"; }
  long calls() const { return calls_.load(); }

 private:
  std::string text_;
  std::atomic<long> calls_{0};
};

/// Returns a per-item canned text, e.g. the item's reference passage for
/// ceiling runs. Unknown item_ids fall back to a deterministic filler.
class ItemLookupChatBackend : public ChatBackend {
 public:
  explicit ItemLookupChatBackend(std::map<int, std::string> by_item)
      : by_item_(std::move(by_item)) {}
  ChatResult complete(const CompletionRequest& req, const ModelConfig& model) override {
    calls_.fetch_add(1);
    const auto it = by_item_.find(req.item_id);
    const std::string text = it != by_item_.end()
                                 ? it->second
                                 : "mock output for item " + std::to_string(req.item_id);
    return ChatResult{text, -1, -1, model.model_name + "-mock"};
  }
  std::string id() const override { return "mock-item-lookup"; }
  long calls() const { return calls_.load(); }

 private:
  std::map<int, std::string> by_item_;
  std::atomic<long> calls_{0};
};

/// Consumes a scripted transcript step by step. A step either yields text or
/// throws a retryable ProviderTransient, which is how tests exercise the
/// retry loop without a network.
class ScriptedChatBackend : public ChatBackend {
 public:
  struct Step {
    bool fail = false;
    std::string text;
  };
  static Step ok(std::string text) { return Step{false, std::move(text)}; }
  static Step transient_failure() { return Step{true, {}}; }

  explicit ScriptedChatBackend(std::vector<Step> steps) : steps_(std::move(steps)) {}

  ChatResult complete(const CompletionRequest&, const ModelConfig& model) override {
    std::lock_guard<std::mutex> lock(mu_);
    ++calls_;
    if (steps_.empty()) {
      throw ProviderError("scripted backend: transcript exhausted");
    }
    const std::size_t idx = next_ < steps_.size() ? next_ : steps_.size() - 1;
    ++next_;
    if (steps_[idx].fail) {
      throw ProviderTransient("scripted backend: transient failure at step " +
                              std::to_string(idx + 1));
    }
    return ChatResult{steps_[idx].text, -1, -1, model.model_name + "-mock"};
  }
  std::string id() const override { return "mock-scripted"; }
  long calls() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<Step> steps_;
  std::size_t next_ = 0;
  long calls_ = 0;
};

/// Deterministic hash-to-vector embedding. The scheme, exactly:
///   1. split the text on runs of whitespace into tokens
///   2. for each token, h = FNV-1a-64(token bytes);
///      index = h % dim; sign = +1 if bit 32 of h is set, else -1
///   3. accumulate sign into component[index]
///   4. if the accumulator is all zero, set component[0] = 1
///   5. L2-normalize
/// Identical texts embed identically; token overlap raises cosine similarity.
class HashEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit HashEmbeddingBackend(EmbeddingBackendConfig cfg = {}) : cfg_(std::move(cfg)) {
    if (cfg_.dimensions < 2) {
      throw ConfigError("hash embedding: dimensions must be >= 2");
    }
  }

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    calls_.fetch_add(1);
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
      out.push_back(embed_one(text));
    }
    return out;
  }

  const EmbeddingBackendConfig& config() const override { return cfg_; }
  long calls() const { return calls_.load(); }

 private:
  std::vector<double> embed_one(const std::string& text) const {
    const auto dim = static_cast<std::size_t>(cfg_.dimensions);
    std::vector<double> v(dim, 0.0);
    for (const auto& token : detail::split_whitespace(text)) {
      const std::uint64_t h = detail::fnv1a64(token);
      const std::size_t index = static_cast<std::size_t>(h % dim);
      const double sign = ((h >> 32) & 1u) ? 1.0 : -1.0;
      v[index] += sign;
    }
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    if (norm_sq == 0.0) {
      v[0] = 1.0;
      norm_sq = 1.0;
    }
    const double norm = std::sqrt(norm_sq);
    for (double& x : v) x /= norm;
    return v;
  }

  EmbeddingBackendConfig cfg_;
  std::atomic<long> calls_{0};
};

}  // namespace qualbench
