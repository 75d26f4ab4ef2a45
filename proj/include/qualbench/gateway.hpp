#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "qualbench/backend.hpp"
#include "qualbench/cache.hpp"
#include "qualbench/detail/hash.hpp"
#include "qualbench/detail/util.hpp"
#include "qualbench/errors.hpp"

namespace qualbench {

/// Token counting strategy. The default is the ceil(chars/4) heuristic,
/// documented as an upper-bound estimate for budget checks; deployments with
/// an exact tokenizer can subclass and plug theirs in.
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual long count(std::string_view text) const {
    return static_cast<long>((text.size() + 3) / 4);
  }
};

/// Heuristic token count for `text` under `model`'s counting strategy.
inline long count_tokens(std::string_view text, const ModelConfig& = {}) {
  return TokenCounter{}.count(text);
}

struct BudgetReport {
  long prompt_tokens = 0;
  int max_output_tokens = 0;
  int context_window = 0;
  bool fits = false;
  long margin = 0;       // context - (prompt + max_output); negative on overflow
  long overflow_by = 0;  // max(0, -margin)
};

/// Overflow iff prompt tokens + reserved output tokens exceed the context
/// window. Reporting only; the caller decides whether to abort.
inline BudgetReport check_budget(std::string_view prompt, const ModelConfig& model,
                                 const TokenCounter& counter = TokenCounter{}) {
  BudgetReport r;
  r.prompt_tokens = counter.count(prompt);
  r.max_output_tokens = model.max_output_tokens;
  r.context_window = model.context_window;
  r.margin = static_cast<long>(model.context_window) - r.prompt_tokens - model.max_output_tokens;
  r.fits = r.margin >= 0;
  r.overflow_by = r.fits ? 0 : -r.margin;
  return r;
}

struct RetryPolicy {
  int retry_cap = 5;  // maximum attempts, first call included
  std::chrono::milliseconds initial_delay{250};
  std::chrono::milliseconds max_delay{4000};
};

struct GatewayOptions {
  std::optional<std::filesystem::path> cache_dir;
  RetryPolicy retry;
  int parallelism = 4;  // bound on concurrent in-flight provider calls
  std::shared_ptr<TokenCounter> token_counter = std::make_shared<TokenCounter>();
};

struct GatewayStats {
  long chat_calls = 0;   // provider attempts, retries included
  long embed_calls = 0;
  long cache_hits = 0;
};

inline void to_json(nlohmann::json& j, const GatewayStats& s) {
  j = {{"chat_calls", s.chat_calls},
       {"embed_calls", s.embed_calls},
       {"cache_hits", s.cache_hits}};
}

inline void from_json(const nlohmann::json& j, GatewayStats& s) {
  s.chat_calls = j.value("chat_calls", 0L);
  s.embed_calls = j.value("embed_calls", 0L);
  s.cache_hits = j.value("cache_hits", 0L);
}

/// Single entry point for all provider I/O: budget guard, retries with
/// exponential backoff, response caching, and a parallelism bound. No other
/// part of the library opens a connection.
class LlmGateway {
 public:
  LlmGateway(ChatBackend& chat, EmbeddingBackend& embedding, ModelConfig model,
             GatewayOptions opts = {})
      : chat_(chat),
        embedding_(embedding),
        model_(std::move(model)),
        opts_(std::move(opts)),
        slots_(std::max(1, opts_.parallelism)) {
    validate_model_config(model_);
    if (opts_.retry.retry_cap < 1) {
      throw ConfigError("gateway: retry_cap must be >= 1");
    }
    if (opts_.cache_dir && !opts_.cache_dir->empty()) {
      cache_.emplace(*opts_.cache_dir);
    }
  }

  long count_tokens(std::string_view text) const { return opts_.token_counter->count(text); }

  BudgetReport check_budget(std::string_view prompt) const {
    return qualbench::check_budget(prompt, model_, *opts_.token_counter);
  }

  /// Runs one completion. Throws BudgetExceeded before any provider call
  /// when the prompt cannot fit, unless the caller overrides.
  GenerationRun complete(const CompletionRequest& req, bool override_budget = false) {
    const auto budget = check_budget(req.prompt);
    if (!budget.fits && !override_budget) {
      throw BudgetExceeded("prompt needs " + std::to_string(budget.prompt_tokens) +
                           " tokens plus " + std::to_string(budget.max_output_tokens) +
                           " reserved for output, exceeding the " +
                           std::to_string(budget.context_window) + "-token context window by " +
                           std::to_string(budget.overflow_by));
    }

    const std::string prompt_hash = detail::sha256_hex(req.prompt);
    const std::string key = detail::sha256_hex(
        "chat\n" + prompt_hash + "\n" + model_.model_name + "\n" +
        detail::format_fixed(model_.temperature, 6) + "\n" + std::to_string(req.iteration));

    if (cache_) {
      if (auto hit = cache_->get(key)) {
        cache_hits_.fetch_add(1);
        return hit->get<GenerationRun>();
      }
    }

    ChatResult result = with_retries([&] {
      chat_calls_.fetch_add(1);
      return chat_.complete(req, model_);
    });

    GenerationRun run;
    run.item_id = req.item_id;
    run.iteration = req.iteration;
    run.model = model_;
    if (!result.provider_model.empty()) {
      run.model.model_name = result.provider_model;
    }
    run.prompt_hash = prompt_hash;
    run.output_text = std::move(result.text);
    run.prompt_tokens =
        result.prompt_tokens >= 0 ? result.prompt_tokens : count_tokens(req.prompt);
    run.completion_tokens = result.completion_tokens >= 0 ? result.completion_tokens
                                                          : count_tokens(run.output_text);
    run.timestamp = detail::iso8601_utc_now();

    if (cache_) {
      cache_->put(key, nlohmann::json(run));
    }
    return run;
  }

  /// Embeds each text into one unit vector (L2 norm within 1e-6 of 1, by
  /// construction). Deterministic for a fixed backend; cached like complete().
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) {
    if (texts.empty()) {
      throw EmptyInput("embed: no texts given");
    }
    for (const auto& t : texts) {
      if (t.empty()) {
        throw EmptyInput("embed: texts must be non-empty");
      }
    }
    const auto& cfg = embedding_.config();
    std::string key_material = "embed\n" + cfg.kind + "\n" + cfg.model_name + "\n" +
                               std::to_string(cfg.dimensions);
    for (const auto& t : texts) {
      key_material += "\n";
      key_material += detail::sha256_hex(t);
    }
    const std::string key = detail::sha256_hex(key_material);

    if (cache_) {
      if (auto hit = cache_->get(key)) {
        cache_hits_.fetch_add(1);
        return hit->get<std::vector<std::vector<double>>>();
      }
    }

    auto vectors = with_retries([&] {
      embed_calls_.fetch_add(1);
      return embedding_.embed(texts);
    });

    if (vectors.size() != texts.size()) {
      throw ProviderError("embedding backend returned " + std::to_string(vectors.size()) +
                          " vectors for " + std::to_string(texts.size()) + " texts");
    }
    const std::size_t dim = vectors.empty() ? 0 : vectors.front().size();
    for (auto& v : vectors) {
      if (v.size() != dim) {
        throw ProviderError("embedding backend returned vectors of mixed dimensionality");
      }
      double norm_sq = 0.0;
      for (double x : v) norm_sq += x * x;
      if (norm_sq == 0.0) {
        throw ProviderError("embedding backend returned a zero vector");
      }
      const double norm = std::sqrt(norm_sq);
      for (double& x : v) x /= norm;
    }

    if (cache_) {
      cache_->put(key, nlohmann::json(vectors));
    }
    return vectors;
  }

  const ModelConfig& model() const { return model_; }

  GatewayStats stats() const {
    return GatewayStats{chat_calls_.load(), embed_calls_.load(), cache_hits_.load()};
  }

 private:
  // Retries ProviderTransient with exponential backoff up to retry_cap
  // attempts. Permanent errors (ProviderError, AuthMissing) pass through.
  template <typename F>
  auto with_retries(F&& call) -> decltype(call()) {
    auto guard = acquire_slot();
    auto delay = opts_.retry.initial_delay;
    std::string last_error;
    for (int attempt = 1; attempt <= opts_.retry.retry_cap; ++attempt) {
      try {
        return call();
      } catch (const ProviderTransient& e) {
        last_error = e.what();
        if (attempt == opts_.retry.retry_cap) break;
        std::this_thread::sleep_for(delay);
        delay = std::min(delay * 2, opts_.retry.max_delay);
      }
    }
    throw ProviderError("provider failed after " + std::to_string(opts_.retry.retry_cap) +
                        " attempts; last error: " + last_error);
  }

  struct SlotGuard {
    std::counting_semaphore<>* sem;
    ~SlotGuard() {
      if (sem) sem->release();
    }
  };

  SlotGuard acquire_slot() {
    slots_.acquire();
    return SlotGuard{&slots_};
  }

  ChatBackend& chat_;
  EmbeddingBackend& embedding_;
  ModelConfig model_;
  GatewayOptions opts_;
  std::optional<ResponseCache> cache_;
  std::counting_semaphore<> slots_;
  std::atomic<long> chat_calls_{0};
  std::atomic<long> embed_calls_{0};
  std::atomic<long> cache_hits_{0};
};

}  // namespace qualbench
