#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"
#include "qualbench/detail/util.hpp"
#include "qualbench/errors.hpp"

namespace qualbench {

/// Disk-backed response cache, one JSON file per content-hash key. Besides
/// saving repeat API spend, cached responses double as run provenance:
/// providers drift over time, the cache does not.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::optional<nlohmann::json> get(const std::string& key) const {
    const auto path = path_for(key);
    std::lock_guard<std::mutex> lock(mu_);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;  // unreadable entry counts as a miss
    }
  }

  void put(const std::string& key, const nlohmann::json& value) const {
    const auto path = path_for(key);
    const auto tmp = path.string() + ".tmp";
    std::lock_guard<std::mutex> lock(mu_);
    detail::write_text_file(tmp, value.dump(2));
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
      throw IoFailure("cache write failed: " + path.string() + ": " + ec.message());
    }
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path path_for(const std::string& key) const {
    return dir_ / (key + ".json");
  }

  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

}  // namespace qualbench
