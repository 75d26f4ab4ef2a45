#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qualbench/errors.hpp"

namespace qualbench {

/// Cosine similarity: a.b / (|a||b|). Result lies in [-1, 1] up to
/// floating-point rounding.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine: dimension mismatch (" + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) {
    throw ZeroVector("cosine: empty vectors");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw ZeroVector("cosine: zero-magnitude vector");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return cosine(std::span<const double>(a), std::span<const double>(b));
}

/// Per-item iteration statistics: mean and population standard deviation
/// over the per-iteration similarity scores.
struct ScoreStats {
  std::vector<double> scores;
  double mean = 0.0;
  double sd = 0.0;

  friend bool operator==(const ScoreStats&, const ScoreStats&) = default;
};

/// The denominator is N, not N-1: the run's iterations are the whole
/// population, not a sample from a larger one.
inline ScoreStats iteration_stats(std::vector<double> scores) {
  if (scores.size() < 2) {
    throw TooFewScores("iteration_stats: need at least 2 scores, got " +
                       std::to_string(scores.size()));
  }
  double sum = 0.0;
  for (double s : scores) sum += s;
  const double mean = sum / static_cast<double>(scores.size());
  double ssd = 0.0;
  for (double s : scores) ssd += (s - mean) * (s - mean);
  const double sd = std::sqrt(ssd / static_cast<double>(scores.size()));
  return ScoreStats{std::move(scores), mean, sd};
}

}  // namespace qualbench
