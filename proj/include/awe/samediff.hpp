#pragma once

// Same-different word discrimination: all-pairs scoring and average precision.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "awe/corpus.hpp"
#include "awe/dtwbase.hpp"
#include "awe/featkit.hpp"

namespace awe::samediff {

// Position of pair (i, j), i < j, among all pairs of n items in row-major order.
inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n) {
  return i * n - i * (i + 1) / 2 + (j - i - 1);
}

struct ScoredPair {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double score = 0.0;  // distance: lower means more alike
  bool same_word = false;
  bool same_speaker = false;
};

// ALL: every same-word pair is positive. SWDP: same word, different speaker
// is positive; same-word same-speaker pairs are left out of the ranking.
enum class PositiveMode { kAll, kSwdp };
std::string to_string(PositiveMode mode);
PositiveMode positive_mode_from_string(const std::string& s);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct EvalReport {
  double average_precision = 0.0;
  std::vector<PrPoint> pr_curve;  // one point per positive, in rank order
  std::size_t n_pairs = 0;        // pairs ranked
  std::size_t n_positive = 0;
  std::size_t n_zero_vectors = 0;
  PositiveMode mode = PositiveMode::kAll;
  std::string tie_rule = "score-asc-then-pair-id";

  std::string to_json() const;
  void write_json(const std::string& path) const;
  void write_pr_csv(const std::string& path) const;
};

struct PairScores {
  std::vector<double> scores;             // pair_index order
  std::vector<std::size_t> zero_vectors;  // embeddings with zero norm
};

// 1 - cos over all pairs; pairs touching a zero vector score 1.
PairScores pairwise_cosine(const std::vector<std::vector<double>>& embeddings);
PairScores pairwise_cosine_serial(const std::vector<std::vector<double>>& embeddings);

std::vector<ScoredPair> label_pairs(std::span<const double> scores,
                                    std::span<const corpus::WordSegment> labels);

// Mean precision at the rank of each positive, ranking by ascending score
// with pair id as the tie-breaker. Throws NoPositivePairs.
EvalReport average_precision(std::span<const ScoredPair> pairs,
                             PositiveMode mode = PositiveMode::kAll);

using EmbedFn = std::function<std::vector<double>(const featkit::FeatureSequence&)>;

EvalReport same_different_eval(std::span<const featkit::FeatureSequence> segments,
                               std::span<const corpus::WordSegment> labels, const EmbedFn& embed,
                               PositiveMode mode = PositiveMode::kAll);
EvalReport evaluate_embeddings(const std::vector<std::vector<double>>& embeddings,
                               std::span<const corpus::WordSegment> labels,
                               PositiveMode mode = PositiveMode::kAll);
EvalReport same_different_dtw(std::span<const featkit::FeatureSequence> segments,
                              std::span<const corpus::WordSegment> labels,
                              const dtwbase::DtwConfig& cfg = {},
                              PositiveMode mode = PositiveMode::kAll);

}  // namespace awe::samediff
