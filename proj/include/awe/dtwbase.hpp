#pragma once

// Dynamic time warping alignment cost between feature sequences.

#include <span>
#include <vector>

#include "awe/featkit.hpp"

namespace awe::dtwbase {

using featkit::FeatureSequence;

enum class LocalMetric { kCosine, kEuclidean };

struct DtwConfig {
  LocalMetric metric = LocalMetric::kCosine;
  bool normalize_by_path = true;
};

// Cosine distance is 1 - cos(a, b); a zero-norm frame is at distance 1 from
// everything.
double local_distance(std::span<const double> a, std::span<const double> b, LocalMetric metric);

// Steps (1,0), (0,1), (1,1), anchored at both corners. The path with the
// smallest accumulated cost wins, the shorter one on ties; with
// normalize_by_path the cost is divided by that path's length.
double dtw_cost(const FeatureSequence& x, const FeatureSequence& y, const DtwConfig& cfg = {});

// Costs of every pair i < j in row-major pair order (see samediff::pair_index).
std::vector<double> pairwise_dtw(std::span<const FeatureSequence> seqs, const DtwConfig& cfg = {});
std::vector<double> pairwise_dtw_serial(std::span<const FeatureSequence> seqs,
                                        const DtwConfig& cfg = {});

}  // namespace awe::dtwbase
