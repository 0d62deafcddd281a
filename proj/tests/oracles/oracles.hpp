#pragma once

// Slow, independently written reference implementations used by the unit
// tests and the acceptance gate.

#include <cstdint>
#include <filesystem>
#include <string>
#include <random>
#include <span>
#include <vector>

#include "awe/dtwbase.hpp"
#include "awe/featkit.hpp"
#include "awe/samediff.hpp"

namespace oracle {

// O(N^2) DFT, filterbank and DCT written from the textbook formulas.
std::vector<std::vector<double>> slow_mfcc(const std::vector<double>& samples, int sample_rate,
                                           const awe::featkit::MfccConfig& cfg);

// Sorts (score, i, j) tuples and walks the ranking; SWDP drops same-word
// same-speaker pairs before sorting.
double brute_force_ap(std::span<const awe::samediff::ScoredPair> pairs,
                      awe::samediff::PositiveMode mode);

// Enumerates every monotone corner-to-corner path and keeps the cheapest,
// the shortest among equals.
double dtw_by_enumeration(const awe::featkit::FeatureSequence& x,
                          const awe::featkit::FeatureSequence& y,
                          const awe::dtwbase::DtwConfig& cfg);

double cosine_distance(std::span<const double> a, std::span<const double> b);

awe::featkit::FeatureSequence random_sequence(std::size_t T, std::size_t D, std::mt19937_64& rng,
                                              double scale = 1.0);

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
