#include <cmath>
#include <limits>

#include "awe/dtwbase.hpp"
#include "awe/error.hpp"

namespace awe::dtwbase {

double local_distance(std::span<const double> a, std::span<const double> b, LocalMetric metric) {
  if (metric == LocalMetric::kEuclidean) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return std::sqrt(s);
  }
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    ab += a[d] * b[d];
    aa += a[d] * a[d];
    bb += b[d] * b[d];
  }
  if (aa == 0.0 || bb == 0.0) return 1.0;
  // Rounding can push the cosine a hair past 1.
  return std::max(0.0, 1.0 - ab / (std::sqrt(aa) * std::sqrt(bb)));
}

double dtw_cost(const FeatureSequence& x, const FeatureSequence& y, const DtwConfig& cfg) {
  if (x.empty() || y.empty()) throw ShapeMismatch("DTW needs non-empty sequences");
  if (x.dim() != y.dim())
    throw DimensionMismatch("DTW between dimensions " + std::to_string(x.dim()) + " and " +
                            std::to_string(y.dim()));
  const std::size_t n = x.num_frames(), m = y.num_frames();

  // Two rolling rows of (accumulated cost, path length).
  std::vector<double> prev_cost(m), cur_cost(m);
  std::vector<std::size_t> prev_len(m), cur_len(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double local = local_distance(x.frame(i), y.frame(j), cfg.metric);
      if (i == 0 && j == 0) {
        cur_cost[0] = local;
        cur_len[0] = 1;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_len = 0;
      auto consider = [&](double c, std::size_t l) {
        if (c < best || (c == best && l < best_len)) {
          best = c;
          best_len = l;
        }
      };
      if (i > 0 && j > 0) consider(prev_cost[j - 1], prev_len[j - 1]);
      if (i > 0) consider(prev_cost[j], prev_len[j]);
      if (j > 0) consider(cur_cost[j - 1], cur_len[j - 1]);
      cur_cost[j] = best + local;
      cur_len[j] = best_len + 1;
    }
    std::swap(prev_cost, cur_cost);
    std::swap(prev_len, cur_len);
  }
  const double cost = prev_cost[m - 1];
  return cfg.normalize_by_path ? cost / static_cast<double>(prev_len[m - 1]) : cost;
}

std::vector<double> pairwise_dtw(std::span<const FeatureSequence> seqs, const DtwConfig& cfg) {
  const std::size_t n = seqs.size();
  std::vector<double> out(n < 2 ? 0 : n * (n - 1) / 2);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const std::size_t base = i * n - i * (i + 1) / 2;  // index of pair (i, i+1)
    for (std::size_t j = i + 1; j < n; ++j) out[base + (j - i - 1)] = dtw_cost(seqs[i], seqs[j], cfg);
  }
  return out;
}

std::vector<double> pairwise_dtw_serial(std::span<const FeatureSequence> seqs,
                                        const DtwConfig& cfg) {
  std::vector<double> out;
  const std::size_t n = seqs.size();
  out.reserve(n < 2 ? 0 : n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out.push_back(dtw_cost(seqs[i], seqs[j], cfg));
  return out;
}

}  // namespace awe::dtwbase
