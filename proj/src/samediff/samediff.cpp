#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "awe/error.hpp"
#include "awe/samediff.hpp"

namespace awe::samediff {

std::string to_string(PositiveMode mode) { return mode == PositiveMode::kAll ? "all" : "swdp"; }

PositiveMode positive_mode_from_string(const std::string& s) {
  if (s == "all") return PositiveMode::kAll;
  if (s == "swdp") return PositiveMode::kSwdp;
  throw InvalidConfig("unknown positive mode '" + s + "' (expected all or swdp)");
}

namespace {

std::vector<double> inverse_norms(const std::vector<std::vector<double>>& e,
                                  std::vector<std::size_t>& zero) {
  std::vector<double> inv(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i].size() != e.front().size())
      throw DimensionMismatch("embeddings of different dimensions");
    double s = 0.0;
    for (double v : e[i]) s += v * v;
    if (s == 0.0) zero.push_back(i);
    inv[i] = s == 0.0 ? 0.0 : 1.0 / std::sqrt(s);
  }
  return inv;
}

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b, double inv_a,
                       double inv_b) {
  if (inv_a == 0.0 || inv_b == 0.0) return 1.0;
  double dot = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) dot += a[d] * b[d];
  return 1.0 - dot * inv_a * inv_b;
}

void require_two(const std::vector<std::vector<double>>& e) {
  if (e.size() < 2) throw ShapeMismatch("pairwise scoring needs at least two embeddings");
}

}  // namespace

PairScores pairwise_cosine(const std::vector<std::vector<double>>& e) {
  require_two(e);
  PairScores out;
  const auto inv = inverse_norms(e, out.zero_vectors);
  const std::size_t n = e.size();
  out.scores.resize(n * (n - 1) / 2);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* row = out.scores.data() + (i * n - i * (i + 1) / 2);
    for (std::size_t j = i + 1; j < n; ++j) row[j - i - 1] = cosine_distance(e[i], e[j], inv[i], inv[j]);
  }
  return out;
}

PairScores pairwise_cosine_serial(const std::vector<std::vector<double>>& e) {
  require_two(e);
  PairScores out;
  const auto inv = inverse_norms(e, out.zero_vectors);
  for (std::size_t i = 0; i < e.size(); ++i)
    for (std::size_t j = i + 1; j < e.size(); ++j)
      out.scores.push_back(cosine_distance(e[i], e[j], inv[i], inv[j]));
  return out;
}

std::vector<ScoredPair> label_pairs(std::span<const double> scores,
                                    std::span<const corpus::WordSegment> labels) {
  const std::size_t n = labels.size();
  if (n < 2 || scores.size() != n * (n - 1) / 2)
    throw ShapeMismatch("score count does not match the number of labeled segments");
  std::vector<ScoredPair> out;
  out.reserve(scores.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j, ++k)
      out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), scores[k],
                     labels[i].same_type(labels[j]),
                     labels[i].language == labels[j].language &&
                         labels[i].speaker == labels[j].speaker});
  return out;
}

EvalReport average_precision(std::span<const ScoredPair> pairs, PositiveMode mode) {
  std::vector<std::uint32_t> order;
  order.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    if (!std::isfinite(p.score)) throw NumericError("non-finite pair score");
    if (mode == PositiveMode::kSwdp && p.same_word && p.same_speaker) continue;
    order.push_back(static_cast<std::uint32_t>(k));
  }
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto& pa = pairs[a];
    const auto& pb = pairs[b];
    if (pa.score != pb.score) return pa.score < pb.score;
    if (pa.i != pb.i) return pa.i < pb.i;
    return pa.j < pb.j;
  });

  EvalReport r;
  r.mode = mode;
  r.n_pairs = order.size();
  for (auto k : order) r.n_positive += pairs[k].same_word;
  if (r.n_positive == 0) throw NoPositivePairs("no positive pairs to rank");

  double sum = 0.0;
  std::size_t hits = 0;
  r.pr_curve.reserve(r.n_positive);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& p = pairs[order[rank]];
    if (!p.same_word) continue;
    ++hits;
    const double precision = static_cast<double>(hits) / static_cast<double>(rank + 1);
    sum += precision;
    r.pr_curve.push_back(
        {p.score, precision, static_cast<double>(hits) / static_cast<double>(r.n_positive)});
  }
  r.average_precision = sum / static_cast<double>(r.n_positive);
  return r;
}

EvalReport evaluate_embeddings(const std::vector<std::vector<double>>& embeddings,
                               std::span<const corpus::WordSegment> labels, PositiveMode mode) {
  if (embeddings.size() != labels.size())
    throw ShapeMismatch("one label per embedding required");
  const auto scored = pairwise_cosine(embeddings);
  auto report = average_precision(label_pairs(scored.scores, labels), mode);
  report.n_zero_vectors = scored.zero_vectors.size();
  return report;
}

EvalReport same_different_eval(std::span<const featkit::FeatureSequence> segments,
                               std::span<const corpus::WordSegment> labels, const EmbedFn& embed,
                               PositiveMode mode) {
  std::vector<std::vector<double>> embeddings(segments.size());
  const auto n = static_cast<std::ptrdiff_t>(segments.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) embeddings[i] = embed(segments[i]);
  return evaluate_embeddings(embeddings, labels, mode);
}

EvalReport same_different_dtw(std::span<const featkit::FeatureSequence> segments,
                              std::span<const corpus::WordSegment> labels,
                              const dtwbase::DtwConfig& cfg, PositiveMode mode) {
  if (segments.size() != labels.size()) throw ShapeMismatch("one label per segment required");
  const auto scores = dtwbase::pairwise_dtw(segments, cfg);
  return average_precision(label_pairs(scores, labels), mode);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["average_precision"] = average_precision;
  j["n_pairs"] = n_pairs;
  j["n_positive"] = n_positive;
  j["n_zero_vectors"] = n_zero_vectors;
  j["mode"] = to_string(mode);
  j["tie_rule"] = tie_rule;
  j["ap_definition"] = "mean precision at each positive rank";
  j["pr_curve_points"] = pr_curve.size();
  return j.dump(2);
}

void EvalReport::write_json(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << to_json() << '\n';
}

void EvalReport::write_pr_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os.precision(17);
  os << "threshold,precision,recall\n";
  for (const auto& p : pr_curve) os << p.threshold << ',' << p.precision << ',' << p.recall << '\n';
}

}  // namespace awe::samediff
