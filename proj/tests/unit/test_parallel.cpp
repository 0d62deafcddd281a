// Every OpenMP kernel against its serial reference, at several thread counts.

#include <doctest.h>

#include <omp.h>

#include <random>

#include "awe/dtwbase.hpp"
#include "awe/embedders.hpp"
#include "awe/samediff.hpp"
#include "oracles.hpp"

using namespace awe;

namespace {

const int kThreadCounts[] = {1, 2, 3, 8};

struct ThreadScope {
  int saved = omp_get_max_threads();
  explicit ThreadScope(int n) { omp_set_num_threads(n); }
  ~ThreadScope() { omp_set_num_threads(saved); }
};

std::vector<featkit::FeatureSequence> sequences(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<featkit::FeatureSequence> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(oracle::random_sequence(3 + k % 9, 13, rng));
  return out;
}

}  // namespace

TEST_CASE("pairwise cosine") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> emb(301, std::vector<double>(32));
  for (auto& e : emb)
    for (auto& v : e) v = normal(rng);
  emb[40].assign(32, 0.0);
  const auto ref = samediff::pairwise_cosine_serial(emb);
  for (int t : kThreadCounts) {
    ThreadScope scope(t);
    const auto par = samediff::pairwise_cosine(emb);
    CHECK(par.scores == ref.scores);
    CHECK(par.zero_vectors == ref.zero_vectors);
  }
}

TEST_CASE("pairwise DTW") {
  const auto seqs = sequences(60, 2);
  for (auto metric : {dtwbase::LocalMetric::kCosine, dtwbase::LocalMetric::kEuclidean}) {
    const dtwbase::DtwConfig cfg{metric, true};
    const auto ref = dtwbase::pairwise_dtw_serial(seqs, cfg);
    for (int t : kThreadCounts) {
      ThreadScope scope(t);
      CHECK(dtwbase::pairwise_dtw(seqs, cfg) == ref);
    }
  }
}

TEST_CASE("embedding extraction") {
  const auto seqs = sequences(50, 3);
  gradnet::ArchDescriptor a;
  a.input_dim = 13;
  a.encoder_layers = 2;
  a.decoder_layers = 1;
  a.units = 12;
  a.embed_dim = 7;
  const auto m32 = gradnet::init_model<float>(a, 5);
  const auto m64 = gradnet::init_model<double>(a, 5);
  const auto ref32 = embedders::embed_all_serial<float>(seqs, m32);
  const auto ref64 = embedders::embed_all_serial<double>(seqs, m64);
  for (int t : kThreadCounts) {
    ThreadScope scope(t);
    CHECK(embedders::embed_all<float>(seqs, m32) == ref32);
    CHECK(embedders::embed_all<double>(seqs, m64) == ref64);
  }
}

TEST_CASE("minibatch training") {
  const auto seqs = sequences(40, 4);
  gradnet::ArchDescriptor a;
  a.kind = gradnet::ModelKind::kAeRnn;
  a.input_dim = 13;
  a.encoder_layers = 1;
  a.decoder_layers = 1;
  a.units = 10;
  a.embed_dim = 6;
  embedders::TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 7;
  cfg.seed = 3;
  cfg.parallel = false;
  const auto ref32 = embedders::train_ae<float>(seqs, a, cfg);
  const auto ref64 = embedders::train_ae<double>(seqs, a, cfg);
  cfg.parallel = true;
  for (int t : kThreadCounts) {
    ThreadScope scope(t);
    const auto p32 = embedders::train_ae<float>(seqs, a, cfg);
    const auto p64 = embedders::train_ae<double>(seqs, a, cfg);
    CHECK(p32.loss_trace == ref32.loss_trace);
    CHECK(p32.model.params == ref32.model.params);
    CHECK(p64.loss_trace == ref64.loss_trace);
    CHECK(p64.model.params == ref64.model.params);
  }
}

TEST_CASE("same-different evaluation") {
  const auto seqs = sequences(40, 5);
  std::vector<corpus::WordSegment> labels(seqs.size());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    labels[k].word_type = "w" + std::to_string(k % 5);
    labels[k].language = "L";
    labels[k].speaker = "s" + std::to_string(k % 3);
  }
  samediff::EmbedFn down = [](const featkit::FeatureSequence& f) {
    return embedders::downsample_embed(f);
  };
  double ref_emb = 0, ref_dtw = 0;
  {
    ThreadScope scope(1);
    ref_emb = samediff::same_different_eval(seqs, labels, down).average_precision;
    ref_dtw = samediff::same_different_dtw(seqs, labels).average_precision;
  }
  for (int t : kThreadCounts) {
    ThreadScope scope(t);
    CHECK(samediff::same_different_eval(seqs, labels, down).average_precision == ref_emb);
    CHECK(samediff::same_different_dtw(seqs, labels).average_precision == ref_dtw);
  }
}
