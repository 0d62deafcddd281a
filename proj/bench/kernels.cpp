// Serial reference against the OpenMP path for each parallel kernel.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>

#include "awe/dtwbase.hpp"
#include "awe/embedders.hpp"
#include "awe/samediff.hpp"

using namespace awe;

namespace {

std::vector<featkit::FeatureSequence> sequences(std::size_t n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> len(20, 52);
  std::vector<featkit::FeatureSequence> out;
  for (std::size_t k = 0; k < n; ++k) {
    featkit::FeatureSequence f(len(rng), 13);
    for (auto& v : f.data()) v = normal(rng);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<std::vector<double>> embeddings(std::size_t n) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> out(n, std::vector<double>(130));
  for (auto& e : out)
    for (auto& v : e) v = normal(rng);
  return out;
}

gradnet::ArchDescriptor bench_arch() {
  gradnet::ArchDescriptor a;
  a.kind = gradnet::ModelKind::kAeRnn;
  a.encoder_layers = a.decoder_layers = 1;
  a.units = 48;
  a.embed_dim = 32;
  return a;
}

void BM_PairwiseCosine(benchmark::State& state) {
  const auto e = embeddings(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(state.range(1) ? samediff::pairwise_cosine(e)
                                            : samediff::pairwise_cosine_serial(e));
}

void BM_PairwiseDtw(benchmark::State& state) {
  const auto s = sequences(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(state.range(1) ? dtwbase::pairwise_dtw(s)
                                            : dtwbase::pairwise_dtw_serial(s));
}

void BM_EmbedAll(benchmark::State& state) {
  const auto s = sequences(static_cast<std::size_t>(state.range(0)));
  const auto m = gradnet::init_model<float>(bench_arch(), 1);
  for (auto _ : state)
    benchmark::DoNotOptimize(state.range(1) ? embedders::embed_all<float>(s, m)
                                            : embedders::embed_all_serial<float>(s, m));
}

void BM_TrainEpoch(benchmark::State& state) {
  const auto s = sequences(static_cast<std::size_t>(state.range(0)));
  embedders::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 32;
  cfg.parallel = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(embedders::train_ae<float>(s, bench_arch(), cfg));
}

}  // namespace

BENCHMARK(BM_PairwiseCosine)->ArgsProduct({{1000, 3000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseDtw)->ArgsProduct({{200}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EmbedAll)->ArgsProduct({{500}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainEpoch)->ArgsProduct({{256}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
