#include <doctest.h>

#include <cmath>
#include <random>

#include "awe/embedders.hpp"
#include "awe/error.hpp"
#include "oracles.hpp"

using namespace awe;
using namespace awe::embedders;
using gradnet::ModelKind;

namespace {

ArchDescriptor tiny(ModelKind kind, std::size_t classes = 0) {
  ArchDescriptor a;
  a.kind = kind;
  a.input_dim = 3;
  a.encoder_layers = 2;
  a.decoder_layers = kind == ModelKind::kClassifierRnn ? 0 : 2;
  a.units = 8;
  a.embed_dim = 6;
  a.num_classes = classes;
  return a;
}

ModelParameters<double> random_model(const ArchDescriptor& a, std::mt19937_64& rng) {
  auto m = gradnet::init_model<double>(a, rng());
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (std::size_t t = 0; t < m.params.size(); ++t)
    for (auto& v : m.params[t].data) v = u(rng);
  return m;
}

double sum_squares(const FeatureSequence& f) {
  double s = 0;
  for (double v : f.data()) s += v * v;
  return s;
}

template <typename Loss, typename Grad>
double fd_error(ModelParameters<double>& m, Loss&& loss, Grad&& grad) {
  auto g = m.params.zeros_like();
  grad(g);
  double d2 = 0, a2 = 0;
  for (std::size_t t = 0; t < m.params.size(); ++t)
    for (std::size_t k = 0; k < m.params[t].data.size(); ++k) {
      auto& p = m.params[t].data[k];
      const double keep = p;
      p = keep + 1e-5;
      const double up = loss();
      p = keep - 1e-5;
      const double down = loss();
      p = keep;
      const double num = (up - down) / 2e-5;
      d2 += (num - g[t].data[k]) * (num - g[t].data[k]);
      a2 += num * num;
    }
  return std::sqrt(d2 / a2);
}

// Two word types with opposite constant frames, easy to tell apart.
void separable(std::vector<FeatureSequence>& feats, std::vector<corpus::WordSegment>& labels) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    auto f = oracle::random_sequence(4 + i % 3, 3, rng, 0.1);
    for (std::size_t t = 0; t < f.num_frames(); ++t) f(t, 0) += i % 2 ? 1.0 : -1.0;
    feats.push_back(f);
    corpus::WordSegment s;
    s.word_type = i % 2 ? "yes" : "no";
    s.language = "L";
    s.speaker = "s";
    labels.push_back(s);
  }
}

}  // namespace

TEST_CASE("reconstruction losses with zero parameters") {
  std::mt19937_64 rng(1);
  const auto x = oracle::random_sequence(5, 3, rng);
  const auto y = oracle::random_sequence(7, 3, rng);
  const auto m = gradnet::zero_model<double>(tiny(ModelKind::kCaeRnn));
  CHECK(ae_loss(to_segment<double>(x), m) == doctest::Approx(sum_squares(x)).epsilon(1e-14));
  CHECK(cae_loss(to_segment<double>(x), to_segment<double>(y), m) ==
        doctest::Approx(sum_squares(y)).epsilon(1e-14));
}

TEST_CASE("cae(X, X) equals ae(X) exactly") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 30; ++k) {
    const auto m = random_model(tiny(ModelKind::kCaeRnn), rng);
    const auto x = to_segment<double>(oracle::random_sequence(1 + k % 6, 3, rng));
    CHECK(cae_loss(x, x, m) == ae_loss(x, m));
    auto g1 = m.params.zeros_like(), g2 = m.params.zeros_like();
    CHECK(ae_loss_grad(x, m, g1) == cae_loss_grad(x, x, m, g2));
    CHECK(g1 == g2);
  }
}

TEST_CASE("classifier loss") {
  std::mt19937_64 rng(3);
  const auto x = to_segment<double>(oracle::random_sequence(4, 3, rng));
  const auto zero = gradnet::zero_model<double>(tiny(ModelKind::kClassifierRnn, 4));
  CHECK(classifier_loss(x, 1, zero) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK_THROWS_AS(classifier_loss(x, 4, zero), ClassOutOfRange);

  for (int k = 0; k < 10; ++k) {
    const auto m = random_model(tiny(ModelKind::kClassifierRnn, 5), rng);
    const auto p = classify(x, m);
    double sum = 0;
    for (double v : p) sum += v;
    CHECK(sum == doctest::Approx(1.0));
    for (std::size_t c = 0; c < 5; ++c) {
      const double l = classifier_loss(x, c, m);
      CHECK(l >= 0.0);
      CHECK(l == doctest::Approx(-std::log(p[c])).epsilon(1e-12));
    }
  }

  // A class whose logit dominates has loss near 0.
  auto sure = gradnet::zero_model<double>(tiny(ModelKind::kClassifierRnn, 3));
  sure.params[sure.layout.classifier.b].data = {0.0, 800.0, 0.0};
  CHECK(classifier_loss(x, 1, sure) == 0.0);
  const auto ae = gradnet::zero_model<double>(tiny(ModelKind::kAeRnn));
  CHECK_THROWS_AS(classifier_loss(x, 0, ae), ShapeMismatch);
}

TEST_CASE("loss gradients agree with central differences") {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(40 + seed);
    const auto x = to_segment<double>(oracle::random_sequence(1 + rng() % 5, 3, rng));
    const auto y = to_segment<double>(oracle::random_sequence(1 + rng() % 5, 3, rng));
    auto ae = random_model(tiny(ModelKind::kAeRnn), rng);
    CHECK(fd_error(ae, [&] { return ae_loss(x, ae); }, [&](auto& g) { ae_loss_grad(x, ae, g); }) <
          1e-4);
    auto cae = random_model(tiny(ModelKind::kCaeRnn), rng);
    CHECK(fd_error(cae, [&] { return cae_loss(x, y, cae); },
                   [&](auto& g) { cae_loss_grad(x, y, cae, g); }) < 1e-4);
    const std::size_t K = 2 + rng() % 5, k = rng() % K;
    auto cls = random_model(tiny(ModelKind::kClassifierRnn, K), rng);
    CHECK(fd_error(cls, [&] { return classifier_loss(x, k, cls); },
                   [&](auto& g) { classifier_loss_grad(x, k, cls, g); }) < 1e-4);
  }
}

TEST_CASE("segment dimension must match the model") {
  std::mt19937_64 rng(4);
  const auto m = gradnet::zero_model<double>(tiny(ModelKind::kAeRnn));
  CHECK_THROWS_AS(ae_loss(to_segment<double>(oracle::random_sequence(3, 4, rng)), m),
                  ShapeMismatch);
}

TEST_CASE("downsampling") {
  std::mt19937_64 rng(5);
  const auto x10 = oracle::random_sequence(10, 13, rng);
  const auto d10 = downsample_embed(x10);
  REQUIRE(d10.size() == 130);
  CHECK(std::vector<double>(x10.data().begin(), x10.data().end()) == d10);

  const auto x19 = oracle::random_sequence(19, 13, rng);
  const auto d19 = downsample_embed(x19);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t d = 0; d < 13; ++d) CHECK(d19[i * 13 + d] == x19(2 * i, d));

  const auto x4 = oracle::random_sequence(4, 2, rng);
  const auto d4 = downsample_embed(x4, 3);  // positions 0, 1.5, 3
  CHECK(d4[2] == doctest::Approx(0.5 * x4(1, 0) + 0.5 * x4(2, 0)));
  CHECK(d4[4] == x4(3, 0));

  const auto x1 = oracle::random_sequence(1, 13, rng);
  const auto d1 = downsample_embed(x1);
  CHECK(d1.size() == 130);
  CHECK(d1[129] == x1(0, 12));
  CHECK(kDownsampleFrames == 10);
}

TEST_CASE("embeddings") {
  std::mt19937_64 rng(6);
  ArchDescriptor a;
  a.input_dim = 13;
  a.encoder_layers = 1;
  a.decoder_layers = 1;
  a.units = 16;
  CHECK(a.embed_dim == 130);
  const auto m = gradnet::init_model<float>(a, 1);
  const auto x = oracle::random_sequence(1, 13, rng);
  const auto z = embed(x, m);
  CHECK(z.size() == 130);
  CHECK(embed(x, m) == z);
  std::vector<FeatureSequence> many;
  for (int k = 0; k < 20; ++k) many.push_back(oracle::random_sequence(2 + k, 13, rng));
  CHECK(embed_all<float>(many, m) == embed_all_serial<float>(many, m));
}

TEST_CASE("AE training") {
  std::mt19937_64 rng(7);
  CHECK_THROWS_AS(train_ae<double>({}, tiny(ModelKind::kAeRnn), {}), EmptyTrainingSet);
  std::vector<FeatureSequence> only_short = {oracle::random_sequence(1, 3, rng)};
  CHECK_THROWS_AS(train_ae<double>(only_short, tiny(ModelKind::kAeRnn), {}), EmptyTrainingSet);

  TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);

  // One repeated segment is memorized.
  std::vector<FeatureSequence> one(4, oracle::random_sequence(5, 3, rng));
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.lr = 0.01;
  cfg.batch_size = 4;
  cfg.seed = 1;
  auto res = train_ae<double>(one, tiny(ModelKind::kAeRnn), cfg);
  REQUIRE(res.loss_trace.size() == 200);
  CHECK(res.loss_trace.back() < 0.02 * res.loss_trace.front());
  CHECK(res.items_per_epoch == 4);
}

TEST_CASE("AE loss decreases over the first epochs on a toy set") {
  std::mt19937_64 rng(8);
  std::vector<FeatureSequence> toy;
  for (int k = 0; k < 50; ++k) toy.push_back(oracle::random_sequence(3 + k % 6, 3, rng));
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 2;
  auto t = train_ae<double>(toy, tiny(ModelKind::kAeRnn), cfg).loss_trace;
  CHECK(t[1] <= t[0]);
  CHECK(t[2] <= t[1]);
}

TEST_CASE("CAE training") {
  std::mt19937_64 rng(9);
  std::vector<FeatureSequence> segs;
  for (int k = 0; k < 8; ++k) segs.push_back(oracle::random_sequence(3 + k % 3, 3, rng));
  segs.push_back(oracle::random_sequence(1, 3, rng));
  corpus::PairList pairs;
  pairs.pairs = {{0, 1}, {2, 3}, {4, 5}, {6, 8}};
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.pretrain_epochs = 2;
  cfg.batch_size = 2;
  cfg.seed = 4;
  auto a = train_cae<double>(segs, pairs, tiny(ModelKind::kCaeRnn), cfg);
  CHECK(a.items_per_epoch == 6);  // both directions of the three usable pairs
  CHECK(a.dropped_short == 1);
  CHECK(a.pretrain_epochs == 2);
  CHECK(a.loss_trace.size() == 5);
  auto b = train_cae<double>(segs, pairs, tiny(ModelKind::kCaeRnn), cfg);
  CHECK(a.model.params == b.model.params);
  CHECK(a.loss_trace == b.loss_trace);

  cfg.pretrain_epochs = 0;
  auto c = train_cae<double>(segs, pairs, tiny(ModelKind::kCaeRnn), cfg);
  CHECK(c.pretrain_epochs == 0);
  CHECK(c.loss_trace.size() == 3);
  CHECK_THROWS_AS(train_cae<double>(segs, corpus::PairList{}, tiny(ModelKind::kCaeRnn), cfg),
                  NoPairsAvailable);
}

TEST_CASE("classifier training") {
  std::vector<FeatureSequence> feats;
  std::vector<corpus::WordSegment> labels;
  separable(feats, labels);
  const auto vocab = corpus::build_vocabulary(labels);
  REQUIRE(vocab.size() == 2);

  // An extra segment outside the vocabulary is dropped and counted.
  feats.push_back(feats[0]);
  labels.push_back(labels[0]);
  labels.back().language = "OTHER";

  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.lr = 0.01;
  cfg.batch_size = 5;
  auto res = train_classifier<double>(feats, labels, vocab, tiny(ModelKind::kCaeRnn), cfg);
  CHECK(res.model.arch.kind == ModelKind::kClassifierRnn);
  CHECK(res.model.arch.num_classes == 2);
  CHECK(res.dropped_unknown == 1);
  CHECK(res.items_per_epoch == 10);
  CHECK(classifier_accuracy<double>(feats, labels, vocab, res.model) == 1.0);
  // The embedding is available for the out-of-vocabulary language too.
  CHECK(embed(feats.back(), res.model).size() == 6);
}
