#include <doctest.h>

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "awe/dtwbase.hpp"
#include "awe/error.hpp"
#include "awe/synthlang.hpp"
#include "oracles.hpp"

using namespace awe;
using namespace awe::synthlang;

namespace {

double correlation(const FeatureSequence& a, const FeatureSequence& b) {
  const auto x = a.data(), y = b.data();
  const std::size_t n = std::min(x.size(), y.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double mean_word_correlation(const Language& a, const Language& b) {
  double s = 0;
  for (std::size_t v = 0; v < a.templates.size(); ++v)
    s += correlation(a.templates[v], b.templates[v]);
  return s / static_cast<double>(a.templates.size());
}

LanguageSpec spec(std::uint64_t seed, std::size_t V = 20) {
  LanguageSpec s;
  s.vocab_size = V;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("languages are deterministic and respect their bounds") {
  auto a = gen_language(spec(1));
  auto b = gen_language(spec(1));
  REQUIRE(a.templates.size() == 20);
  CHECK(a.templates == b.templates);
  CHECK(a.words == b.words);
  std::set<std::string> unique(a.words.begin(), a.words.end());
  CHECK(unique.size() == 20);
  for (const auto& t : a.templates) {
    CHECK(t.dim() == 13);
    CHECK(t.num_frames() >= 20);
    CHECK(t.num_frames() <= 40);
    for (std::size_t d = 0; d < 13; ++d) {
      double mean = 0;
      for (std::size_t f = 0; f < t.num_frames(); ++f) mean += t(f, d) / t.num_frames();
      CHECK(std::abs(mean) < 1e-5);
    }
  }
  CHECK_FALSE(gen_language(spec(2)).templates == a.templates);

  auto bad = spec(1);
  bad.vocab_size = 1;
  CHECK_THROWS_AS(gen_language(bad), InvalidConfig);
  bad = spec(1);
  bad.min_length = 3;
  CHECK_THROWS_AS(gen_language(bad), InvalidConfig);
  bad = spec(1);
  bad.spectral_decay = 0.0;
  CHECK_THROWS_AS(gen_language(bad), InvalidConfig);
}

TEST_CASE("independent languages are uncorrelated on average") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto s1 = spec(100 + seed), s2 = spec(200 + seed);
    s1.min_length = s1.max_length = s2.min_length = s2.max_length = 60;
    CHECK(std::abs(mean_word_correlation(gen_language(s1), gen_language(s2))) < 0.2);
  }
}

TEST_CASE("spectral shaping") {
  auto t = random_trajectory(30, 13, 1.0, 5, 4);
  auto same = t;
  shape_template(same, spec(1));
  CHECK(same == t);

  auto s = spec(1);
  s.spectral_decay = 0.5;
  auto a = t, b = t;
  shape_template(a, s);
  shape_template(b, s);
  CHECK(a == b);
  CHECK_FALSE(a == t);
  s.seed = 2;
  shape_template(b = t, s);
  CHECK_FALSE(a == b);
}

TEST_CASE("instances") {
  auto lang = gen_language(spec(3));
  const auto& tmpl = lang.templates[0];
  InstanceSpec ident;
  ident.warp = 0;
  ident.noise = 0;
  ident.offset_scale = 0;
  ident.speaker = "a";
  CHECK(gen_instance(tmpl, ident, 1) == tmpl);

  InstanceSpec warp = ident;
  warp.warp = 0.5;
  const std::size_t T = tmpl.num_frames();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto x = gen_instance(tmpl, warp, seed);
    CHECK(x.num_frames() >= T);
    CHECK(x.num_frames() <= static_cast<std::size_t>(std::floor(1.5 * T)));
    CHECK(dtwbase::dtw_cost(tmpl, x, {dtwbase::LocalMetric::kEuclidean, true}) < 1e-6);
  }

  InstanceSpec spk = warp;
  spk.offset_scale = 1.0;
  auto x = gen_instance(tmpl, spk, 1);
  auto y = gen_instance(tmpl, spk, 2);
  const auto off = speaker_offset("a", 1.0, 13);
  CHECK(off == speaker_offset("a", 1.0, 13));
  CHECK_FALSE(off == speaker_offset("b", 1.0, 13));
  CHECK(x(0, 3) == doctest::Approx(tmpl(0, 3) + off[3]));
  CHECK(y(0, 3) == doctest::Approx(tmpl(0, 3) + off[3]));

  InstanceSpec bad = ident;
  bad.warp = 1.0;
  CHECK_THROWS_AS(gen_instance(tmpl, bad, 0), InvalidConfig);
}

TEST_CASE("derived languages") {
  FamilySpec fam;
  fam.parent = spec(5);
  fam.drift = 0;
  fam.resample_fraction = 0;
  fam.seed = 9;
  auto parent = gen_language(fam.parent);
  CHECK(derive_language(fam).templates == parent.templates);
  fam.drift = 0.3;
  CHECK(derive_language(fam).templates == derive_language(fam).templates);

  fam.resample_fraction = 0.5;
  auto child = derive_language(fam);
  int identical_length = 0;
  for (std::size_t v = 0; v < 20; ++v)
    identical_length += child.templates[v].num_frames() == parent.templates[v].num_frames();
  CHECK(identical_length >= 10);

  fam.drift = -1;
  CHECK_THROWS_AS(derive_language(fam), InvalidConfig);
}

TEST_CASE("relatedness falls as drift grows") {
  const std::vector<double> drifts = {0.0, 0.1, 0.3, 1.0, 3.0, 30.0};
  std::vector<double> mean(drifts.size(), 0.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (std::size_t k = 0; k < drifts.size(); ++k) {
      FamilySpec fam;
      fam.parent = spec(seed);
      fam.parent.spectral_decay = seed % 2 ? 0.8 : 1.0;
      fam.drift = drifts[k];
      fam.resample_fraction = 0;
      fam.seed = 1000 + seed;
      mean[k] += mean_word_correlation(gen_language(fam.parent), derive_language(fam)) / 10;
    }
  CHECK(mean[0] == doctest::Approx(1.0));
  for (std::size_t k = 1; k < drifts.size(); ++k) CHECK(mean[k] <= mean[k - 1]);
  CHECK(std::abs(mean.back()) < 0.2);
}

TEST_CASE("corpus generation") {
  auto a = gen_language(spec(7));
  auto b = gen_language(spec(8));
  b.code = "L1";
  CorpusSpec cs;
  cs.speakers_per_language = 5;
  cs.instances_per_word = 4;
  cs.utd_pairs = 100;
  auto c = gen_corpus({a, b}, cs);
  CHECK(c.languages == std::vector<std::string>{"L0", "L1"});
  CHECK(c.segments.size() == 800);
  CHECK(c.select({"L1"}).size() == 400);
  REQUIRE(c.utd_pairs.size() == 2);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(c.utd_pairs[l].size() == 100);
    CHECK(c.utd_pairs[l].source == corpus::PairSource::kUtd);
    int wrong = 0;
    for (auto [i, j] : c.utd_pairs[l].pairs) {
      CHECK(c.segments[i].language == c.languages[l]);
      CHECK(c.segments[j].language == c.languages[l]);
      wrong += !c.segments[i].same_type(c.segments[j]);
    }
    CHECK(wrong == 30);
  }
  for (std::size_t i = 0; i < c.features.size(); i += 37)
    for (double v : c.features[i].data()) CHECK(static_cast<double>(static_cast<float>(v)) == v);
  auto again = gen_corpus({a, b}, cs);
  CHECK(again.features == c.features);
  CHECK(again.utd_pairs == c.utd_pairs);
}

TEST_CASE("without false pairs the noisy list is the true-pair sample") {
  auto lang = gen_language(spec(11, 6));
  CorpusSpec cs;
  cs.speakers_per_language = 2;
  cs.instances_per_word = 3;
  auto c = gen_corpus({lang}, cs);
  auto utd = make_utd_pairs(c.segments, 40, 0.0, 5);
  auto truth = corpus::sample_true_pairs(c.segments, 40, 5).list;
  CHECK(utd.pairs == truth.pairs);
  CHECK_THROWS_AS(make_utd_pairs(c.segments, 40, 1.5, 5), InvalidConfig);
}

TEST_CASE("corpus directory round trip") {
  auto lang = gen_language(spec(12, 5));
  CorpusSpec cs;
  cs.speakers_per_language = 2;
  cs.instances_per_word = 2;
  cs.utd_pairs = 10;
  auto c = gen_corpus({lang}, cs);
  oracle::TempDir dir;
  write_corpus(c, dir.path().string(), "{\"note\": 1}");
  auto back = read_corpus(dir.path().string());
  CHECK(back.languages == c.languages);
  CHECK(back.features == c.features);
  CHECK(back.utd_pairs == c.utd_pairs);
  REQUIRE(back.segments.size() == c.segments.size());
  CHECK(back.segments[3].segment_id == c.segments[3].segment_id);
  CHECK(back.segments[3].speaker == c.segments[3].speaker);
}

TEST_CASE("default plan layout and manifest") {
  auto p = default_plan(0);
  CHECK(p.well_resourced_codes().size() == 7);
  CHECK(p.zero_resource_codes() == std::vector<std::string>{"Z0", "Z1", "Z2", "Z3", "Z4", "Z5"});
  CHECK(p.development_codes().empty());
  CHECK(p.corpus.speakers_per_language == 6);
  CHECK(p.corpus.instances_per_word == 5);
  CHECK(p.corpus.false_pair_fraction == 0.3);
  for (const auto& z : p.zero_resource) CHECK(z.parent.vocab_size == 30);
  auto d = default_plan(0, true);
  CHECK(d.development_codes() == std::vector<std::string>{"DEV"});
  CHECK(d.languages().size() == 14);

  auto back = CorpusPlan::from_manifest_json(d.manifest_json());
  CHECK(back.manifest_json() == d.manifest_json());
  CHECK(back.zero_resource[2].parent.spectral_decay == d.zero_resource[2].parent.spectral_decay);
  CHECK(nlohmann::json::parse(d.manifest_json()).is_object());
  CHECK_THROWS_AS(CorpusPlan::from_manifest_json("[1,2"), InvalidConfig);
  CHECK(default_plan(1).manifest_json() != p.manifest_json());
}
