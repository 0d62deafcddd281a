#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "awe/corpus.hpp"
#include "awe/error.hpp"
#include "oracles.hpp"

using namespace awe;
using namespace awe::corpus;

namespace {

WordSegment seg(std::string utt, std::size_t a, std::size_t b, std::string word,
                std::string lang = "ES", std::string spk = "s1") {
  WordSegment s;
  s.utterance_id = std::move(utt);
  s.start_frame = a;
  s.end_frame = b;
  s.word_type = std::move(word);
  s.language = std::move(lang);
  s.speaker = std::move(spk);
  s.segment_id = make_segment_id(s.utterance_id, a, b);
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

bool bit_equal(const FeatureSequence& a, const FeatureSequence& b) {
  return a.num_frames() == b.num_frames() && a.dim() == b.dim() &&
         std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("alignment parsing") {
  CHECK(parse_alignments("").empty());
  auto s = parse_alignments("# header\n\nu1 12 40 perro ES spk3\nu1 40 52 gato ES spk3\n");
  REQUIRE(s.size() == 2);
  CHECK(s[0].start_frame == 12);
  CHECK(s[0].end_frame == 40);
  CHECK(s[0].word_type == "perro");
  CHECK(s[0].language == "ES");
  CHECK(s[0].speaker == "spk3");
  CHECK(s[0].segment_id == "u1_12-40");
  CHECK(s[1].word_type == "gato");

  try {
    parse_alignments("u1 1 2 a ES s\nu1 40 40 perro ES spk3\n", "f.txt");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_alignments("u1 1 2 a ES"), ParseError);
  CHECK_THROWS_AS(parse_alignments("u1 x 2 a ES s"), ParseError);
  CHECK_THROWS_AS(parse_alignments("u1 -1 2 a ES s"), ParseError);
}

TEST_CASE("alignment file round trip") {
  oracle::TempDir dir;
  std::vector<WordSegment> segs = {seg("a", 0, 5, "x"), seg("b", 3, 9, "y", "FR", "s2")};
  write_alignments(segs, dir.file("ali.txt"));
  auto back = load_alignments(dir.file("ali.txt"));
  REQUIRE(back.size() == 2);
  CHECK(back[1].segment_id == segs[1].segment_id);
  CHECK(back[1].language == "FR");
  write_text(dir.file("empty.txt"), "");
  CHECK(load_alignments(dir.file("empty.txt")).empty());
  CHECK_THROWS_AS(load_alignments(dir.file("missing.txt")), IoError);
}

TEST_CASE("vocabulary caps, tie-break and ordering") {
  std::vector<WordSegment> segs;
  auto add = [&](const std::string& w, const std::string& lang, int n) {
    for (int i = 0; i < n; ++i) segs.push_back(seg(w + std::to_string(i), 0, 1, w, lang));
  };
  add("zeta", "ES", 3);
  add("beta", "ES", 2);
  add("alpha", "ES", 2);
  add("gamma", "ES", 1);
  add("uno", "DE", 1);
  segs.push_back(seg("unk", 0, 1, std::string(kUnknownWord), "ES"));

  auto v = build_vocabulary(segs, 3);
  REQUIRE(v.size() == 4);
  CHECK(v.entry(0).language == "DE");
  CHECK(v.entry(1).word == "zeta");
  CHECK(v.entry(2).word == "alpha");  // equal counts: lexicographically smaller first
  CHECK(v.entry(3).word == "beta");
  CHECK_FALSE(v.index("ES", "gamma").has_value());
  CHECK(*v.index("ES", "beta") == 3);

  auto all = build_vocabulary(segs);
  CHECK(all.size() == 5);
  std::set<std::size_t> seen;
  for (std::size_t k = 0; k < all.size(); ++k) seen.insert(*all.index(all.entry(k).language, all.entry(k).word));
  CHECK(seen.size() == all.size());
  CHECK(*seen.rbegin() == all.size() - 1);

  // Capped at 1 with a tie: alpha wins over beta.
  std::vector<WordSegment> tie;
  for (const auto& s : segs)
    if (s.word_type == "alpha" || s.word_type == "beta") tie.push_back(s);
  auto t = build_vocabulary(tie, 1);
  REQUIRE(t.size() == 1);
  CHECK(t.entry(0).word == "alpha");

  oracle::TempDir dir;
  v.save(dir.file("vocab.txt"));
  auto back = Vocabulary::load(dir.file("vocab.txt"));
  REQUIRE(back.size() == v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    CHECK(back.entry(k).word == v.entry(k).word);
    CHECK(back.entry(k).count == v.entry(k).count);
  }
}

TEST_CASE("vocabulary size is the sum of per-language caps") {
  std::vector<WordSegment> segs;
  for (int l = 0; l < 7; ++l)
    for (int w = 0; w < 40; ++w)
      segs.push_back(seg("u", 0, 1, "w" + std::to_string(w), "L" + std::to_string(l)));
  CHECK(build_vocabulary(segs, 25).size() == 7 * 25);
  CHECK(build_vocabulary(segs, 100).size() == 7 * 40);
}

TEST_CASE("true pair sampling") {
  std::vector<WordSegment> three = {seg("a", 0, 1, "x"), seg("b", 0, 1, "x"), seg("c", 0, 1, "x")};
  auto all = sample_true_pairs(three, 10, 1);
  CHECK(all.exhausted);
  CHECK(all.population == 3);
  CHECK(all.list.pairs == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {0, 2}, {1, 2}});
  CHECK(all.list.source == PairSource::kTrue);
  CHECK(kDefaultTruePairs == 300000);

  std::vector<WordSegment> lonely = {seg("a", 0, 1, "x"), seg("b", 0, 1, "y")};
  CHECK_THROWS_AS(sample_true_pairs(lonely, 5, 0), NoPairsAvailable);
  std::vector<WordSegment> cross = {seg("a", 0, 1, "x", "ES"), seg("b", 0, 1, "x", "FR")};
  CHECK_THROWS_AS(sample_true_pairs(cross, 5, 0), NoPairsAvailable);

  std::mt19937_64 rng(8);
  std::vector<WordSegment> big;
  for (int i = 0; i < 300; ++i)
    big.push_back(seg("u" + std::to_string(i), 0, 1, "w" + std::to_string(rng() % 25),
                      i % 2 ? "ES" : "FR"));
  auto a = sample_true_pairs(big, 400, 42);
  auto b = sample_true_pairs(big, 400, 42);
  CHECK(a.list == b.list);
  CHECK_FALSE(a.exhausted);
  CHECK(a.list.size() == 400);
  std::set<std::pair<std::size_t, std::size_t>> unique;
  for (auto [i, j] : a.list.pairs) {
    CHECK(i < j);
    CHECK(big[i].same_type(big[j]));
    unique.insert({i, j});
  }
  CHECK(unique.size() == 400);
  CHECK_FALSE(sample_true_pairs(big, 400, 43).list == a.list);
}

TEST_CASE("true pair sampling is close to uniform") {
  // Two groups: 4 instances (6 pairs) and 3 instances (3 pairs); draw 3 of 9.
  std::vector<WordSegment> segs;
  for (int i = 0; i < 4; ++i) segs.push_back(seg("a" + std::to_string(i), 0, 1, "x"));
  for (int i = 0; i < 3; ++i) segs.push_back(seg("b" + std::to_string(i), 0, 1, "y"));
  std::map<std::pair<std::size_t, std::size_t>, int> hits;
  const int trials = 6000;
  for (int s = 0; s < trials; ++s)
    for (auto p : sample_true_pairs(segs, 3, s).list.pairs) ++hits[p];
  CHECK(hits.size() == 9);
  for (const auto& [p, n] : hits) CHECK(std::abs(n - trials / 3) < 5 * std::sqrt(trials / 3.0));
}

TEST_CASE("pair files") {
  std::vector<WordSegment> segs = {seg("a", 0, 5, "x"), seg("b", 0, 4, "x"), seg("c", 2, 8, "y")};
  auto p = parse_pairs("a_0-5 b_0-4\n# note\nc_2-8 a_0-5\n", PairSource::kUtd, segs);
  CHECK(p.source == PairSource::kUtd);
  CHECK(p.pairs == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {2, 0}});
  CHECK_THROWS_AS(parse_pairs("a_0-5 zz_1-2\n", PairSource::kUtd, segs), UnknownSegmentId);
  CHECK_THROWS_AS(parse_pairs("a_0-5 a_0-5\n", PairSource::kUtd, segs), SelfPair);
  CHECK_THROWS_AS(parse_pairs("a_0-5\n", PairSource::kUtd, segs), ParseError);

  oracle::TempDir dir;
  write_pairs(p, segs, dir.file("pairs.txt"));
  CHECK(load_pairs(dir.file("pairs.txt"), PairSource::kUtd, segs) == p);
  CHECK(to_string(PairSource::kUtd) == "utd");
}

TEST_CASE("archive shapes, random access and errors") {
  oracle::TempDir dir;
  std::mt19937_64 rng(2);
  std::vector<NamedFeatures> recs = {{"u1", oracle::random_sequence(5, 13, rng)},
                                     {"u2", oracle::random_sequence(7, 13, rng)}};
  for (auto& r : recs)
    for (auto& v : r.features.data()) v = static_cast<float>(v);
  const auto path = dir.file("f.awef");
  write_archive(path, recs);
  auto a = FeatureArchive::open(path);
  CHECK(a.dim() == 13);
  CHECK(a.size() == 2);
  CHECK(a.entry("u1").num_frames == 5);
  CHECK(a.entry("u2").num_frames == 7);
  CHECK(bit_equal(a.load("u2"), recs[1].features));
  CHECK(a.load_all().size() == 2);
  CHECK_THROWS_AS(a.load("nope"), UnknownSegmentId);

  const auto size = std::filesystem::file_size(path);
  std::filesystem::copy_file(path, dir.file("trunc.awef"));
  std::filesystem::resize_file(dir.file("trunc.awef"), size - 3);
  CHECK_THROWS_AS(FeatureArchive::open(dir.file("trunc.awef")), CorruptIndex);
  std::filesystem::resize_file(dir.file("trunc.awef"), 10);
  CHECK_THROWS_AS(FeatureArchive::open(dir.file("trunc.awef")), CorruptIndex);

  std::string bytes;
  {
    std::ifstream is(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(is), {});
  }
  auto patched = [&](std::size_t at, char c) {
    auto b = bytes;
    b[at] = c;
    std::ofstream(dir.file("p.awef"), std::ios::binary) << b;
    return dir.file("p.awef");
  };
  CHECK_THROWS_AS(FeatureArchive::open(patched(0, 'X')), BadMagic);
  CHECK_THROWS_AS(FeatureArchive::open(patched(4, 2)), VersionMismatch);

  std::vector<NamedFeatures> mixed = {{"a", FeatureSequence(2, 3)}, {"b", FeatureSequence(2, 4)}};
  CHECK_THROWS_AS(write_archive(dir.file("m.awef"), mixed), DimensionMismatch);
}

TEST_CASE("archive round trip under fuzzing") {
  oracle::TempDir dir;
  std::mt19937_64 rng(123);
  for (int run = 0; run < 200; ++run) {
    const std::size_t dim = 1 + rng() % 16;
    std::vector<NamedFeatures> recs;
    for (std::size_t r = 0, n = 1 + rng() % 6; r < n; ++r) {
      FeatureSequence f(1 + rng() % 20, dim);
      for (auto& v : f.data()) {
        std::uint32_t bits = static_cast<std::uint32_t>(rng());
        float x;
        std::memcpy(&x, &bits, 4);
        v = std::isfinite(x) ? x : 0.5f;
      }
      recs.push_back({"id" + std::to_string(r) + std::string(rng() % 5, 'q'), std::move(f)});
    }
    write_archive(dir.file("z.awef"), recs);
    auto a = FeatureArchive::open(dir.file("z.awef"));
    auto all = a.load_all();
    REQUIRE(all.size() == recs.size());
    for (std::size_t r = 0; r < recs.size(); ++r) {
      CHECK(all[r].id == recs[r].id);
      CHECK(bit_equal(all[r].features, recs[r].features));
    }
  }
}

TEST_CASE("segment extraction from an archive") {
  oracle::TempDir dir;
  std::mt19937_64 rng(4);
  FeatureSequence utt = oracle::random_sequence(20, 3, rng);
  for (auto& v : utt.data()) v = static_cast<float>(v);
  std::vector<NamedFeatures> recs = {{"utt", utt}};
  write_archive(dir.file("u.awef"), recs);
  auto a = FeatureArchive::open(dir.file("u.awef"));
  std::vector<WordSegment> segs = {seg("utt", 2, 6, "x"), seg("utt", 10, 20, "y")};
  auto out = extract_segments(a, segs);
  REQUIRE(out.size() == 2);
  CHECK(bit_equal(out[0], featkit::slice_segment(utt, 2, 6)));
  CHECK(out[1].num_frames() == 10);
  segs.push_back(seg("utt", 15, 25, "z"));
  CHECK_THROWS_AS(extract_segments(a, segs), OutOfRange);
}
