#include <doctest.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "awe/error.hpp"
#include "awe/xpr.hpp"
#include "oracles.hpp"

using namespace awe;
using namespace awe::xpr;

namespace {

synthlang::SynthCorpus small_corpus(std::uint64_t seed) {
  auto plan = synthlang::default_plan(seed, true);
  auto shrink = [](synthlang::LanguageSpec& s) {
    s.vocab_size = 6;
    s.min_length = 8;
    s.max_length = 12;
  };
  for (auto& l : plan.well_resourced) shrink(l);
  for (auto& f : plan.zero_resource) shrink(f.parent);
  for (auto& f : plan.development) shrink(f.parent);
  plan.corpus.speakers_per_language = 3;
  plan.corpus.instances_per_word = 2;
  plan.corpus.utd_pairs = 30;
  return synthlang::gen_corpus(plan.languages(), plan.corpus);
}

Settings tiny_settings() {
  auto s = desk_settings();
  s.arch.units = 8;
  s.arch.embed_dim = 6;
  s.ae.epochs = s.cae.epochs = s.classifier.epochs = 1;
  s.cae.pretrain_epochs = 1;
  s.multilingual_pairs = 60;
  s.monolingual_pairs = 40;
  return s;
}

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

TEST_CASE("settings presets") {
  auto p = full_settings();
  CHECK(p.arch.encoder_layers == 3);
  CHECK(p.arch.units == 400);
  CHECK(p.arch.embed_dim == 130);
  CHECK(p.ae.lr == 0.001);
  CHECK(p.multilingual_pairs == 300000);
  CHECK(p.vocab_cap == 10000);
  auto d = desk_settings();
  auto j = nlohmann::json::parse(d.to_json());
  CHECK(j["arch"]["units"] == d.arch.units);
  CHECK(j["precision"] == "float32");
  CHECK(kTableModels.size() == 6);
}

TEST_CASE("model comparison table") {
  const auto c = small_corpus(0);
  auto s = tiny_settings();
  const std::vector<std::string> train = {"T0", "T1"}, eval = {"Z0", "Z1"};
  auto t = run_table(c, train, eval, s);
  CHECK(t.models == kTableModels);
  CHECK(t.languages == eval);
  REQUIRE(t.ap.size() == 6);
  for (const auto& row : t.ap) {
    REQUIRE(row.size() == 2);
    for (double v : row) CHECK(in_unit_interval(v));
  }
  CHECK(t.at("dtw", "Z1") == t.ap[0][1]);
  CHECK_THROWS_AS(t.at("dtw", "Z9"), InvalidConfig);

  oracle::TempDir dir;
  t.write_csv(dir.file("table.csv"));
  std::ifstream is(dir.file("table.csv"));
  std::string header;
  std::getline(is, header);
  CHECK(header == "model,Z0,Z1");
  CHECK(nlohmann::json::parse(t.to_json()).is_object());

  s.baselines = false;
  auto nb = run_table(c, train, eval, s);
  CHECK(std::isnan(nb.at("dtw", "Z0")));
  CHECK(std::isnan(nb.at("downsample", "Z0")));
  CHECK(nb.at("cae-rnn-multilingual", "Z0") == t.at("cae-rnn-multilingual", "Z0"));
}

TEST_CASE("evaluation languages never reach training") {
  const auto c = small_corpus(1);
  auto s = tiny_settings();
  CHECK_THROWS_AS(run_table(c, {"T0", "Z0"}, {"Z0"}, s), InvalidConfig);
  CHECK_THROWS_AS(run_crossmatrix(c, {"Z1"}, {"Z1", "Z2"}, s), InvalidConfig);
  CHECK_THROWS_AS(run_ablation(c, {{"T0"}, {"T0", "Z3"}}, "Z3", s), InvalidConfig);
  CHECK_THROWS_AS(require_disjoint(c, c.select({"T2", "Z4"}), {"Z4"}), InvalidConfig);
  CHECK_NOTHROW(require_disjoint(c, c.select({"T2"}), {"Z4"}));
  CHECK_THROWS_AS(run_table(c, {"T0"}, {"NOPE"}, s), InvalidConfig);
  CHECK_THROWS_AS(run_table(c, {}, {"Z0"}, s), InvalidConfig);
}

TEST_CASE("training-language ablation") {
  const auto c = small_corpus(2);
  auto s = tiny_settings();
  s.seed = 4;
  auto rows = run_ablation(c, {{"T0"}, {"T0", "T1"}, {"T0", "T1", "T2"}}, "Z0", s);
  REQUIRE(rows.size() == 7);
  CHECK(rows[0].subset == "utd");
  CHECK(rows[1].subset == "T0");
  CHECK(rows[3].subset == "T0+T1");
  int cae = 0, cls = 0;
  for (const auto& r : rows) {
    CHECK(in_unit_interval(r.ap));
    CHECK(r.seed == 4);
    cae += r.model == "cae-rnn";
    cls += r.model == "classifier-rnn";
  }
  CHECK(cae == 4);
  CHECK(cls == 3);
  CHECK(run_ablation(c, {{"T0"}}, "Z0", s, false).size() == 2);

  oracle::TempDir dir;
  write_ablation_csv(rows, dir.file("ablation.csv"));
  std::ifstream is(dir.file("ablation.csv"));
  std::string header;
  std::getline(is, header);
  CHECK(header == "subset,model,AP,seed");
}

TEST_CASE("cross-lingual matrix") {
  const auto c = small_corpus(3);
  auto s = tiny_settings();
  auto m = run_crossmatrix(c, {"T0", "T1", "T2"}, {"Z0", "Z1"}, s);
  REQUIRE(m.ap.size() == 3);
  REQUIRE(m.normalized.size() == 3);
  for (std::size_t col = 0; col < 2; ++col) {
    double mx = 0;
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(in_unit_interval(m.ap[r][col]));
      CHECK(m.normalized[r][col] == doctest::Approx(m.ap[r][col] / std::max({m.ap[0][col], m.ap[1][col], m.ap[2][col]})));
      mx = std::max(mx, m.normalized[r][col]);
    }
    CHECK(mx == 1.0);
  }
  oracle::TempDir dir;
  m.write_csv(dir.file("m.csv"));
  m.write_csv(dir.file("n.csv"), true);
  std::ifstream is(dir.file("m.csv"));
  std::string line;
  std::getline(is, line);
  CHECK(line == "train,Z0,Z1");
  int rows = 0;
  while (std::getline(is, line)) rows += !line.empty();
  CHECK(rows == 3);
}

TEST_CASE("runs are reproducible in 64-bit mode") {
  const auto c = small_corpus(5);
  auto s = tiny_settings();
  s.double_precision = true;
  s.seed = 9;
  auto a = run_table(c, {"T0"}, {"Z0"}, s);
  auto b = run_table(c, {"T0"}, {"Z0"}, s);
  CHECK(a.ap == b.ap);
  s.seed = 10;
  auto other = run_table(c, {"T0"}, {"Z0"}, s);
  CHECK(other.at("cae-rnn-multilingual", "Z0") != a.at("cae-rnn-multilingual", "Z0"));
}

TEST_CASE("model files and manifests") {
  const auto c = small_corpus(6);
  auto s = tiny_settings();
  auto arch = s.arch;
  arch.kind = gradnet::ModelKind::kAeRnn;
  auto m = gradnet::init_model<float>(arch, 1);
  oracle::TempDir dir;
  gradnet::save_checkpoint(m, dir.file("m.awep"));
  const double ap = evaluate_model_file(c, c.select({"Z0"}), dir.file("m.awep"),
                                        samediff::PositiveMode::kAll);
  CHECK(in_unit_interval(ap));

  auto j = nlohmann::json::parse(run_manifest("table", s, "{\"corpus\": true}"));
  CHECK(j["experiment"] == "table");
  CHECK(j["version"] == kVersion);
  CHECK(j["settings"]["seed"] == s.seed);
  CHECK(j["corpus"]["corpus"] == true);
}
