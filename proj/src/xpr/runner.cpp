#include <algorithm>
#include <fstream>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "awe/error.hpp"
#include "awe/xpr.hpp"

namespace awe::xpr {

using synthlang::SynthCorpus;

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e5f5ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

nlohmann::ordered_json train_json(const embedders::TrainConfig& c) {
  return {{"epochs", c.epochs},         {"pretrain_epochs", c.pretrain_epochs},
          {"batch_size", c.batch_size}, {"lr", c.lr},
          {"clip_norm", c.clip_norm},   {"min_frames", c.min_frames}};
}

// Features and labels of a subset, copied in index order.
struct Subset {
  std::vector<featkit::FeatureSequence> features;
  std::vector<corpus::WordSegment> labels;
};

Subset gather(const SynthCorpus& c, const std::vector<std::size_t>& idx) {
  Subset s;
  s.features.reserve(idx.size());
  s.labels.reserve(idx.size());
  for (auto i : idx) {
    s.features.push_back(c.features[i]);
    s.labels.push_back(c.segments[i]);
  }
  return s;
}

const corpus::PairList& utd_pairs_of(const SynthCorpus& c, const std::string& language) {
  auto it = std::find(c.languages.begin(), c.languages.end(), language);
  if (it == c.languages.end()) throw InvalidConfig("unknown language " + language);
  return c.utd_pairs.at(static_cast<std::size_t>(it - c.languages.begin()));
}

double ap_of(const std::vector<std::vector<double>>& emb, const Subset& eval,
             samediff::PositiveMode mode) {
  return samediff::evaluate_embeddings(emb, eval.labels, mode).average_precision;
}

// Trains one model at the configured precision and returns the embeddings of
// every evaluation set.
class Trainer {
 public:
  explicit Trainer(const Settings& s) : s_(s) {}

  template <typename Fn>
  std::vector<std::vector<std::vector<double>>> run(Fn&& train,
                                                    const std::vector<const Subset*>& evals) const {
    if (s_.double_precision) return embed_with(train.template operator()<double>(), evals);
    return embed_with(train.template operator()<float>(), evals);
  }

 private:
  template <typename Real>
  static std::vector<std::vector<std::vector<double>>> embed_with(
      const gradnet::ModelParameters<Real>& m, const std::vector<const Subset*>& evals) {
    std::vector<std::vector<std::vector<double>>> out;
    for (const auto* e : evals) out.push_back(embedders::embed_all<Real>(e->features, m));
    return out;
  }

  const Settings& s_;
};

gradnet::ArchDescriptor arch_for(const Settings& s, gradnet::ModelKind kind) {
  auto a = s.arch;
  a.kind = kind;
  return a;
}

// Unsupervised AE-RNN on the segments that appear in the language's UTD pairs.
std::vector<std::vector<std::vector<double>>> ae_utd(const SynthCorpus& c,
                                                     const std::string& language,
                                                     const std::vector<const Subset*>& evals,
                                                     const Settings& s, std::uint64_t seed) {
  const auto& pairs = utd_pairs_of(c, language);
  std::set<std::size_t> used;
  for (const auto& [a, b] : pairs.pairs) used.insert(a), used.insert(b);
  const auto train = gather(c, {used.begin(), used.end()});
  auto cfg = s.ae;
  cfg.seed = seed;
  const auto arch = arch_for(s, gradnet::ModelKind::kAeRnn);
  return Trainer(s).run(
      [&]<typename Real>() { return embedders::train_ae<Real>(train.features, arch, cfg).model; },
      evals);
}

std::vector<std::vector<std::vector<double>>> cae_on_pairs(
    std::span<const featkit::FeatureSequence> features, const corpus::PairList& pairs,
    const std::vector<const Subset*>& evals, const Settings& s, std::uint64_t seed) {
  auto cfg = s.cae;
  cfg.seed = seed;
  const auto arch = arch_for(s, gradnet::ModelKind::kCaeRnn);
  return Trainer(s).run(
      [&]<typename Real>() {
        return embedders::train_cae<Real>(features, pairs, arch, cfg).model;
      },
      evals);
}

// Supervised CAE-RNN on true pairs sampled from the pooled training languages.
std::vector<std::vector<std::vector<double>>> cae_supervised(
    const SynthCorpus& c, const std::vector<std::string>& languages, std::size_t n_pairs,
    const std::vector<const Subset*>& evals, const Settings& s, std::uint64_t seed) {
  const auto train = gather(c, c.select(languages));
  const auto pairs = corpus::sample_true_pairs(train.labels, n_pairs, mix(seed, 1)).list;
  return cae_on_pairs(train.features, pairs, evals, s, seed);
}

std::vector<std::vector<std::vector<double>>> classifier_supervised(
    const SynthCorpus& c, const std::vector<std::string>& languages,
    const std::vector<const Subset*>& evals, const Settings& s, std::uint64_t seed) {
  const auto train = gather(c, c.select(languages));
  const auto vocab = corpus::build_vocabulary(train.labels, s.vocab_cap);
  auto cfg = s.classifier;
  cfg.seed = seed;
  const auto arch = arch_for(s, gradnet::ModelKind::kClassifierRnn);
  return Trainer(s).run(
      [&]<typename Real>() {
        return embedders::train_classifier<Real>(train.features, train.labels, vocab, arch, cfg)
            .model;
      },
      evals);
}

std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + v[i];
  return out;
}

void require_languages(const SynthCorpus& c, const std::vector<std::string>& codes,
                       const char* role) {
  if (codes.empty()) throw InvalidConfig(std::string(role) + " language set is empty");
  for (const auto& code : codes)
    if (std::find(c.languages.begin(), c.languages.end(), code) == c.languages.end())
      throw InvalidConfig(std::string(role) + " language " + code + " not in corpus");
}

std::vector<Subset> eval_sets(const SynthCorpus& c, const std::vector<std::string>& languages) {
  std::vector<Subset> out;
  for (const auto& l : languages) out.push_back(gather(c, c.select({l})));
  return out;
}

std::vector<const Subset*> pointers(const std::vector<Subset>& v) {
  std::vector<const Subset*> out;
  for (const auto& s : v) out.push_back(&s);
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os.precision(17);
  return os;
}

}  // namespace

std::string Settings::to_json() const {
  nlohmann::ordered_json j;
  j["arch"] = nlohmann::json::parse(arch.to_json());
  j["ae"] = train_json(ae);
  j["cae"] = train_json(cae);
  j["classifier"] = train_json(classifier);
  j["multilingual_pairs"] = multilingual_pairs;
  j["monolingual_pairs"] = monolingual_pairs;
  j["vocab_cap"] = vocab_cap;
  j["mode"] = samediff::to_string(mode);
  j["dtw"] = {{"metric", dtw.metric == dtwbase::LocalMetric::kCosine ? "cosine" : "euclidean"},
              {"normalize_by_path", dtw.normalize_by_path}};
  j["precision"] = double_precision ? "float64" : "float32";
  j["baselines"] = baselines;
  j["seed"] = seed;
  return j.dump(2);
}

Settings full_settings() {
  Settings s;
  s.classifier.epochs = embedders::kDefaultClassifierEpochs;
  return s;
}

Settings desk_settings() {
  Settings s;
  s.arch.encoder_layers = 1;
  s.arch.decoder_layers = 1;
  s.arch.units = 48;
  s.arch.embed_dim = 32;
  s.ae.epochs = 10;
  s.ae.lr = 0.003;
  s.ae.batch_size = 8;
  s.cae = s.ae;
  s.cae.pretrain_epochs = 3;
  s.classifier = s.ae;
  s.classifier.epochs = 6;
  s.multilingual_pairs = 4000;
  s.monolingual_pairs = 1500;
  return s;
}

double Table::at(const std::string& model, const std::string& language) const {
  auto m = std::find(models.begin(), models.end(), model);
  auto l = std::find(languages.begin(), languages.end(), language);
  if (m == models.end() || l == languages.end())
    throw InvalidConfig("no table cell for " + model + "/" + language);
  return ap[static_cast<std::size_t>(m - models.begin())]
           [static_cast<std::size_t>(l - languages.begin())];
}

void Table::write_csv(const std::string& path) const {
  auto os = open_out(path);
  os << "model";
  for (const auto& l : languages) os << ',' << l;
  os << '\n';
  for (std::size_t m = 0; m < models.size(); ++m) {
    os << models[m];
    for (double v : ap[m]) os << ',' << v;
    os << '\n';
  }
}

std::string Table::to_json() const {
  nlohmann::ordered_json j;
  for (std::size_t m = 0; m < models.size(); ++m)
    for (std::size_t l = 0; l < languages.size(); ++l) j[models[m]][languages[l]] = ap[m][l];
  return j.dump(2);
}

void require_disjoint(const SynthCorpus& c, const std::vector<std::size_t>& train,
                      const std::vector<std::string>& eval_languages) {
  for (auto i : train)
    if (std::find(eval_languages.begin(), eval_languages.end(), c.segments[i].language) !=
        eval_languages.end())
      throw InvalidConfig("training set contains segment " + c.segments[i].segment_id +
                          " of evaluation language " + c.segments[i].language);
}

Table run_table(const SynthCorpus& c, const std::vector<std::string>& train_languages,
                const std::vector<std::string>& eval_languages, const Settings& s) {
  require_languages(c, train_languages, "training");
  require_languages(c, eval_languages, "evaluation");
  require_disjoint(c, c.select(train_languages), eval_languages);

  Table t;
  t.models = kTableModels;
  t.languages = eval_languages;
  t.ap.assign(t.models.size(), std::vector<double>(eval_languages.size()));
  const auto evals = eval_sets(c, eval_languages);

  for (std::size_t l = 0; l < evals.size(); ++l) {
    const auto& e = evals[l];
    if (s.baselines) {
      t.ap[0][l] = samediff::same_different_dtw(e.features, e.labels, s.dtw, s.mode)
                       .average_precision;
      std::vector<std::vector<double>> down;
      for (const auto& f : e.features) down.push_back(embedders::downsample_embed(f));
      t.ap[1][l] = ap_of(down, e, s.mode);
    } else {
      t.ap[0][l] = t.ap[1][l] = std::numeric_limits<double>::quiet_NaN();
    }
    const std::uint64_t seed = mix(s.seed, 100 + l);
    t.ap[2][l] = ap_of(ae_utd(c, eval_languages[l], {&e}, s, mix(seed, 2))[0], e, s.mode);
    t.ap[3][l] = ap_of(
        cae_on_pairs(c.features, utd_pairs_of(c, eval_languages[l]), {&e}, s, mix(seed, 3))[0],
        e, s.mode);
  }

  const auto ptrs = pointers(evals);
  const auto cae = cae_supervised(c, train_languages, s.multilingual_pairs, ptrs, s,
                                  mix(s.seed, 4));
  const auto cls = classifier_supervised(c, train_languages, ptrs, s, mix(s.seed, 5));
  for (std::size_t l = 0; l < evals.size(); ++l) {
    t.ap[4][l] = ap_of(cae[l], evals[l], s.mode);
    t.ap[5][l] = ap_of(cls[l], evals[l], s.mode);
  }
  return t;
}

std::vector<AblationRow> run_ablation(const SynthCorpus& c,
                                      const std::vector<std::vector<std::string>>& subsets,
                                      const std::string& eval_language, const Settings& s,
                                      bool with_utd_reference) {
  require_languages(c, {eval_language}, "evaluation");
  const auto evals = eval_sets(c, {eval_language});
  const auto& e = evals.front();
  std::vector<AblationRow> rows;
  if (with_utd_reference) {
    const auto emb = cae_on_pairs(c.features, utd_pairs_of(c, eval_language), {&e}, s,
                                  mix(s.seed, 3));
    rows.push_back({"utd", "cae-rnn", ap_of(emb[0], e, s.mode), s.seed});
  }
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    require_languages(c, subsets[k], "training");
    require_disjoint(c, c.select(subsets[k]), {eval_language});
    const auto label = join(subsets[k], '+');
    const auto cae = cae_supervised(c, subsets[k], s.multilingual_pairs, {&e}, s,
                                    mix(s.seed, 200 + k));
    rows.push_back({label, "cae-rnn", ap_of(cae[0], e, s.mode), s.seed});
    const auto cls = classifier_supervised(c, subsets[k], {&e}, s, mix(s.seed, 300 + k));
    rows.push_back({label, "classifier-rnn", ap_of(cls[0], e, s.mode), s.seed});
  }
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
  auto os = open_out(path);
  os << "subset,model,AP,seed\n";
  for (const auto& r : rows) os << r.subset << ',' << r.model << ',' << r.ap << ',' << r.seed << '\n';
}

CrossMatrix run_crossmatrix(const SynthCorpus& c, const std::vector<std::string>& train_languages,
                            const std::vector<std::string>& eval_languages, const Settings& s) {
  require_languages(c, train_languages, "training");
  require_languages(c, eval_languages, "evaluation");
  require_disjoint(c, c.select(train_languages), eval_languages);

  CrossMatrix m;
  m.train_languages = train_languages;
  m.eval_languages = eval_languages;
  const auto evals = eval_sets(c, eval_languages);
  const auto ptrs = pointers(evals);
  for (std::size_t r = 0; r < train_languages.size(); ++r) {
    const auto emb = cae_supervised(c, {train_languages[r]}, s.monolingual_pairs, ptrs, s,
                                    mix(s.seed, 400 + r));
    std::vector<double> row;
    for (std::size_t l = 0; l < evals.size(); ++l) row.push_back(ap_of(emb[l], evals[l], s.mode));
    m.ap.push_back(std::move(row));
  }
  m.normalized = m.ap;
  for (std::size_t l = 0; l < eval_languages.size(); ++l) {
    double best = 0.0;
    for (const auto& row : m.ap) best = std::max(best, row[l]);
    for (auto& row : m.normalized) row[l] = best > 0.0 ? row[l] / best : 0.0;
  }
  return m;
}

void CrossMatrix::write_csv(const std::string& path, bool normalized_values) const {
  const auto& values = normalized_values ? normalized : ap;
  auto os = open_out(path);
  os << "train";
  for (const auto& l : eval_languages) os << ',' << l;
  os << '\n';
  for (std::size_t r = 0; r < train_languages.size(); ++r) {
    os << train_languages[r];
    for (double v : values[r]) os << ',' << v;
    os << '\n';
  }
}

double evaluate_model_file(const SynthCorpus& c, const std::vector<std::size_t>& eval,
                           const std::string& checkpoint, samediff::PositiveMode mode) {
  const auto e = gather(c, eval);
  const auto m = gradnet::load_checkpoint<float>(checkpoint);
  return ap_of(embedders::embed_all<float>(e.features, m), e, mode);
}

std::string run_manifest(const std::string& experiment, const Settings& s,
                         const std::string& corpus_manifest) {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["version"] = kVersion;
  j["settings"] = nlohmann::json::parse(s.to_json());
  j["corpus"] = corpus_manifest.empty() ? nlohmann::json() : nlohmann::json::parse(corpus_manifest);
  return j.dump(2);
}

}  // namespace awe::xpr
