#include "awe/synthlang.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "awe/error.hpp"

namespace awe::synthlang {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix(splitmix(splitmix(seed) ^ a) ^ b);
}

std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ull;
  return h;
}

std::string word_name(std::size_t v) {
  std::string s = std::to_string(v);
  return "w" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

// Values are stored as float32 in archives; keep generated data float-exact.
void quantize(FeatureSequence& f) {
  for (auto& v : f.data()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

void LanguageSpec::validate() const {
  if (vocab_size < 2) throw InvalidConfig("a language needs at least two words");
  if (dim == 0) throw InvalidConfig("feature dimension must be positive");
  if (min_length < 4 || max_length < min_length) throw InvalidConfig("need 4 <= min_length <= max_length");
  if (step_scale <= 0) throw InvalidConfig("step scale must be positive");
  if (smoothing_window == 0) throw InvalidConfig("smoothing window must be positive");
  if (!(spectral_decay > 0 && spectral_decay <= 1))
    throw InvalidConfig("spectral decay must lie in (0, 1]");
}

void InstanceSpec::validate() const {
  if (warp < 0 || warp >= 1) throw InvalidConfig("warp strength must lie in [0, 1)");
  if (offset_scale < 0 || noise < 0) throw InvalidConfig("nuisance scales must be non-negative");
}

void FamilySpec::validate() const {
  parent.validate();
  if (drift < 0) throw InvalidConfig("drift must be non-negative");
  if (resample_fraction < 0 || resample_fraction > 1)
    throw InvalidConfig("resample fraction must lie in [0, 1]");
}

FeatureSequence random_trajectory(std::size_t T, std::size_t dim, double step_scale,
                                  std::size_t window, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureSequence walk(T, dim);
  for (std::size_t d = 0; d < dim; ++d) {
    double x = normal(rng);
    for (std::size_t t = 0; t < T; ++t) {
      if (t > 0) x += step_scale * normal(rng);
      walk(t, d) = x;
    }
  }
  FeatureSequence out(T, dim);
  const std::size_t half = window / 2;
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t lo = t >= half ? t - half : 0;
      const std::size_t hi = std::min(T - 1, t + half);
      double s = 0.0;
      for (std::size_t u = lo; u <= hi; ++u) s += walk(u, d);
      out(t, d) = s / static_cast<double>(hi - lo + 1);
    }
    double mean = 0.0, var = 0.0;
    for (std::size_t t = 0; t < T; ++t) mean += out(t, d);
    mean /= static_cast<double>(T);
    for (std::size_t t = 0; t < T; ++t) var += (out(t, d) - mean) * (out(t, d) - mean);
    const double sd = std::sqrt(std::max(var / static_cast<double>(T), 1e-12));
    for (std::size_t t = 0; t < T; ++t) out(t, d) = (out(t, d) - mean) / sd;
  }
  return out;
}

namespace {

void standardize_columns(FeatureSequence& f) {
  const std::size_t T = f.num_frames();
  for (std::size_t d = 0; d < f.dim(); ++d) {
    double mean = 0.0, var = 0.0;
    for (std::size_t t = 0; t < T; ++t) mean += f(t, d);
    mean /= static_cast<double>(T);
    for (std::size_t t = 0; t < T; ++t) var += (f(t, d) - mean) * (f(t, d) - mean);
    const double sd = std::sqrt(std::max(var / static_cast<double>(T), 1e-12));
    for (std::size_t t = 0; t < T; ++t) f(t, d) = (f(t, d) - mean) / sd;
  }
}

FeatureSequence fresh_template(const LanguageSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(spec.min_length, spec.max_length);
  const std::size_t T = len(rng);
  auto t = random_trajectory(T, spec.dim, spec.step_scale, spec.smoothing_window, rng());
  shape_template(t, spec);
  return t;
}

}  // namespace

void shape_template(FeatureSequence& f, const LanguageSpec& spec) {
  if (spec.spectral_decay == 1.0) return;
  if (f.dim() != spec.dim) throw DimensionMismatch("template dimension differs from the language");
  const auto D = static_cast<Eigen::Index>(spec.dim);
  std::mt19937_64 rng(derive_seed(spec.seed, 7));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(D, D);
  for (Eigen::Index i = 0; i < D; ++i)
    for (Eigen::Index j = 0; j < D; ++j) g(i, j) = normal(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::VectorXd scale(D);
  for (Eigen::Index k = 0; k < D; ++k) scale(k) = std::pow(spec.spectral_decay, static_cast<double>(k));
  const Eigen::MatrixXd mix = q * scale.asDiagonal();  // frame' = mix * frame

  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      f.data().data(), static_cast<Eigen::Index>(f.num_frames()), D);
  x = (x * mix.transpose()).eval();
  standardize_columns(f);
}

namespace {

}  // namespace

Language gen_language(const LanguageSpec& spec) {
  spec.validate();
  Language lang;
  lang.code = spec.code;
  for (std::size_t v = 0; v < spec.vocab_size; ++v) {
    lang.words.push_back(word_name(v));
    auto t = fresh_template(spec, derive_seed(spec.seed, 1, v));
    quantize(t);
    lang.templates.push_back(std::move(t));
  }
  return lang;
}

std::vector<double> speaker_offset(const std::string& speaker, double scale, std::size_t dim) {
  std::mt19937_64 rng(hash_string(speaker));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> off(dim);
  for (auto& v : off) v = scale * normal(rng);
  return off;
}

FeatureSequence gen_instance(const FeatureSequence& tmpl, const InstanceSpec& inst,
                             std::uint64_t seed) {
  inst.validate();
  const std::size_t T = tmpl.num_frames(), D = tmpl.dim();
  if (T == 0) throw ShapeMismatch("empty template");
  std::mt19937_64 rng(seed);
  const auto max_extra = static_cast<std::size_t>(std::floor(inst.warp * static_cast<double>(T)));
  const std::size_t extra = std::uniform_int_distribution<std::size_t>(0, max_extra)(rng);
  const std::size_t L = T + extra;

  // Template index for every output frame. The warp has kPieces linear
  // pieces; piece k covers a[k] template units over a[k] + extra * c[k]
  // output units, so every slope is at most one and no frame is skipped.
  std::vector<std::size_t> source(L);
  if (extra == 0 || T == 1) {
    for (std::size_t u = 0; u < L; ++u) source[u] = std::min(u, T - 1);
  } else {
    constexpr std::size_t kPieces = 4;
    std::uniform_real_distribution<double> unit(0.5, 1.5);
    std::array<double, kPieces> a{}, c{};
    for (auto& v : a) v = unit(rng);
    for (auto& v : c) v = unit(rng);
    const double sa = std::accumulate(a.begin(), a.end(), 0.0);
    const double sc = std::accumulate(c.begin(), c.end(), 0.0);
    std::array<double, kPieces + 1> tx{}, ux{};  // knots in template / output time
    for (std::size_t k = 0; k < kPieces; ++k) {
      const double ta = a[k] / sa * static_cast<double>(T - 1);
      tx[k + 1] = tx[k] + ta;
      ux[k + 1] = ux[k] + ta + c[k] / sc * static_cast<double>(extra);
    }
    tx[kPieces] = static_cast<double>(T - 1);
    ux[kPieces] = static_cast<double>(L - 1);
    std::size_t k = 0;
    for (std::size_t u = 0; u < L; ++u) {
      const double uu = static_cast<double>(u);
      while (k + 1 < kPieces && uu > ux[k + 1]) ++k;
      const double span = ux[k + 1] - ux[k];
      const double pos = span <= 0 ? tx[k] : tx[k] + (uu - ux[k]) / span * (tx[k + 1] - tx[k]);
      source[u] = std::min(T - 1, static_cast<std::size_t>(std::lround(pos)));
    }
  }

  const auto offset = speaker_offset(inst.speaker, inst.offset_scale, D);
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureSequence out(L, D, tmpl.frame_shift());
  for (std::size_t u = 0; u < L; ++u)
    for (std::size_t d = 0; d < D; ++d) {
      const double noise = inst.noise > 0 ? inst.noise * normal(rng) : 0.0;
      out(u, d) = tmpl(source[u], d) + offset[d] + noise;
    }
  return out;
}

Language derive_language(const FamilySpec& family) {
  family.validate();
  const Language parent = gen_language(family.parent);
  Language child;
  child.code = family.code;
  child.words = parent.words;

  const std::size_t V = parent.templates.size();
  std::vector<std::size_t> order(V);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(family.seed, 2));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_fresh = static_cast<std::size_t>(std::lround(family.resample_fraction * V));
  std::vector<char> fresh(V, 0);
  for (std::size_t i = 0; i < n_fresh; ++i) fresh[order[i]] = 1;

  LanguageSpec fresh_spec = family.parent;
  for (std::size_t v = 0; v < V; ++v) {
    FeatureSequence t;
    if (fresh[v]) {
      t = fresh_template(fresh_spec, derive_seed(family.seed, 3, v));
    } else {
      t = parent.templates[v];
      auto p = random_trajectory(t.num_frames(), t.dim(), family.parent.step_scale,
                                       family.parent.smoothing_window,
                                       derive_seed(family.seed, 4, v));
      shape_template(p, family.parent);
      for (std::size_t i = 0; i < t.data().size(); ++i) t.data()[i] += family.drift * p.data()[i];
    }
    quantize(t);
    child.templates.push_back(std::move(t));
  }
  return child;
}

corpus::PairList make_utd_pairs(std::span<const corpus::WordSegment> segments, std::size_t n,
                                double false_fraction, std::uint64_t seed) {
  if (false_fraction < 0 || false_fraction > 1)
    throw InvalidConfig("false pair fraction must lie in [0, 1]");
  const auto n_false =
      static_cast<std::size_t>(std::lround(false_fraction * static_cast<double>(n)));
  auto list = corpus::sample_true_pairs(segments, n - n_false, seed).list;
  list.source = corpus::PairSource::kUtd;
  if (n_false == 0) return list;

  std::mt19937_64 rng(derive_seed(seed, 5));
  std::uniform_int_distribution<std::size_t> pick(0, segments.size() - 1);
  std::size_t added = 0, attempts = 0;
  while (added < n_false) {
    if (++attempts > 100 * n_false + 1000) throw NoPairsAvailable("cannot find enough false pairs");
    std::size_t a = pick(rng), b = pick(rng);
    if (a == b || segments[a].same_type(segments[b])) continue;
    if (a > b) std::swap(a, b);
    list.pairs.emplace_back(a, b);
    ++added;
  }
  std::shuffle(list.pairs.begin(), list.pairs.end(), rng);
  return list;
}

std::vector<std::size_t> SynthCorpus::select(const std::vector<std::string>& codes) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < segments.size(); ++i)
    if (std::find(codes.begin(), codes.end(), segments[i].language) != codes.end())
      out.push_back(i);
  return out;
}

std::vector<corpus::NamedFeatures> SynthCorpus::utterances() const {
  std::vector<corpus::NamedFeatures> out;
  out.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i)
    out.push_back({segments[i].utterance_id, features[i]});
  return out;
}

SynthCorpus gen_corpus(const std::vector<Language>& languages, const CorpusSpec& spec) {
  spec.instance.validate();
  if (spec.speakers_per_language == 0 || spec.instances_per_word == 0)
    throw InvalidConfig("need at least one speaker and one instance per word");
  SynthCorpus c;
  for (std::size_t li = 0; li < languages.size(); ++li) {
    const auto& lang = languages[li];
    if (std::find(c.languages.begin(), c.languages.end(), lang.code) != c.languages.end())
      throw InvalidConfig("duplicate language code " + lang.code);
    c.languages.push_back(lang.code);
    const std::size_t first = c.segments.size();
    for (std::size_t s = 0; s < spec.speakers_per_language; ++s) {
      InstanceSpec inst = spec.instance;
      inst.speaker = lang.code + "_s" + std::to_string(s);
      for (std::size_t v = 0; v < lang.templates.size(); ++v)
        for (std::size_t k = 0; k < spec.instances_per_word; ++k) {
          auto f = gen_instance(lang.templates[v], inst,
                                derive_seed(spec.seed, hash_string(inst.speaker),
                                            v * 1000003 + k));
          quantize(f);
          corpus::WordSegment seg;
          seg.utterance_id = inst.speaker + "_" + lang.words[v] + "_" + std::to_string(k);
          seg.start_frame = 0;
          seg.end_frame = f.num_frames();
          seg.segment_id = corpus::make_segment_id(seg.utterance_id, 0, seg.end_frame);
          seg.word_type = lang.words[v];
          seg.language = lang.code;
          seg.speaker = inst.speaker;
          c.segments.push_back(std::move(seg));
          c.features.push_back(std::move(f));
        }
    }
    const std::span<const corpus::WordSegment> local(c.segments.data() + first,
                                                     c.segments.size() - first);
    auto pairs = make_utd_pairs(local, spec.utd_pairs, spec.false_pair_fraction,
                                derive_seed(spec.seed, 6, li));
    for (auto& [a, b] : pairs.pairs) {
      a += first;
      b += first;
    }
    c.utd_pairs.push_back(std::move(pairs));
  }
  return c;
}

void write_corpus(const SynthCorpus& c, const std::string& dir, const std::string& manifest_json) {
  std::filesystem::create_directories(dir);
  const auto utts = c.utterances();
  corpus::write_archive(dir + "/features.awef", utts);
  corpus::write_alignments(c.segments, dir + "/segments.txt");
  for (std::size_t li = 0; li < c.languages.size(); ++li)
    corpus::write_pairs(c.utd_pairs[li], c.segments, dir + "/pairs_" + c.languages[li] + ".txt");
  std::ofstream os(dir + "/manifest.json");
  if (!os) throw IoError("cannot write manifest in " + dir);
  os << manifest_json << '\n';
}

SynthCorpus read_corpus(const std::string& dir) {
  SynthCorpus c;
  c.segments = corpus::load_alignments(dir + "/segments.txt");
  const auto archive = corpus::FeatureArchive::open(dir + "/features.awef");
  c.features = corpus::extract_segments(archive, c.segments);
  for (const auto& s : c.segments)
    if (std::find(c.languages.begin(), c.languages.end(), s.language) == c.languages.end())
      c.languages.push_back(s.language);
  for (const auto& code : c.languages) {
    const std::string path = dir + "/pairs_" + code + ".txt";
    c.utd_pairs.push_back(std::filesystem::exists(path)
                              ? corpus::load_pairs(path, corpus::PairSource::kUtd, c.segments)
                              : corpus::PairList{{}, corpus::PairSource::kUtd});
  }
  return c;
}

std::vector<Language> CorpusPlan::languages() const {
  std::vector<Language> out;
  for (const auto& s : well_resourced) out.push_back(gen_language(s));
  for (const auto& f : zero_resource) out.push_back(derive_language(f));
  for (const auto& f : development) out.push_back(derive_language(f));
  return out;
}

std::vector<std::string> CorpusPlan::well_resourced_codes() const {
  std::vector<std::string> out;
  for (const auto& s : well_resourced) out.push_back(s.code);
  return out;
}

std::vector<std::string> CorpusPlan::zero_resource_codes() const {
  std::vector<std::string> out;
  for (const auto& f : zero_resource) out.push_back(f.code);
  return out;
}

std::vector<std::string> CorpusPlan::development_codes() const {
  std::vector<std::string> out;
  for (const auto& f : development) out.push_back(f.code);
  return out;
}

namespace {

nlohmann::ordered_json language_json(const LanguageSpec& s) {
  return {{"code", s.code},           {"vocab_size", s.vocab_size},
          {"dim", s.dim},             {"min_length", s.min_length},
          {"max_length", s.max_length}, {"step_scale", s.step_scale},
          {"smoothing_window", s.smoothing_window}, {"spectral_decay", s.spectral_decay},
          {"seed", s.seed}};
}

LanguageSpec language_from_json(const nlohmann::json& j) {
  LanguageSpec s;
  s.code = j.at("code");
  s.vocab_size = j.at("vocab_size");
  s.dim = j.at("dim");
  s.min_length = j.at("min_length");
  s.max_length = j.at("max_length");
  s.step_scale = j.at("step_scale");
  s.smoothing_window = j.at("smoothing_window");
  s.spectral_decay = j.value("spectral_decay", 1.0);
  s.seed = j.at("seed");
  return s;
}

nlohmann::ordered_json family_json(const FamilySpec& f) {
  return {{"code", f.code},
          {"parent", language_json(f.parent)},
          {"drift", f.drift},
          {"resample_fraction", f.resample_fraction},
          {"seed", f.seed}};
}

FamilySpec family_from_json(const nlohmann::json& j) {
  FamilySpec f;
  f.code = j.at("code");
  f.parent = language_from_json(j.at("parent"));
  f.drift = j.at("drift");
  f.resample_fraction = j.at("resample_fraction");
  f.seed = j.at("seed");
  return f;
}

}  // namespace

std::string CorpusPlan::manifest_json() const {
  nlohmann::ordered_json j;
  j["generator"] = "synthlang";
  j["well_resourced"] = nlohmann::ordered_json::array();
  for (const auto& s : well_resourced) j["well_resourced"].push_back(language_json(s));
  j["zero_resource"] = nlohmann::ordered_json::array();
  for (const auto& f : zero_resource) j["zero_resource"].push_back(family_json(f));
  j["development"] = nlohmann::ordered_json::array();
  for (const auto& f : development) j["development"].push_back(family_json(f));
  j["corpus"] = {{"speakers_per_language", corpus.speakers_per_language},
                 {"instances_per_word", corpus.instances_per_word},
                 {"warp", corpus.instance.warp},
                 {"offset_scale", corpus.instance.offset_scale},
                 {"noise", corpus.instance.noise},
                 {"utd_pairs", corpus.utd_pairs},
                 {"false_pair_fraction", corpus.false_pair_fraction},
                 {"seed", corpus.seed}};
  return j.dump(2);
}

CorpusPlan CorpusPlan::from_manifest_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    CorpusPlan p;
    for (const auto& s : j.at("well_resourced")) p.well_resourced.push_back(language_from_json(s));
    for (const auto& f : j.at("zero_resource")) p.zero_resource.push_back(family_from_json(f));
    for (const auto& f : j.at("development")) p.development.push_back(family_from_json(f));
    const auto& c = j.at("corpus");
    p.corpus.speakers_per_language = c.at("speakers_per_language");
    p.corpus.instances_per_word = c.at("instances_per_word");
    p.corpus.instance.warp = c.at("warp");
    p.corpus.instance.offset_scale = c.at("offset_scale");
    p.corpus.instance.noise = c.at("noise");
    p.corpus.utd_pairs = c.at("utd_pairs");
    p.corpus.false_pair_fraction = c.at("false_pair_fraction");
    p.corpus.seed = c.at("seed");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("bad corpus manifest: ") + e.what());
  }
}

CorpusPlan default_plan(std::uint64_t seed, bool with_dev_language) {
  CorpusPlan p;
  for (std::size_t i = 0; i < 7; ++i) {
    LanguageSpec s;
    s.code = "T" + std::to_string(i);
    s.spectral_decay = 0.8;
    s.seed = derive_seed(seed, 10, i);
    p.well_resourced.push_back(s);
  }
  for (std::size_t i = 0; i < 6; ++i) {
    FamilySpec f;
    f.parent = p.well_resourced[i];
    f.code = "Z" + std::to_string(i);
    f.drift = 0.15;
    f.seed = derive_seed(seed, 11, i);
    p.zero_resource.push_back(f);
  }
  if (with_dev_language) {
    FamilySpec f;
    f.parent = p.well_resourced[6];
    f.code = "DEV";
    f.drift = 0.15;
    f.seed = derive_seed(seed, 12);
    p.development.push_back(f);
  }
  p.corpus.instance.offset_scale = 0.75;
  p.corpus.utd_pairs = 150;
  p.corpus.seed = derive_seed(seed, 13);
  return p;
}

}  // namespace awe::synthlang
