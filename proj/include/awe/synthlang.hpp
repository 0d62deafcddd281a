#pragma once

// Synthetic "languages": smooth template trajectories per word, instances
// with time warping, speaker offsets and noise, and parent/child families
// with controllable relatedness.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "awe/corpus.hpp"
#include "awe/featkit.hpp"

namespace awe::synthlang {

using featkit::FeatureSequence;

struct LanguageSpec {
  std::string code = "L0";
  std::size_t vocab_size = 30;
  std::size_t dim = 13;
  std::size_t min_length = 20;
  std::size_t max_length = 40;
  double step_scale = 1.0;          // random-walk increment standard deviation
  std::size_t smoothing_window = 5; // centred moving average
  // Below 1, frames are mixed by a language-specific rotation whose principal
  // axes have scales decay^k, so a language occupies its own region of
  // feature space. Derived languages inherit the rotation.
  double spectral_decay = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Language {
  std::string code;
  std::vector<std::string> words;
  std::vector<FeatureSequence> templates;
};

struct InstanceSpec {
  double warp = 0.3;          // instances are up to warp * T frames longer
  double offset_scale = 1.0;  // speaker offset standard deviation
  double noise = 0.3;         // i.i.d. Gaussian noise standard deviation
  std::string speaker;        // offset vector is a function of this id

  void validate() const;
};

struct FamilySpec {
  LanguageSpec parent;
  std::string code = "C0";
  double drift = 0.3;
  double resample_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

// One smoothed Gaussian random walk of T frames, standardized per dimension.
FeatureSequence random_trajectory(std::size_t T, std::size_t dim, double step_scale,
                                  std::size_t window, std::uint64_t seed);

Language gen_language(const LanguageSpec& spec);

// Applies the language's dimension mixing (no-op when spectral_decay is 1)
// and re-standardizes each dimension.
void shape_template(FeatureSequence& f, const LanguageSpec& spec);

// Speaker offset vector for `speaker`, N(0, scale^2) per dimension.
std::vector<double> speaker_offset(const std::string& speaker, double scale, std::size_t dim);

// Monotone piecewise-linear stretch that keeps every template frame, plus
// the speaker offset and noise.
FeatureSequence gen_instance(const FeatureSequence& tmpl, const InstanceSpec& inst,
                             std::uint64_t seed);

// Child word v = parent word v + drift * smooth perturbation, except a
// resample_fraction of words drawn fresh.
Language derive_language(const FamilySpec& family);

struct CorpusSpec {
  std::size_t speakers_per_language = 6;
  std::size_t instances_per_word = 5;
  InstanceSpec instance;           // speaker field ignored
  std::size_t utd_pairs = 2000;    // noisy pairs per language
  double false_pair_fraction = 0.3;
  std::uint64_t seed = 0;
};

struct SynthCorpus {
  std::vector<std::string> languages;
  std::vector<corpus::WordSegment> segments;
  std::vector<FeatureSequence> features;  // one per segment, float32-exact
  std::vector<corpus::PairList> utd_pairs; // per language, global segment indices

  // Indices of segments whose language is in `codes`.
  std::vector<std::size_t> select(const std::vector<std::string>& codes) const;
  std::vector<corpus::NamedFeatures> utterances() const;
};

// True pairs from sample_true_pairs plus a false_fraction share of pairs of
// different word types, shuffled together. With no false pairs the result is
// the true-pair sample unchanged.
corpus::PairList make_utd_pairs(std::span<const corpus::WordSegment> segments, std::size_t n,
                                double false_fraction, std::uint64_t seed);

SynthCorpus gen_corpus(const std::vector<Language>& languages, const CorpusSpec& spec);

// Writes features.awef, segments.txt, pairs_<lang>.txt and manifest.json.
void write_corpus(const SynthCorpus& c, const std::string& dir, const std::string& manifest_json);
// Reads back what write_corpus wrote (UTD pairs included).
SynthCorpus read_corpus(const std::string& dir);

// Default desk-scale layout: well-resourced languages T0..T6, zero-resource
// languages Z0..Z5 each derived from the T language of the same index, and
// an optional development language DEV derived from T6.
struct CorpusPlan {
  std::vector<LanguageSpec> well_resourced;
  std::vector<FamilySpec> zero_resource;
  std::vector<FamilySpec> development;
  CorpusSpec corpus;

  std::vector<Language> languages() const;
  std::vector<std::string> well_resourced_codes() const;
  std::vector<std::string> zero_resource_codes() const;
  std::vector<std::string> development_codes() const;
  std::string manifest_json() const;
  static CorpusPlan from_manifest_json(const std::string& text);
};

CorpusPlan default_plan(std::uint64_t seed, bool with_dev_language = false);

}  // namespace awe::synthlang
