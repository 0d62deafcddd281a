#pragma once

// Experiment runner: model comparison table, training-language ablation and
// the cross-lingual transfer matrix over a labeled multi-language corpus.

#include <cstdint>
#include <string>
#include <vector>

#include "awe/dtwbase.hpp"
#include "awe/embedders.hpp"
#include "awe/samediff.hpp"
#include "awe/synthlang.hpp"

namespace awe::xpr {

inline constexpr const char* kVersion = "0.1.0";

struct Settings {
  gradnet::ArchDescriptor arch;  // layer sizes shared by every RNN model
  embedders::TrainConfig ae;
  embedders::TrainConfig cae;
  embedders::TrainConfig classifier;
  std::size_t multilingual_pairs = corpus::kDefaultTruePairs;
  std::size_t monolingual_pairs = corpus::kDefaultTruePairs;  // supervised single-language CAE
  std::size_t vocab_cap = corpus::kDefaultVocabularyCap;
  samediff::PositiveMode mode = samediff::PositiveMode::kAll;
  dtwbase::DtwConfig dtw;
  bool double_precision = false;
  bool baselines = true;  // DTW and downsampling rows; they do not depend on the seed
  std::uint64_t seed = 0;

  std::string to_json() const;
};

// Full-size architecture for large corpora: 3+3 layers, 400 units, M=130.
Settings full_settings();
// Reduced sizes for the synthetic desk-scale corpora.
Settings desk_settings();

// Rows of the model comparison, in output order.
inline const std::vector<std::string> kTableModels = {
    "dtw", "downsample", "ae-rnn-utd", "cae-rnn-utd", "cae-rnn-multilingual",
    "classifier-rnn-multilingual"};

struct Table {
  std::vector<std::string> models;
  std::vector<std::string> languages;
  std::vector<std::vector<double>> ap;  // [model][language]

  double at(const std::string& model, const std::string& language) const;
  void write_csv(const std::string& path) const;
  std::string to_json() const;
};

// Unsupervised rows train on each evaluation language's own UTD pair list;
// multilingual rows train once on the pooled training languages, which must
// not overlap the evaluation languages.
Table run_table(const synthlang::SynthCorpus& c, const std::vector<std::string>& train_languages,
                const std::vector<std::string>& eval_languages, const Settings& s);

struct AblationRow {
  std::string subset;  // languages joined by '+', or "utd" for the in-language reference
  std::string model;
  double ap = 0.0;
  std::uint64_t seed = 0;
};

std::vector<AblationRow> run_ablation(const synthlang::SynthCorpus& c,
                                      const std::vector<std::vector<std::string>>& subsets,
                                      const std::string& eval_language, const Settings& s,
                                      bool with_utd_reference = true);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);

struct CrossMatrix {
  std::vector<std::string> train_languages;
  std::vector<std::string> eval_languages;
  std::vector<std::vector<double>> ap;          // [train][eval]
  std::vector<std::vector<double>> normalized;  // each column divided by its max

  void write_csv(const std::string& path, bool normalized_values = false) const;
};

// One supervised monolingual CAE-RNN per training language, evaluated on
// every evaluation language.
CrossMatrix run_crossmatrix(const synthlang::SynthCorpus& c,
                            const std::vector<std::string>& train_languages,
                            const std::vector<std::string>& eval_languages, const Settings& s);

// Building blocks, exposed for the CLI and tests.
double evaluate_model_file(const synthlang::SynthCorpus& c, const std::vector<std::size_t>& eval,
                           const std::string& checkpoint, samediff::PositiveMode mode);
void require_disjoint(const synthlang::SynthCorpus& c, const std::vector<std::size_t>& train,
                      const std::vector<std::string>& eval_languages);

// JSON manifest for a run: settings, corpus description and version.
std::string run_manifest(const std::string& experiment, const Settings& s,
                         const std::string& corpus_manifest);

}  // namespace awe::xpr
