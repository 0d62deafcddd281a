// Command-line front end: feature extraction, corpus utilities, training,
// embedding, evaluation and the experiment runner.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "awe/error.hpp"
#include "awe/xpr.hpp"

namespace fs = std::filesystem;
using namespace awe;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << text << '\n';
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// Training knobs shared by the train and xpr verbs.
struct TrainFlags {
  std::optional<std::size_t> pretrain;
  std::size_t epochs = 0, batch = 0, units = 0, layers = 0, embed_dim = 0;
  double lr = 0.0;
  std::string preset = "desk";
  bool double_precision = false;

  void add(CLI::App* app) {
    app->add_option("--preset", preset, "Size preset: desk or full")
        ->check(CLI::IsMember({"desk", "full"}))
        ->capture_default_str();
    app->add_option("--epochs", epochs, "Training epochs (0 keeps the preset)");
    app->add_option("--pretrain-epochs", pretrain, "AE epochs before CAE training");
    app->add_option("--batch", batch, "Minibatch size");
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--units", units, "GRU units per layer");
    app->add_option("--layers", layers, "Encoder and decoder layers");
    app->add_option("--embed-dim", embed_dim, "Embedding dimension M");
    app->add_flag("--double", double_precision, "Train in 64-bit precision");
  }

  xpr::Settings settings(std::uint64_t seed) const {
    auto s = preset == "full" ? xpr::full_settings() : xpr::desk_settings();
    for (auto* c : {&s.ae, &s.cae, &s.classifier}) {
      if (epochs) c->epochs = epochs;
      if (batch) c->batch_size = batch;
      if (lr > 0) c->lr = lr;
    }
    if (pretrain) s.cae.pretrain_epochs = *pretrain;
    if (units) s.arch.units = units;
    if (layers) s.arch.encoder_layers = s.arch.decoder_layers = layers;
    if (embed_dim) s.arch.embed_dim = embed_dim;
    s.double_precision = double_precision;
    s.seed = seed;
    return s;
  }
};

struct Subset {
  std::vector<featkit::FeatureSequence> features;
  std::vector<corpus::WordSegment> labels;
};

Subset subset(const synthlang::SynthCorpus& c, const std::vector<std::string>& languages) {
  Subset s;
  for (auto i : languages.empty() ? c.select(c.languages) : c.select(languages)) {
    s.features.push_back(c.features[i]);
    s.labels.push_back(c.segments[i]);
  }
  if (s.features.empty()) throw InvalidConfig("no segments for the requested languages");
  return s;
}

template <typename Real>
std::vector<std::vector<double>> embed_with_checkpoint(const std::string& path,
                                                       std::span<const featkit::FeatureSequence> f) {
  return embedders::embed_all<Real>(f, gradnet::load_checkpoint<Real>(path));
}

std::vector<std::vector<double>> embed_checkpoint(const std::string& path, bool double_precision,
                                                  std::span<const featkit::FeatureSequence> f) {
  return double_precision ? embed_with_checkpoint<double>(path, f)
                          : embed_with_checkpoint<float>(path, f);
}

void write_report(const samediff::EvalReport& r, const fs::path& out) {
  fs::create_directories(out);
  r.write_json((out / "report.json").string());
  r.write_pr_csv((out / "pr.csv").string());
  std::cout << "AP " << r.average_precision << " (" << r.n_positive << " positive of "
            << r.n_pairs << " pairs, mode " << samediff::to_string(r.mode) << ")\n";
}

// Corpus for the experiment verbs: an existing directory, or the default
// synthetic corpus generated from the seed.
struct ExperimentCorpus {
  synthlang::SynthCorpus corpus;
  std::string manifest;
  std::vector<std::string> train_default, eval_default;
};

ExperimentCorpus experiment_corpus(const std::string& dir, std::uint64_t seed,
                                   const std::string& dev_language) {
  ExperimentCorpus e;
  if (!dir.empty()) {
    e.corpus = synthlang::read_corpus(dir);
    const fs::path manifest = fs::path(dir) / "manifest.json";
    if (fs::exists(manifest)) {
      e.manifest = read_text(manifest);
      const auto plan = synthlang::CorpusPlan::from_manifest_json(e.manifest);
      e.train_default = plan.well_resourced_codes();
      e.eval_default = plan.zero_resource_codes();
    }
    return e;
  }
  auto plan = synthlang::default_plan(seed, !dev_language.empty());
  if (!dev_language.empty()) plan.development.front().code = dev_language;
  e.corpus = synthlang::gen_corpus(plan.languages(), plan.corpus);
  e.manifest = plan.manifest_json();
  e.train_default = plan.well_resourced_codes();
  e.eval_default = plan.zero_resource_codes();
  return e;
}

void reserve_dev(const std::string& dev, const std::vector<std::vector<std::string>>& sets) {
  if (dev.empty()) return;
  for (const auto& s : sets)
    if (std::find(s.begin(), s.end(), dev) != s.end())
      throw InvalidConfig("development language " + dev + " is reserved for tuning");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic word embedding toolkit"};
  app.require_subcommand(1);

  // features extract
  auto* features = app.add_subcommand("features", "Feature extraction")->require_subcommand(1);
  auto* extract = features->add_subcommand("extract", "MFCCs for a list of recordings");
  std::string wav_list, archive_out;
  int raw_rate = 0;
  bool no_cmvn = false;
  featkit::MfccConfig mfcc_cfg;
  extract->add_option("--list", wav_list, "Lines of '<utterance-id> <path>'")->required();
  extract->add_option("--out", archive_out, "Output feature archive")->required();
  extract->add_option("--raw-rate", raw_rate, "Inputs are raw float32 at this sample rate");
  extract->add_flag("--no-cmvn", no_cmvn, "Skip per-utterance mean and variance normalization");
  extract->add_option("--n-mels", mfcc_cfg.n_mels, "Mel filters")->capture_default_str();
  extract->add_option("--preemph", mfcc_cfg.preemph, "Preemphasis")->capture_default_str();
  extract->add_flag("--log-energy{false}", mfcc_cfg.use_c0, "Log frame energy instead of c0");

  // corpus pairs
  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus utilities")->require_subcommand(1);
  auto* pairs_cmd = corpus_cmd->add_subcommand("pairs", "Sample true word pairs");
  std::string corpus_dir, languages_arg, out_path;
  std::size_t n_pairs = corpus::kDefaultTruePairs;
  std::uint64_t seed = 0;
  pairs_cmd->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  pairs_cmd->add_option("--languages", languages_arg, "Comma-separated language codes");
  pairs_cmd->add_option("-n,--n", n_pairs, "Pairs to sample")->capture_default_str();
  pairs_cmd->add_option("--seed", seed, "Sampling seed")->capture_default_str();
  pairs_cmd->add_option("--out", out_path, "Output pair list")->required();

  // synth generate
  auto* synth = app.add_subcommand("synth", "Synthetic corpora")->require_subcommand(1);
  auto* generate = synth->add_subcommand("generate", "Write the default synthetic corpus");
  std::string dev_language;
  generate->add_option("--out", out_path, "Output directory")->required();
  generate->add_option("--seed", seed, "Corpus seed")->capture_default_str();
  generate->add_option("--dev-language", dev_language, "Also generate a development language");

  // train
  auto* train = app.add_subcommand("train", "Train an embedding model")->require_subcommand(1);
  TrainFlags flags;
  std::string pairs_file;
  std::size_t vocab_cap = corpus::kDefaultVocabularyCap;
  std::vector<CLI::App*> trainers;
  for (const char* kind : {"ae", "cae", "classifier"}) {
    auto* t = train->add_subcommand(kind, std::string("Train the ") + kind + " model");
    t->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    t->add_option("--languages", languages_arg, "Comma-separated training languages")->required();
    t->add_option("--out", out_path, "Output directory")->required();
    t->add_option("--seed", seed, "Initialization and shuffling seed")->capture_default_str();
    flags.add(t);
    trainers.push_back(t);
  }
  trainers[0]->add_option("--pairs", pairs_file, "Train on the segments of this pair list");
  trainers[1]->add_option("--pairs", pairs_file, "Pair list; default samples true pairs");
  trainers[1]->add_option("-n,--n", n_pairs, "True pairs to sample without --pairs");
  trainers[2]->add_option("--vocab-cap", vocab_cap, "Word types kept per language")
      ->capture_default_str();

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "Embed segments with a trained model");
  std::string model_path;
  bool model_double = false;
  embed_cmd->add_option("--model", model_path, "Checkpoint")->required();
  embed_cmd->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  embed_cmd->add_option("--languages", languages_arg, "Comma-separated languages (default all)");
  embed_cmd->add_option("--out", out_path, "Output embedding archive")->required();
  embed_cmd->add_flag("--double", model_double, "Evaluate in 64-bit precision");

  // eval samediff | dtw
  auto* eval = app.add_subcommand("eval", "Same-different evaluation")->require_subcommand(1);
  std::string mode_arg = "all", metric_arg = "cosine";
  bool downsample = false, no_normalize = false;
  auto* samediff_cmd = eval->add_subcommand("samediff", "Embedding-based evaluation");
  auto* dtw_cmd = eval->add_subcommand("dtw", "DTW alignment-cost evaluation");
  for (auto* e : {samediff_cmd, dtw_cmd}) {
    e->add_option("--corpus", corpus_dir, "Corpus directory")->required();
    e->add_option("--languages", languages_arg, "Comma-separated languages")->required();
    e->add_option("--mode", mode_arg, "Positive pairs: all or swdp")
        ->check(CLI::IsMember({"all", "swdp"}))
        ->capture_default_str();
    e->add_option("--out", out_path, "Output directory")->required();
  }
  auto* model_opt = samediff_cmd->add_option("--model", model_path, "Checkpoint");
  samediff_cmd->add_flag("--downsample", downsample, "Use the downsampling baseline")
      ->excludes(model_opt);
  samediff_cmd->add_flag("--double", model_double, "Evaluate in 64-bit precision");
  dtw_cmd->add_option("--metric", metric_arg, "Local distance: cosine or euclidean")
      ->check(CLI::IsMember({"cosine", "euclidean"}))
      ->capture_default_str();
  dtw_cmd->add_flag("--no-normalize", no_normalize, "Do not divide by the path length");

  // xpr table | ablation | crossmatrix
  auto* xpr_cmd = app.add_subcommand("xpr", "Experiments")->require_subcommand(1);
  std::string train_arg, eval_arg, subsets_arg;
  TrainFlags xflags;
  auto* table_cmd = xpr_cmd->add_subcommand("table", "Model comparison table");
  auto* ablation_cmd = xpr_cmd->add_subcommand("ablation", "Training-language ablation");
  auto* cross_cmd = xpr_cmd->add_subcommand("crossmatrix", "Cross-lingual transfer matrix");
  for (auto* x : {table_cmd, ablation_cmd, cross_cmd}) {
    x->add_option("--corpus", corpus_dir, "Corpus directory (default: generate synthetic)");
    x->add_option("--seed", seed, "Experiment seed")->capture_default_str();
    x->add_option("--mode", mode_arg, "Positive pairs: all or swdp")
        ->check(CLI::IsMember({"all", "swdp"}))
        ->capture_default_str();
    x->add_option("--dev-language", dev_language, "Language reserved for tuning");
    x->add_option("--out", out_path, "Output directory")->required();
    xflags.add(x);
  }
  for (auto* x : {table_cmd, cross_cmd}) {
    x->add_option("--train", train_arg, "Comma-separated training languages");
    x->add_option("--eval", eval_arg, "Comma-separated evaluation languages");
  }
  ablation_cmd->add_option("--subsets", subsets_arg, "Subsets like 'T0;T0,T1;T0,T1,T2'")
      ->required();
  ablation_cmd->add_option("--eval", eval_arg, "Evaluation language")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto languages = split(languages_arg, ',');
    const auto mode = samediff::positive_mode_from_string(mode_arg);

    if (extract->parsed()) {
      std::vector<corpus::NamedFeatures> records;
      std::ifstream list(wav_list);
      if (!list) throw IoError("cannot open " + wav_list);
      for (std::string line; std::getline(list, line);) {
        const auto f = split(line, ' ');
        if (f.empty() || f[0].starts_with('#')) continue;
        if (f.size() != 2) throw ParseError(wav_list, 0, "expected '<id> <path>': " + line);
        const auto w = raw_rate > 0 ? featkit::read_raw_float(f[1], raw_rate)
                                    : featkit::read_wav(f[1]);
        auto m = featkit::mfcc(w, mfcc_cfg);
        records.push_back({f[0], no_cmvn ? std::move(m) : featkit::cmvn(m)});
      }
      corpus::write_archive(archive_out, records);
      std::cout << "wrote " << records.size() << " utterances to " << archive_out << '\n';
    } else if (pairs_cmd->parsed()) {
      const auto c = synthlang::read_corpus(corpus_dir);
      const auto s = subset(c, languages);
      const auto sample = corpus::sample_true_pairs(s.labels, n_pairs, seed);
      corpus::write_pairs(sample.list, s.labels, out_path);
      std::cout << "sampled " << sample.list.size() << " of " << sample.population << " pairs"
                << (sample.exhausted ? " (all available)" : "") << '\n';
    } else if (generate->parsed()) {
      auto plan = synthlang::default_plan(seed, !dev_language.empty());
      if (!dev_language.empty()) plan.development.front().code = dev_language;
      const auto c = synthlang::gen_corpus(plan.languages(), plan.corpus);
      synthlang::write_corpus(c, out_path, plan.manifest_json());
      std::cout << "wrote " << c.segments.size() << " segments in " << c.languages.size()
                << " languages to " << out_path << '\n';
    } else if (train->parsed()) {
      const auto c = synthlang::read_corpus(corpus_dir);
      const auto s = subset(c, languages);
      const auto settings = flags.settings(seed);
      const fs::path out(out_path);
      fs::create_directories(out);
      nlohmann::ordered_json log;
      auto finish = [&]<typename Real>(const embedders::TrainResult<Real>& r) {
        gradnet::save_checkpoint(r.model, (out / "model.awep").string());
        log["loss_trace"] = r.loss_trace;
        log["pretrain_epochs"] = r.pretrain_epochs;
        log["items_per_epoch"] = r.items_per_epoch;
        log["dropped_short"] = r.dropped_short;
        log["dropped_unknown"] = r.dropped_unknown;
      };
      auto run = [&]<typename Real>() {
        if (trainers[2]->parsed()) {
          const auto vocab = corpus::build_vocabulary(s.labels, vocab_cap);
          vocab.save((out / "vocab.txt").string());
          auto cfg = settings.classifier;
          cfg.seed = seed;
          finish(embedders::train_classifier<Real>(s.features, s.labels, vocab, settings.arch, cfg));
          return;
        }
        std::optional<corpus::PairList> pairs;
        if (!pairs_file.empty())
          pairs = corpus::load_pairs(pairs_file, corpus::PairSource::kUtd, s.labels);
        auto arch = settings.arch;
        if (trainers[0]->parsed()) {
          std::vector<featkit::FeatureSequence> segs = s.features;
          if (pairs) {
            std::vector<char> used(s.features.size(), 0);
            for (const auto& [a, b] : pairs->pairs) used[a] = used[b] = 1;
            segs.clear();
            for (std::size_t i = 0; i < used.size(); ++i)
              if (used[i]) segs.push_back(s.features[i]);
          }
          arch.kind = gradnet::ModelKind::kAeRnn;
          auto cfg = settings.ae;
          cfg.seed = seed;
          finish(embedders::train_ae<Real>(segs, arch, cfg));
        } else {
          if (!pairs) pairs = corpus::sample_true_pairs(s.labels, n_pairs, seed).list;
          arch.kind = gradnet::ModelKind::kCaeRnn;
          auto cfg = settings.cae;
          cfg.seed = seed;
          finish(embedders::train_cae<Real>(s.features, *pairs, arch, cfg));
        }
      };
      if (settings.double_precision)
        run.template operator()<double>();
      else
        run.template operator()<float>();
      log["settings"] = nlohmann::json::parse(settings.to_json());
      log["languages"] = languages;
      write_text(out / "train.json", log.dump(2));
      std::cout << "model written to " << (out / "model.awep").string() << '\n';
    } else if (embed_cmd->parsed()) {
      const auto c = synthlang::read_corpus(corpus_dir);
      const auto s = subset(c, languages);
      const auto e = embed_checkpoint(model_path, model_double, s.features);
      std::vector<corpus::NamedFeatures> records;
      for (std::size_t i = 0; i < e.size(); ++i)
        records.push_back({s.labels[i].segment_id, featkit::FeatureSequence(e[i], e[i].size())});
      corpus::write_archive(out_path, records);
      std::cout << "wrote " << records.size() << " embeddings to " << out_path << '\n';
    } else if (samediff_cmd->parsed()) {
      if (model_path.empty() && !downsample)
        throw InvalidConfig("give --model or --downsample");
      const auto c = synthlang::read_corpus(corpus_dir);
      const auto s = subset(c, languages);
      std::vector<std::vector<double>> e;
      if (downsample)
        for (const auto& f : s.features) e.push_back(embedders::downsample_embed(f));
      else
        e = embed_checkpoint(model_path, model_double, s.features);
      write_report(samediff::evaluate_embeddings(e, s.labels, mode), out_path);
    } else if (dtw_cmd->parsed()) {
      const auto c = synthlang::read_corpus(corpus_dir);
      const auto s = subset(c, languages);
      dtwbase::DtwConfig cfg;
      cfg.metric = metric_arg == "cosine" ? dtwbase::LocalMetric::kCosine
                                          : dtwbase::LocalMetric::kEuclidean;
      cfg.normalize_by_path = !no_normalize;
      write_report(samediff::same_different_dtw(s.features, s.labels, cfg, mode), out_path);
    } else if (xpr_cmd->parsed()) {
      auto settings = xflags.settings(seed);
      settings.mode = mode;
      const auto ec = experiment_corpus(corpus_dir, seed, dev_language);
      auto train_langs = train_arg.empty() ? ec.train_default : split(train_arg, ',');
      auto eval_langs = eval_arg.empty() ? ec.eval_default : split(eval_arg, ',');
      const fs::path out(out_path);
      fs::create_directories(out);
      std::string name;
      if (table_cmd->parsed()) {
        name = "table";
        reserve_dev(dev_language, {train_langs, eval_langs});
        const auto t = xpr::run_table(ec.corpus, train_langs, eval_langs, settings);
        t.write_csv((out / "table.csv").string());
        write_text(out / "table.json", t.to_json());
        std::cout << read_text(out / "table.csv");
      } else if (ablation_cmd->parsed()) {
        name = "ablation";
        std::vector<std::vector<std::string>> subsets;
        for (const auto& s : split(subsets_arg, ';')) subsets.push_back(split(s, ','));
        auto all = subsets;
        all.push_back({eval_arg});
        reserve_dev(dev_language, all);
        const auto rows = xpr::run_ablation(ec.corpus, subsets, eval_arg, settings);
        xpr::write_ablation_csv(rows, (out / "ablation.csv").string());
        std::cout << read_text(out / "ablation.csv");
      } else {
        name = "crossmatrix";
        reserve_dev(dev_language, {train_langs, eval_langs});
        const auto m = xpr::run_crossmatrix(ec.corpus, train_langs, eval_langs, settings);
        m.write_csv((out / "matrix.csv").string());
        m.write_csv((out / "matrix_normalized.csv").string(), true);
        std::cout << read_text(out / "matrix.csv");
      }
      write_text(out / "manifest.json", xpr::run_manifest(name, settings, ec.manifest));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
