#include <algorithm>
#include <numeric>
#include <random>

#include "awe/embedders.hpp"
#include "awe/error.hpp"

namespace awe::embedders {

using gradnet::AdamOptions;
using gradnet::AdamState;

void TrainConfig::validate() const {
  if (batch_size == 0) throw InvalidConfig("batch size must be positive");
  if (!(lr > 0.0)) throw InvalidConfig("learning rate must be positive");
  if (min_frames == 0) throw InvalidConfig("min_frames must be positive");
}

namespace {

// Gradients of a batch are summed in this many fixed chunks, then the chunks
// are reduced in order, so the result does not depend on the thread count.
constexpr std::size_t kGradientChunks = 4;

// One training item: encoder input, reconstruction target or class.
struct Item {
  std::size_t input = 0;
  std::size_t target = 0;
};

enum class Objective { kReconstruct, kClassify };

template <typename Real>
class Trainer {
 public:
  Trainer(ModelParameters<Real>& model, const std::vector<Segment<Real>>& segs,
          const TrainConfig& cfg)
      : model_(model), segs_(segs), cfg_(cfg),
        adam_(model.params, AdamOptions{.lr = cfg.lr}),
        shuffle_rng_(cfg.seed ^ 0x9e3779b97f4a7c15ull),
        total_(model.params.zeros_like()),
        chunks_(kGradientChunks, model.params.zeros_like()) {}

  void run(std::vector<Item> items, Objective objective, std::size_t epochs,
           std::vector<double>& trace) {
    if (items.empty()) return;
    std::vector<std::size_t> order(items.size());
    std::vector<Real> item_loss;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), shuffle_rng_);
      double epoch_loss = 0.0;
      for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
        const std::size_t stop = std::min(order.size(), start + cfg_.batch_size);
        const std::size_t n = stop - start;
        item_loss.assign(n, Real(0));
        for (auto& c : chunks_) c.set_zero();

        const auto chunks = static_cast<std::ptrdiff_t>(kGradientChunks);
#pragma omp parallel for schedule(static) if (cfg_.parallel)
        for (std::ptrdiff_t c = 0; c < chunks; ++c) {
          const std::size_t lo = n * static_cast<std::size_t>(c) / kGradientChunks;
          const std::size_t hi = n * static_cast<std::size_t>(c + 1) / kGradientChunks;
          for (std::size_t b = lo; b < hi; ++b) {
            const Item& it = items[order[start + b]];
            item_loss[b] = objective == Objective::kReconstruct
                               ? cae_loss_grad(segs_[it.input], segs_[it.target], model_, chunks_[c])
                               : classifier_loss_grad(segs_[it.input], it.target, model_, chunks_[c]);
          }
        }

        total_.set_zero();
        for (const auto& c : chunks_) total_.accumulate(c);
        const Real scale = Real(1) / static_cast<Real>(n);
        for (std::size_t i = 0; i < total_.size(); ++i)
          for (auto& v : total_[i].data) v *= scale;
        gradnet::clip_global_norm(total_, cfg_.clip_norm);
        gradnet::adam_step(model_.params, total_, adam_);
        for (Real l : item_loss) epoch_loss += static_cast<double>(l);
      }
      const double mean = epoch_loss / static_cast<double>(items.size());
      trace.push_back(mean);
      if (cfg_.on_epoch) cfg_.on_epoch(trace.size(), mean);
    }
  }

 private:
  ModelParameters<Real>& model_;
  const std::vector<Segment<Real>>& segs_;
  const TrainConfig& cfg_;
  AdamState<Real> adam_;
  std::mt19937_64 shuffle_rng_;
  ParameterSet<Real> total_;
  std::vector<ParameterSet<Real>> chunks_;
};

template <typename Real>
std::vector<Segment<Real>> convert(std::span<const FeatureSequence> segments) {
  std::vector<Segment<Real>> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(to_segment<Real>(s));
  return out;
}

std::vector<Item> autoencoder_items(std::span<const std::size_t> ids) {
  std::vector<Item> items;
  items.reserve(ids.size());
  for (auto i : ids) items.push_back({i, i});
  return items;
}

}  // namespace

template <typename Real>
TrainResult<Real> train_ae(std::span<const FeatureSequence> segments, const ArchDescriptor& arch,
                           const TrainConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> kept;
  TrainResult<Real> res;
  res.model = gradnet::init_model<Real>(arch, cfg.seed);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].num_frames() >= cfg.min_frames)
      kept.push_back(i);
    else
      ++res.dropped_short;
  }
  if (kept.empty()) throw EmptyTrainingSet("no segments of at least " +
                                           std::to_string(cfg.min_frames) + " frames to train on");
  const auto segs = convert<Real>(segments);
  Trainer<Real> trainer(res.model, segs, cfg);
  res.items_per_epoch = kept.size();
  trainer.run(autoencoder_items(kept), Objective::kReconstruct, cfg.epochs, res.loss_trace);
  return res;
}

template <typename Real>
TrainResult<Real> train_cae(std::span<const FeatureSequence> segments,
                            const corpus::PairList& pairs, const ArchDescriptor& arch,
                            const TrainConfig& cfg) {
  cfg.validate();
  if (pairs.empty()) throw NoPairsAvailable("CAE training needs at least one pair");
  TrainResult<Real> res;
  res.model = gradnet::init_model<Real>(arch, cfg.seed);

  std::vector<Item> items;
  std::vector<char> used(segments.size(), 0);
  for (const auto& [a, b] : pairs.pairs) {
    if (a >= segments.size() || b >= segments.size())
      throw UnknownSegmentId("pair refers to segment outside the training set");
    if (segments[a].num_frames() < cfg.min_frames || segments[b].num_frames() < cfg.min_frames) {
      ++res.dropped_short;
      continue;
    }
    items.push_back({a, b});
    items.push_back({b, a});
    used[a] = used[b] = 1;
  }
  if (items.empty()) throw NoPairsAvailable("every pair contains a segment that is too short");

  std::vector<std::size_t> pretrain_ids;
  for (std::size_t i = 0; i < used.size(); ++i)
    if (used[i]) pretrain_ids.push_back(i);

  const auto segs = convert<Real>(segments);
  Trainer<Real> trainer(res.model, segs, cfg);
  trainer.run(autoencoder_items(pretrain_ids), Objective::kReconstruct, cfg.pretrain_epochs,
              res.loss_trace);
  res.pretrain_epochs = res.loss_trace.size();
  res.items_per_epoch = items.size();
  trainer.run(std::move(items), Objective::kReconstruct, cfg.epochs, res.loss_trace);
  return res;
}

template <typename Real>
TrainResult<Real> train_classifier(std::span<const FeatureSequence> segments,
                                   std::span<const corpus::WordSegment> labels,
                                   const corpus::Vocabulary& vocab, ArchDescriptor arch,
                                   const TrainConfig& cfg) {
  cfg.validate();
  if (labels.size() != segments.size())
    throw ShapeMismatch("one label per segment required");
  arch.kind = gradnet::ModelKind::kClassifierRnn;
  arch.num_classes = vocab.size();
  if (vocab.size() == 0) throw EmptyTrainingSet("empty vocabulary");
  TrainResult<Real> res;
  res.model = gradnet::init_model<Real>(arch, cfg.seed);

  std::vector<Item> items;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto k = vocab.index(labels[i]);
    if (!k) {
      ++res.dropped_unknown;
      continue;
    }
    if (segments[i].num_frames() < cfg.min_frames) {
      ++res.dropped_short;
      continue;
    }
    items.push_back({i, *k});
  }
  if (items.empty()) throw EmptyTrainingSet("no labeled segments inside the vocabulary");

  const auto segs = convert<Real>(segments);
  Trainer<Real> trainer(res.model, segs, cfg);
  res.items_per_epoch = items.size();
  trainer.run(std::move(items), Objective::kClassify, cfg.epochs, res.loss_trace);
  return res;
}

template <typename Real>
double classifier_accuracy(std::span<const FeatureSequence> segments,
                           std::span<const corpus::WordSegment> labels,
                           const corpus::Vocabulary& vocab, const ModelParameters<Real>& m) {
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto k = vocab.index(labels[i]);
    if (!k) continue;
    const auto p = classify(to_segment<Real>(segments[i]), m);
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    correct += best == *k;
    ++total;
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

template <typename Real>
std::vector<std::vector<double>> embed_all(std::span<const FeatureSequence> segments,
                                           const ModelParameters<Real>& m) {
  std::vector<std::vector<double>> out(segments.size());
  const auto n = static_cast<std::ptrdiff_t>(segments.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = embed(segments[i], m);
  return out;
}

template <typename Real>
std::vector<std::vector<double>> embed_all_serial(std::span<const FeatureSequence> segments,
                                                  const ModelParameters<Real>& m) {
  std::vector<std::vector<double>> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(embed(s, m));
  return out;
}

#define AWE_INSTANTIATE(Real)                                                                    \
  template TrainResult<Real> train_ae<Real>(std::span<const FeatureSequence>,                   \
                                            const ArchDescriptor&, const TrainConfig&);         \
  template TrainResult<Real> train_cae<Real>(std::span<const FeatureSequence>,                  \
                                             const corpus::PairList&, const ArchDescriptor&,    \
                                             const TrainConfig&);                               \
  template TrainResult<Real> train_classifier<Real>(                                            \
      std::span<const FeatureSequence>, std::span<const corpus::WordSegment>,                   \
      const corpus::Vocabulary&, ArchDescriptor, const TrainConfig&);                           \
  template double classifier_accuracy<Real>(std::span<const FeatureSequence>,                   \
                                            std::span<const corpus::WordSegment>,               \
                                            const corpus::Vocabulary&,                          \
                                            const ModelParameters<Real>&);                      \
  template std::vector<std::vector<double>> embed_all<Real>(std::span<const FeatureSequence>,   \
                                                            const ModelParameters<Real>&);      \
  template std::vector<std::vector<double>> embed_all_serial<Real>(                             \
      std::span<const FeatureSequence>, const ModelParameters<Real>&);

AWE_INSTANTIATE(float)
AWE_INSTANTIATE(double)
#undef AWE_INSTANTIATE

}  // namespace awe::embedders
