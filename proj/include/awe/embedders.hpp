#pragma once

// Acoustic word embedding models and their training loops: the
// reconstruction autoencoder (AE-RNN), the correspondence autoencoder
// (CAE-RNN), the word classifier (ClassifierRNN), plus the downsampling
// baseline.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "awe/corpus.hpp"
#include "awe/featkit.hpp"
#include "awe/gradnet.hpp"

namespace awe::embedders {

using featkit::FeatureSequence;
using gradnet::ArchDescriptor;
using gradnet::ModelParameters;
using gradnet::ParameterSet;

inline constexpr std::size_t kDefaultEmbedDim = 130;
inline constexpr std::size_t kDownsampleFrames = 10;

struct Embedding {
  std::string segment_id;
  std::vector<double> vector;
};

// Frames converted once to the training precision.
template <typename Real>
struct Segment {
  std::vector<Real> frames;
  std::size_t num_frames = 0;
  std::size_t dim = 0;

  std::span<const Real> frame(std::size_t t) const { return {frames.data() + t * dim, dim}; }
};

template <typename Real>
Segment<Real> to_segment(const FeatureSequence& f);

// Per-item losses. The *_grad variants also add d(loss)/d(params) into grads.
template <typename Real>
Real ae_loss(const Segment<Real>& x, const ModelParameters<Real>& m);
template <typename Real>
Real ae_loss_grad(const Segment<Real>& x, const ModelParameters<Real>& m, ParameterSet<Real>& grads);

template <typename Real>
Real cae_loss(const Segment<Real>& x, const Segment<Real>& target, const ModelParameters<Real>& m);
template <typename Real>
Real cae_loss_grad(const Segment<Real>& x, const Segment<Real>& target,
                   const ModelParameters<Real>& m, ParameterSet<Real>& grads);

template <typename Real>
Real classifier_loss(const Segment<Real>& x, std::size_t k, const ModelParameters<Real>& m);
template <typename Real>
Real classifier_loss_grad(const Segment<Real>& x, std::size_t k, const ModelParameters<Real>& m,
                          ParameterSet<Real>& grads);

// Class probabilities of the classifier head.
template <typename Real>
std::vector<Real> classify(const Segment<Real>& x, const ModelParameters<Real>& m);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t pretrain_epochs = 15;  // AE epochs before CAE training
  std::size_t batch_size = 32;
  double lr = 0.001;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;
  std::size_t min_frames = 2;  // shorter segments are dropped
  bool parallel = true;        // OpenMP over batch items; results identical either way
  std::function<void(std::size_t epoch, double mean_loss)> on_epoch;

  void validate() const;
};

inline constexpr std::size_t kDefaultClassifierEpochs = 50;

template <typename Real>
struct TrainResult {
  ModelParameters<Real> model;
  std::vector<double> loss_trace;  // mean item loss per epoch
  std::size_t pretrain_epochs = 0;  // leading trace entries from AE pretraining
  std::size_t items_per_epoch = 0;
  std::size_t dropped_short = 0;
  std::size_t dropped_unknown = 0;  // classifier: types outside the vocabulary
};

template <typename Real>
TrainResult<Real> train_ae(std::span<const FeatureSequence> segments, const ArchDescriptor& arch,
                           const TrainConfig& cfg);

// AE pretraining over every segment that appears in a pair, then CAE
// training where each pair (a, b) contributes both a->b and b->a.
template <typename Real>
TrainResult<Real> train_cae(std::span<const FeatureSequence> segments,
                            const corpus::PairList& pairs, const ArchDescriptor& arch,
                            const TrainConfig& cfg);

// arch.num_classes is overwritten with vocab.size().
template <typename Real>
TrainResult<Real> train_classifier(std::span<const FeatureSequence> segments,
                                   std::span<const corpus::WordSegment> labels,
                                   const corpus::Vocabulary& vocab, ArchDescriptor arch,
                                   const TrainConfig& cfg);

// Training accuracy of a classifier over labeled segments in the vocabulary.
template <typename Real>
double classifier_accuracy(std::span<const FeatureSequence> segments,
                           std::span<const corpus::WordSegment> labels,
                           const corpus::Vocabulary& vocab, const ModelParameters<Real>& m);

// z = embed_transform(rnn_encode(x)).
template <typename Real>
std::vector<double> embed(const FeatureSequence& x, const ModelParameters<Real>& m);

// Row i holds embed(segments[i]). OpenMP over segments; the serial twin is
// the reference the tests compare against.
template <typename Real>
std::vector<std::vector<double>> embed_all(std::span<const FeatureSequence> segments,
                                           const ModelParameters<Real>& m);
template <typename Real>
std::vector<std::vector<double>> embed_all_serial(std::span<const FeatureSequence> segments,
                                                  const ModelParameters<Real>& m);

// k frames at positions i(T-1)/(k-1), linearly interpolated, concatenated.
std::vector<double> downsample_embed(const FeatureSequence& x, std::size_t k = kDownsampleFrames);

}  // namespace awe::embedders
