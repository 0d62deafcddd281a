#include <cmath>

#include "awe/embedders.hpp"
#include "awe/error.hpp"

namespace awe::embedders {

using gradnet::Graph;

template <typename Real>
Segment<Real> to_segment(const FeatureSequence& f) {
  Segment<Real> s;
  s.num_frames = f.num_frames();
  s.dim = f.dim();
  const auto d = f.data();
  s.frames.assign(d.begin(), d.end());
  return s;
}

namespace {

template <typename Real>
typename Graph<Real>::Var encode_embed(Graph<Real>& g, const Segment<Real>& x,
                                       const ModelParameters<Real>& m) {
  if (x.dim != m.arch.input_dim)
    throw ShapeMismatch("segment dimension " + std::to_string(x.dim) + " but model expects " +
                        std::to_string(m.arch.input_dim));
  auto h = gradnet::rnn_encode<Real>(g, x.frames, x.num_frames, m);
  return gradnet::embed_transform<Real>(g, h, m);
}

template <typename Real>
typename Graph<Real>::Var reconstruction(Graph<Real>& g, const Segment<Real>& x,
                                         const Segment<Real>& target,
                                         const ModelParameters<Real>& m) {
  if (target.dim != m.arch.input_dim || target.num_frames == 0)
    throw ShapeMismatch("reconstruction target does not match the model");
  auto z = encode_embed(g, x, m);
  auto outputs = gradnet::rnn_decode<Real>(g, z, target.num_frames, m);
  auto loss = g.squared_error(outputs[0], target.frame(0));
  for (std::size_t t = 1; t < outputs.size(); ++t)
    loss = g.add(loss, g.squared_error(outputs[t], target.frame(t)));
  return loss;
}

template <typename Real>
typename Graph<Real>::Var classification(Graph<Real>& g, const Segment<Real>& x, std::size_t k,
                                         const ModelParameters<Real>& m) {
  if (!m.arch.has_classifier()) throw ShapeMismatch("model has no classifier head");
  if (k >= m.arch.num_classes)
    throw ClassOutOfRange("class " + std::to_string(k) + " outside [0, " +
                          std::to_string(m.arch.num_classes) + ")");
  auto logits = g.affine(m.layout.classifier, encode_embed(g, x, m));
  return g.softmax_cross_entropy(logits, k);
}

}  // namespace

template <typename Real>
Real ae_loss(const Segment<Real>& x, const ModelParameters<Real>& m) {
  return cae_loss(x, x, m);
}

template <typename Real>
Real ae_loss_grad(const Segment<Real>& x, const ModelParameters<Real>& m,
                  ParameterSet<Real>& grads) {
  return cae_loss_grad(x, x, m, grads);
}

template <typename Real>
Real cae_loss(const Segment<Real>& x, const Segment<Real>& target,
              const ModelParameters<Real>& m) {
  Graph<Real> g(m.params);
  return g.scalar(reconstruction(g, x, target, m));
}

template <typename Real>
Real cae_loss_grad(const Segment<Real>& x, const Segment<Real>& target,
                   const ModelParameters<Real>& m, ParameterSet<Real>& grads) {
  Graph<Real> g(m.params);
  auto loss = reconstruction(g, x, target, m);
  g.backward(loss, grads);
  return g.scalar(loss);
}

template <typename Real>
Real classifier_loss(const Segment<Real>& x, std::size_t k, const ModelParameters<Real>& m) {
  Graph<Real> g(m.params);
  return g.scalar(classification(g, x, k, m));
}

template <typename Real>
Real classifier_loss_grad(const Segment<Real>& x, std::size_t k, const ModelParameters<Real>& m,
                          ParameterSet<Real>& grads) {
  Graph<Real> g(m.params);
  auto loss = classification(g, x, k, m);
  g.backward(loss, grads);
  return g.scalar(loss);
}

template <typename Real>
std::vector<Real> classify(const Segment<Real>& x, const ModelParameters<Real>& m) {
  if (!m.arch.has_classifier()) throw ShapeMismatch("model has no classifier head");
  Graph<Real> g(m.params);
  auto logits = g.affine(m.layout.classifier, encode_embed(g, x, m));
  return gradnet::softmax<Real>(g.value(logits));
}

template <typename Real>
std::vector<double> embed(const FeatureSequence& x, const ModelParameters<Real>& m) {
  const auto seg = to_segment<Real>(x);
  Graph<Real> g(m.params);
  auto z = g.value(encode_embed(g, seg, m));
  return {z.begin(), z.end()};
}

std::vector<double> downsample_embed(const FeatureSequence& x, std::size_t k) {
  const std::size_t T = x.num_frames(), D = x.dim();
  if (T == 0) throw ShapeMismatch("cannot downsample an empty sequence");
  if (k == 0) throw InvalidConfig("downsampling needs at least one frame");
  std::vector<double> out(k * D);
  for (std::size_t i = 0; i < k; ++i) {
    const double pos =
        k == 1 ? 0.0 : static_cast<double>(i * (T - 1)) / static_cast<double>(k - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    for (std::size_t d = 0; d < D; ++d)
      out[i * D + d] = frac == 0.0 ? x(lo, d) : (1.0 - frac) * x(lo, d) + frac * x(hi, d);
  }
  return out;
}

#define AWE_INSTANTIATE(Real)                                                                    \
  template Segment<Real> to_segment<Real>(const FeatureSequence&);                              \
  template Real ae_loss<Real>(const Segment<Real>&, const ModelParameters<Real>&);              \
  template Real ae_loss_grad<Real>(const Segment<Real>&, const ModelParameters<Real>&,          \
                                   ParameterSet<Real>&);                                        \
  template Real cae_loss<Real>(const Segment<Real>&, const Segment<Real>&,                      \
                               const ModelParameters<Real>&);                                   \
  template Real cae_loss_grad<Real>(const Segment<Real>&, const Segment<Real>&,                 \
                                    const ModelParameters<Real>&, ParameterSet<Real>&);         \
  template Real classifier_loss<Real>(const Segment<Real>&, std::size_t,                        \
                                      const ModelParameters<Real>&);                            \
  template Real classifier_loss_grad<Real>(const Segment<Real>&, std::size_t,                   \
                                           const ModelParameters<Real>&, ParameterSet<Real>&);  \
  template std::vector<Real> classify<Real>(const Segment<Real>&, const ModelParameters<Real>&); \
  template std::vector<double> embed<Real>(const FeatureSequence&, const ModelParameters<Real>&);

AWE_INSTANTIATE(float)
AWE_INSTANTIATE(double)
#undef AWE_INSTANTIATE

}  // namespace awe::embedders
