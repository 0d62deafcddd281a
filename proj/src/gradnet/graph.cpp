#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "awe/error.hpp"
#include "awe/gradnet.hpp"

namespace awe::gradnet {

namespace {

template <typename Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Real>
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <typename Real>
Eigen::Map<const Mat<Real>> cmat(const Tensor<Real>& t) {
  return {t.data.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
template <typename Real>
Eigen::Map<Mat<Real>> mmat(Tensor<Real>& t) {
  return {t.data.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
template <typename Real>
Eigen::Map<const Vec<Real>> cvec(const Real* p, std::size_t n) {
  return {p, static_cast<Eigen::Index>(n)};
}
template <typename Real>
Eigen::Map<Vec<Real>> mvec(Real* p, std::size_t n) {
  return {p, static_cast<Eigen::Index>(n)};
}

template <typename Real>
Real sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

}  // namespace

template <typename Real>
std::vector<Real> softmax(std::span<const Real> logits) {
  std::vector<Real> p(logits.size());
  if (logits.empty()) return p;
  const Real m = *std::max_element(logits.begin(), logits.end());
  Real total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) total += p[i] = std::exp(logits[i] - m);
  for (auto& v : p) v /= total;
  return p;
}

template <typename Real>
std::vector<Real> gru_cell(std::span<const Real> x, std::span<const Real> h_prev,
                           const Tensor<Real>& W, const Tensor<Real>& U, const Tensor<Real>& b) {
  ParameterSet<Real> p;
  GruIds ids{p.add("W", W.shape), p.add("U", U.shape), p.add("b", b.shape)};
  p[ids.W] = W;
  p[ids.U] = U;
  p[ids.b] = b;
  Graph<Real> g(p);
  auto h = g.gru(ids, g.input(x), g.input(h_prev));
  auto v = g.value(h);
  return {v.begin(), v.end()};
}

template <typename Real>
Graph<Real>::Graph(const ParameterSet<Real>& params, bool check_finite)
    : params_(&params), check_finite_(check_finite) {
  nodes_.reserve(256);
}

template <typename Real>
std::size_t Graph<Real>::push(Node node, std::size_t saved) {
  node.offset = values_.size();
  node.aux = saved_.size();
  values_.resize(values_.size() + node.size);
  saved_.resize(saved_.size() + saved);
  nodes_.push_back(node);
  return nodes_.size() - 1;
}

template <typename Real>
void Graph<Real>::check(const Node& n) const {
  if (!check_finite_) return;
  for (std::size_t i = 0; i < n.size; ++i)
    if (!std::isfinite(values_[n.offset + i]))
      throw NumericError("non-finite value produced on the tape");
}

template <typename Real>
typename Graph<Real>::Var Graph<Real>::input(std::span<const Real> values) {
  Node n{};
  n.op = Op::kInput;
  n.size = values.size();
  const auto id = push(n);
  std::copy(values.begin(), values.end(), values_.begin() + nodes_[id].offset);
  check(nodes_[id]);
  return {id};
}

template <typename Real>
typename Graph<Real>::Var Graph<Real>::zeros(std::size_t size) {
  Node n{};
  n.op = Op::kInput;
  n.size = size;
  return {push(n)};
}

template <typename Real>
typename Graph<Real>::Var Graph<Real>::parameter(std::size_t tensor) {
  const auto& t = (*params_)[tensor];
  Node n{};
  n.op = Op::kParam;
  n.size = t.size();
  n.param = tensor;
  n.needs_grad = true;
  const auto id = push(n);
  std::copy(t.data.begin(), t.data.end(), values_.begin() + nodes_[id].offset);
  return {id};
}

template <typename Real>
typename Graph<Real>::Var Graph<Real>::affine(const AffineIds& ids, Var x) {
  const auto& W = (*params_)[ids.W];
  const auto& b = (*params_)[ids.b];
  if (W.cols() != dim(x) || b.size() != W.rows())
    throw ShapeMismatch("affine: weight " + std::to_string(W.rows()) + "x" +
                        std::to_string(W.cols()) + " applied to vector of " +
                        std::to_string(dim(x)));
  Node n{};
  n.op = Op::kAffine;
  n.size = W.rows();
  n.in[0] = x.id;
  n.n_in = 1;
  n.affine = ids;
  n.needs_grad = true;
  const auto id = push(n);
  const Node& node = nodes_[id];
  auto y = mvec(values_.data() + node.offset, node.size);
  y.noalias() = cmat(W) * cvec(values_.data() + nodes_[x.id].offset, dim(x));
  y += cvec(b.data.data(), b.size());
  check(node);
  return {id};
}

template <typename Real>
typename Graph<Real>::Var Graph<Real>::gru(const GruIds& ids, Var x, Var h) {
  const auto& W = (*params_)[ids.W];
  const auto& U = (*params_)[ids.U];
  const auto& b = (*params_)[ids.b];
  const std::size_t H = U.cols();
  if (U.rows() != 3 * H || W.rows() != 3 * H || b.size() != 3 * H || W.cols() != dim(x) ||
      dim(h) != H)
    throw ShapeMismatch("gru: input " + std::to_string(dim(x)) + ", state " +
                        std::to_string(dim(h)) + " do not match weights " +
                        std::to_string(W.rows()) + "x" + std::to_string(W.cols()));
  Node n{};
  n.op = Op::kGru;
  n.size = H;
  n.in[0] = x.id;
  n.in[1] = h.id;
  n.n_in = 2;
  n.gru = ids;
  n.needs_grad = true;
  const auto id = push(n, 4 * H);
  const Node& node = nodes_[id];

  const auto xv = cvec(values_.data() + nodes_[x.id].offset, dim(x));
  const auto hv = cvec(values_.data() + nodes_[h.id].offset, H);
  const auto Wm = cmat(W);
  const auto Um = cmat(U);
  const auto eh = static_cast<Eigen::Index>(H);

  Vec<Real> a = Wm * xv + cvec(b.data.data(), b.size());
  a.head(2 * eh).noalias() += Um.topRows(2 * eh) * hv;

  Real* s = saved_.data() + node.aux;
  auto z = mvec(s, H);
  auto r = mvec(s + H, H);
  auto c = mvec(s + 2 * H, H);
  auto rh = mvec(s + 3 * H, H);
  for (std::size_t i = 0; i < H; ++i) {
    z[i] = sigmoid(a[i]);
    r[i] = sigmoid(a[H + i]);
  }
  rh = r.cwiseProduct(hv);
  a.tail(eh).noalias() += Um.bottomRows(eh) * rh;
  for (std::size_t i = 0; i < H; ++i) c[i] = std::tanh(a[2 * H + i]);

  Real* out = values_.data() + node.offset;
  for (std::size_t i = 0; i < H; ++i) out[i] = (Real(1) - z[i]) * hv[i] + z[i] * c[i];
  check(node);
  return {id};
}

template <typename Real>
typename Graph<Real>::Var Graph<Real>::add(Var a, Var b) {
  if (dim(a) != dim(b)) throw ShapeMismatch("add: operand sizes differ");
  Node n{};
  n.op = Op::kAdd;
  n.size = dim(a);
  n.in[0] = a.id;
  n.in[1] = b.id;
  n.n_in = 2;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  const auto id = push(n);
  for (std::size_t i = 0; i < n.size; ++i)
    values_[nodes_[id].offset + i] =
        values_[nodes_[a.id].offset + i] + values_[nodes_[b.id].offset + i];
  check(nodes_[id]);
  return {id};
}

template <typename Real>
typename Graph<Real>::Var Graph<Real>::dot(Var a, Var b) {
  if (dim(a) != dim(b)) throw ShapeMismatch("dot: operand sizes differ");
  Node n{};
  n.op = Op::kDot;
  n.size = 1;
  n.in[0] = a.id;
  n.in[1] = b.id;
  n.n_in = 2;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  const auto id = push(n);
  Real s = 0;
  for (std::size_t i = 0; i < dim(a); ++i)
    s += values_[nodes_[a.id].offset + i] * values_[nodes_[b.id].offset + i];
  values_[nodes_[id].offset] = s;
  check(nodes_[id]);
  return {id};
}

template <typename Real>
typename Graph<Real>::Var Graph<Real>::squared_error(Var y, std::span<const Real> target) {
  if (dim(y) != target.size())
    throw ShapeMismatch("squared_error: prediction of " + std::to_string(dim(y)) +
                        " against target of " + std::to_string(target.size()));
  Node n{};
  n.op = Op::kSquaredError;
  n.size = 1;
  n.in[0] = y.id;
  n.n_in = 1;
  n.target = target;
  n.needs_grad = nodes_[y.id].needs_grad;
  const auto id = push(n);
  Real s = 0;
  const Real* yv = values_.data() + nodes_[y.id].offset;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const Real d = yv[i] - target[i];
    s += d * d;
  }
  values_[nodes_[id].offset] = s;
  check(nodes_[id]);
  return {id};
}

template <typename Real>
typename Graph<Real>::Var Graph<Real>::softmax_cross_entropy(Var logits, std::size_t k) {
  const std::size_t K = dim(logits);
  if (k >= K)
    throw ClassOutOfRange("class " + std::to_string(k) + " outside [0, " + std::to_string(K) +
                          ")");
  Node n{};
  n.op = Op::kSoftmaxXent;
  n.size = 1;
  n.in[0] = logits.id;
  n.n_in = 1;
  n.cls = k;
  n.needs_grad = nodes_[logits.id].needs_grad;
  const auto id = push(n, K);
  const Real* l = values_.data() + nodes_[logits.id].offset;
  Real* p = saved_.data() + nodes_[id].aux;
  const Real m = *std::max_element(l, l + K);
  Real total = 0;
  for (std::size_t i = 0; i < K; ++i) total += p[i] = std::exp(l[i] - m);
  const Real log_total = std::log(total);
  for (std::size_t i = 0; i < K; ++i) p[i] /= total;
  values_[nodes_[id].offset] = m + log_total - l[k];
  check(nodes_[id]);
  return {id};
}

template <typename Real>
std::span<const Real> Graph<Real>::value(Var v) const {
  const Node& n = nodes_.at(v.id);
  return {values_.data() + n.offset, n.size};
}

template <typename Real>
Real Graph<Real>::scalar(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.size != 1) throw ShapeMismatch("scalar requested from a vector node");
  return values_[n.offset];
}

template <typename Real>
void Graph<Real>::debug_set_input(Var node, std::size_t slot, Var input) {
  nodes_.at(node.id).in[slot] = input.id;
}

template <typename Real>
void Graph<Real>::backward(Var loss, ParameterSet<Real>& grads) {
  if (loss.id >= nodes_.size()) throw ShapeMismatch("loss node not on this tape");
  if (nodes_[loss.id].size != 1) throw ShapeMismatch("backward needs a scalar loss");
  if (!grads.same_layout(*params_)) throw ShapeMismatch("gradient layout differs from parameters");

  std::vector<Real> adj(values_.size(), Real(0));
  adj[nodes_[loss.id].offset] = Real(1);

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    for (std::size_t s = 0; s < n.n_in; ++s)
      if (n.in[s] >= i) throw GraphCycle("node " + std::to_string(i) + " reads a later node");
    if (!n.needs_grad) continue;
    const Real* g = adj.data() + n.offset;

    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kParam: {
        auto& dst = grads[n.param].data;
        for (std::size_t j = 0; j < n.size; ++j) dst[j] += g[j];
        break;
      }
      case Op::kAffine: {
        const Node& x = nodes_[n.in[0]];
        const auto gv = cvec(g, n.size);
        const auto xv = cvec(values_.data() + x.offset, x.size);
        mmat(grads[n.affine.W]).noalias() += gv * xv.transpose();
        mvec(grads[n.affine.b].data.data(), n.size) += gv;
        if (x.needs_grad)
          mvec(adj.data() + x.offset, x.size).noalias() +=
              cmat((*params_)[n.affine.W]).transpose() * gv;
        break;
      }
      case Op::kGru: {
        const Node& x = nodes_[n.in[0]];
        const Node& h = nodes_[n.in[1]];
        const std::size_t H = n.size;
        const auto eh = static_cast<Eigen::Index>(H);
        const Real* s = saved_.data() + n.aux;
        const auto z = cvec(s, H);
        const auto r = cvec(s + H, H);
        const auto c = cvec(s + 2 * H, H);
        const auto rh = cvec(s + 3 * H, H);
        const auto hv = cvec(values_.data() + h.offset, H);
        const auto xv = cvec(values_.data() + x.offset, x.size);
        const auto gv = cvec(g, H);
        const auto Wm = cmat((*params_)[n.gru.W]);
        const auto Um = cmat((*params_)[n.gru.U]);

        Vec<Real> da(3 * H);
        for (std::size_t j = 0; j < H; ++j) {
          da[2 * H + j] = gv[j] * z[j] * (Real(1) - c[j] * c[j]);      // candidate pre-activation
          da[j] = gv[j] * (c[j] - hv[j]) * z[j] * (Real(1) - z[j]);   // update gate pre-activation
        }
        const Vec<Real> g_rh = Um.bottomRows(eh).transpose() * da.tail(eh);
        for (std::size_t j = 0; j < H; ++j)
          da[H + j] = g_rh[j] * hv[j] * r[j] * (Real(1) - r[j]);      // reset gate pre-activation

        mmat(grads[n.gru.W]).noalias() += da * xv.transpose();
        mvec(grads[n.gru.b].data.data(), 3 * H) += da;
        auto dU = mmat(grads[n.gru.U]);
        dU.topRows(2 * eh).noalias() += da.head(2 * eh) * hv.transpose();
        dU.bottomRows(eh).noalias() += da.tail(eh) * rh.transpose();

        if (x.needs_grad)
          mvec(adj.data() + x.offset, x.size).noalias() += Wm.transpose() * da;
        if (h.needs_grad) {
          auto dh = mvec(adj.data() + h.offset, H);
          dh.noalias() += Um.topRows(2 * eh).transpose() * da.head(2 * eh);
          for (std::size_t j = 0; j < H; ++j) dh[j] += gv[j] * (Real(1) - z[j]) + g_rh[j] * r[j];
        }
        break;
      }
      case Op::kAdd:
        for (std::size_t s = 0; s < 2; ++s) {
          const Node& a = nodes_[n.in[s]];
          if (!a.needs_grad) continue;
          for (std::size_t j = 0; j < n.size; ++j) adj[a.offset + j] += g[j];
        }
        break;
      case Op::kDot: {
        const Node& a = nodes_[n.in[0]];
        const Node& b = nodes_[n.in[1]];
        if (a.needs_grad)
          for (std::size_t j = 0; j < a.size; ++j) adj[a.offset + j] += g[0] * values_[b.offset + j];
        if (b.needs_grad)
          for (std::size_t j = 0; j < b.size; ++j) adj[b.offset + j] += g[0] * values_[a.offset + j];
        break;
      }
      case Op::kSquaredError: {
        const Node& y = nodes_[n.in[0]];
        for (std::size_t j = 0; j < y.size; ++j)
          adj[y.offset + j] += g[0] * Real(2) * (values_[y.offset + j] - n.target[j]);
        break;
      }
      case Op::kSoftmaxXent: {
        const Node& l = nodes_[n.in[0]];
        const Real* p = saved_.data() + n.aux;
        for (std::size_t j = 0; j < l.size; ++j)
          adj[l.offset + j] += g[0] * (p[j] - (j == n.cls ? Real(1) : Real(0)));
        break;
      }
    }
  }
}

template <typename Real>
typename Graph<Real>::Var rnn_encode(Graph<Real>& g, std::span<const Real> frames,
                                     std::size_t num_frames, const ModelParameters<Real>& m) {
  const std::size_t D = m.arch.input_dim;
  if (num_frames == 0) throw ShapeMismatch("cannot encode an empty sequence");
  if (frames.size() != num_frames * D)
    throw ShapeMismatch("encoder expects " + std::to_string(D) + "-dimensional frames");
  std::vector<typename Graph<Real>::Var> h;
  for (std::size_t l = 0; l < m.layout.encoder.size(); ++l) h.push_back(g.zeros(m.arch.units));
  for (std::size_t t = 0; t < num_frames; ++t) {
    auto x = g.input(frames.subspan(t * D, D));
    for (std::size_t l = 0; l < h.size(); ++l) x = h[l] = g.gru(m.layout.encoder[l], x, h[l]);
  }
  return h.back();
}

template <typename Real>
typename Graph<Real>::Var embed_transform(Graph<Real>& g, typename Graph<Real>::Var h_final,
                                          const ModelParameters<Real>& m) {
  return g.affine(m.layout.embed, h_final);
}

template <typename Real>
std::vector<typename Graph<Real>::Var> rnn_decode(Graph<Real>& g, typename Graph<Real>::Var z,
                                                  std::size_t num_steps,
                                                  const ModelParameters<Real>& m) {
  if (!m.arch.has_decoder()) throw ShapeMismatch("model has no decoder");
  if (num_steps == 0) throw ShapeMismatch("decoder needs at least one step");
  std::vector<typename Graph<Real>::Var> h;
  for (std::size_t l = 0; l < m.layout.decoder.size(); ++l) h.push_back(g.zeros(m.arch.units));
  std::vector<typename Graph<Real>::Var> out;
  out.reserve(num_steps);
  for (std::size_t t = 0; t < num_steps; ++t) {
    auto x = z;
    for (std::size_t l = 0; l < h.size(); ++l) x = h[l] = g.gru(m.layout.decoder[l], x, h[l]);
    out.push_back(g.affine(m.layout.output, x));
  }
  return out;
}

#define AWE_INSTANTIATE(Real)                                                                   \
  template class Graph<Real>;                                                                  \
  template std::vector<Real> softmax<Real>(std::span<const Real>);                             \
  template std::vector<Real> gru_cell<Real>(std::span<const Real>, std::span<const Real>,      \
                                            const Tensor<Real>&, const Tensor<Real>&,          \
                                            const Tensor<Real>&);                              \
  template Graph<Real>::Var rnn_encode<Real>(Graph<Real>&, std::span<const Real>, std::size_t, \
                                             const ModelParameters<Real>&);                    \
  template Graph<Real>::Var embed_transform<Real>(Graph<Real>&, Graph<Real>::Var,              \
                                                  const ModelParameters<Real>&);               \
  template std::vector<Graph<Real>::Var> rnn_decode<Real>(Graph<Real>&, Graph<Real>::Var,      \
                                                          std::size_t,                         \
                                                          const ModelParameters<Real>&);

AWE_INSTANTIATE(float)
AWE_INSTANTIATE(double)
#undef AWE_INSTANTIATE

}  // namespace awe::gradnet
