#pragma once

// Small reverse-mode differentiation core. Values live on a tape (Graph) of
// vector-valued nodes; the fused ops are exactly the ones the embedding
// models need: GRU steps, affine maps, squared error and softmax
// cross-entropy. Parameters stay outside the tape and receive gradients
// through the ops that read them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace awe::gradnet {

template <typename Real>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<Real> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shp, Real fill = Real(0));

  std::size_t size() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  bool operator==(const Tensor&) const = default;
};

// Ordered named tensors. Gradients use the same type with identical layout.
template <typename Real>
class ParameterSet {
 public:
  std::size_t add(const std::string& name, std::vector<std::size_t> shape);

  std::size_t size() const { return tensors_.size(); }
  Tensor<Real>& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor<Real>& operator[](std::size_t i) const { return tensors_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t num_elements() const;

  ParameterSet zeros_like() const;
  void set_zero();
  // this += other (same layout required)
  void accumulate(const ParameterSet& other, Real scale = Real(1));
  bool same_layout(const ParameterSet& other) const;
  bool operator==(const ParameterSet& other) const {
    return names_ == other.names_ && tensors_ == other.tensors_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<Real>> tensors_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

enum class ModelKind { kAeRnn, kCaeRnn, kClassifierRnn };
std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct ArchDescriptor {
  ModelKind kind = ModelKind::kCaeRnn;
  std::size_t input_dim = 13;
  std::size_t encoder_layers = 3;
  std::size_t decoder_layers = 3;
  std::size_t units = 400;
  std::size_t embed_dim = 130;
  std::size_t num_classes = 0;  // classifier only

  bool has_decoder() const { return kind != ModelKind::kClassifierRnn; }
  bool has_classifier() const { return kind == ModelKind::kClassifierRnn; }

  std::string to_json() const;
  static ArchDescriptor from_json(const std::string& text);
  bool operator==(const ArchDescriptor&) const = default;
};

struct GruIds {
  std::size_t W = 0;  // 3H x in, gate blocks [update; reset; candidate]
  std::size_t U = 0;  // 3H x H
  std::size_t b = 0;  // 3H
};

struct AffineIds {
  std::size_t W = 0;
  std::size_t b = 0;
};

// Tensor ids of every layer for a given descriptor.
struct ModelLayout {
  std::vector<GruIds> encoder;
  AffineIds embed;
  std::vector<GruIds> decoder;
  AffineIds output;
  AffineIds classifier;
};

template <typename Real>
struct ModelParameters {
  ArchDescriptor arch;
  ParameterSet<Real> params;
  ModelLayout layout;
};

// Builds the tensor layout for `arch` with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
// weights; biases start at zero.
template <typename Real>
ModelParameters<Real> init_model(const ArchDescriptor& arch, std::uint64_t seed);

// Same layout, all zeros.
template <typename Real>
ModelParameters<Real> zero_model(const ArchDescriptor& arch);

template <typename To, typename From>
ModelParameters<To> cast_model(const ModelParameters<From>& m);

// Named-tensor checkpoint: "AWEP" u32 version, u32 len + JSON descriptor,
// u32 tensor count, then per tensor { u32 len + name, u32 ndim, u32 dims...,
// float32 data }.
template <typename Real>
void save_checkpoint(const ModelParameters<Real>& model, const std::string& path);
template <typename Real>
ModelParameters<Real> load_checkpoint(const std::string& path);

template <typename Real>
std::vector<Real> softmax(std::span<const Real> logits);

template <typename Real>
class Graph {
 public:
  struct Var {
    std::size_t id = 0;
  };

  explicit Graph(const ParameterSet<Real>& params, bool check_finite = false);

  Var input(std::span<const Real> values);
  Var zeros(std::size_t n);
  // Parameter tensor flattened into a differentiable leaf.
  Var parameter(std::size_t tensor);

  Var affine(const AffineIds& ids, Var x);
  Var gru(const GruIds& ids, Var x, Var h);
  Var add(Var a, Var b);
  Var dot(Var a, Var b);
  // sum_i (y_i - target_i)^2
  Var squared_error(Var y, std::span<const Real> target);
  // -log softmax(logits)[k]
  Var softmax_cross_entropy(Var logits, std::size_t k);

  // Views stay valid only until the next node is recorded.
  std::span<const Real> value(Var v) const;
  Real scalar(Var v) const;
  std::size_t dim(Var v) const { return nodes_[v.id].size; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Adds d(loss)/d(param) into `grads`, which must share the parameter layout.
  void backward(Var loss, ParameterSet<Real>& grads);

  // Test hook: rewires an input of a recorded node. Used to check that
  // backward rejects tapes that are not topologically ordered.
  void debug_set_input(Var node, std::size_t slot, Var input);

 private:
  enum class Op { kInput, kParam, kAffine, kGru, kAdd, kDot, kSquaredError, kSoftmaxXent };

  struct Node {
    Op op;
    std::size_t offset;  // into values_
    std::size_t size;
    std::size_t in[2] = {0, 0};
    std::size_t n_in = 0;
    std::size_t aux = 0;    // saved activations offset (GRU, softmax)
    std::size_t param = 0;  // tensor id for kParam
    GruIds gru;
    AffineIds affine;
    std::size_t cls = 0;
    std::span<const Real> target;
    bool needs_grad = false;
  };

  std::size_t push(Node node, std::size_t saved = 0);
  void check(const Node& n) const;

  const ParameterSet<Real>* params_;
  bool check_finite_;
  std::vector<Node> nodes_;
  std::vector<Real> values_;
  std::vector<Real> saved_;
};

// Stacked GRU over the frames; returns the top layer's state after the last frame.
template <typename Real>
typename Graph<Real>::Var rnn_encode(Graph<Real>& g, std::span<const Real> frames,
                                     std::size_t num_frames, const ModelParameters<Real>& m);

// z = W h + b (no nonlinearity).
template <typename Real>
typename Graph<Real>::Var embed_transform(Graph<Real>& g, typename Graph<Real>::Var h_final,
                                          const ModelParameters<Real>& m);

// Decoder conditioned on z at every step, zero initial states; one output
// frame per step through the affine output layer.
template <typename Real>
std::vector<typename Graph<Real>::Var> rnn_decode(Graph<Real>& g, typename Graph<Real>::Var z,
                                                  std::size_t num_steps,
                                                  const ModelParameters<Real>& m);

// Single GRU step outside any tape: h_t from x_t, h_prev.
template <typename Real>
std::vector<Real> gru_cell(std::span<const Real> x, std::span<const Real> h_prev,
                           const Tensor<Real>& W, const Tensor<Real>& U, const Tensor<Real>& b);

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Real>
struct AdamState {
  AdamOptions options;
  ParameterSet<Real> m;
  ParameterSet<Real> v;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(const ParameterSet<Real>& params, AdamOptions opts)
      : options(opts), m(params.zeros_like()), v(params.zeros_like()) {}
};

template <typename Real>
void adam_step(ParameterSet<Real>& params, const ParameterSet<Real>& grads,
               AdamState<Real>& state);

// Scales grads so their global L2 norm is at most max_norm; returns the norm
// before clipping. max_norm <= 0 disables clipping.
template <typename Real>
double clip_global_norm(ParameterSet<Real>& grads, double max_norm);

}  // namespace awe::gradnet
