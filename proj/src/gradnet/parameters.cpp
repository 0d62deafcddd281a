#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "awe/error.hpp"
#include "awe/gradnet.hpp"
#include "common/binary_io.hpp"

namespace awe::gradnet {

template <typename Real>
Tensor<Real>::Tensor(std::vector<std::size_t> shp, Real fill) : shape(std::move(shp)) {
  data.assign(std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                              std::multiplies<>()),
              fill);
}

template <typename Real>
std::size_t ParameterSet<Real>::add(const std::string& name, std::vector<std::size_t> shape) {
  if (lookup_.contains(name)) throw ShapeMismatch("duplicate parameter name " + name);
  lookup_.emplace(name, tensors_.size());
  names_.push_back(name);
  tensors_.emplace_back(std::move(shape));
  return tensors_.size() - 1;
}

template <typename Real>
std::optional<std::size_t> ParameterSet<Real>::find(const std::string& name) const {
  auto it = lookup_.find(name);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

template <typename Real>
std::size_t ParameterSet<Real>::num_elements() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

template <typename Real>
ParameterSet<Real> ParameterSet<Real>::zeros_like() const {
  ParameterSet out = *this;
  out.set_zero();
  return out;
}

template <typename Real>
void ParameterSet<Real>::set_zero() {
  for (auto& t : tensors_) std::fill(t.data.begin(), t.data.end(), Real(0));
}

template <typename Real>
bool ParameterSet<Real>::same_layout(const ParameterSet& other) const {
  if (names_ != other.names_) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i)
    if (tensors_[i].shape != other.tensors_[i].shape) return false;
  return true;
}

template <typename Real>
void ParameterSet<Real>::accumulate(const ParameterSet& other, Real scale) {
  if (!same_layout(other)) throw ShapeMismatch("parameter layouts differ");
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto& dst = tensors_[i].data;
    const auto& src = other.tensors_[i].data;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kAeRnn: return "ae-rnn";
    case ModelKind::kCaeRnn: return "cae-rnn";
    case ModelKind::kClassifierRnn: return "classifier-rnn";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "ae-rnn" || s == "ae") return ModelKind::kAeRnn;
  if (s == "cae-rnn" || s == "cae") return ModelKind::kCaeRnn;
  if (s == "classifier-rnn" || s == "classifier") return ModelKind::kClassifierRnn;
  throw InvalidConfig("unknown model kind '" + s + "'");
}

std::string ArchDescriptor::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = to_string(kind);
  j["input_dim"] = input_dim;
  j["encoder_layers"] = encoder_layers;
  j["decoder_layers"] = decoder_layers;
  j["units"] = units;
  j["embed_dim"] = embed_dim;
  j["num_classes"] = num_classes;
  return j.dump();
}

ArchDescriptor ArchDescriptor::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ArchDescriptor a;
    a.kind = model_kind_from_string(j.at("model").get<std::string>());
    a.input_dim = j.at("input_dim").get<std::size_t>();
    a.encoder_layers = j.at("encoder_layers").get<std::size_t>();
    a.decoder_layers = j.at("decoder_layers").get<std::size_t>();
    a.units = j.at("units").get<std::size_t>();
    a.embed_dim = j.at("embed_dim").get<std::size_t>();
    a.num_classes = j.at("num_classes").get<std::size_t>();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("bad architecture descriptor: ") + e.what());
  }
}

namespace {

void validate(const ArchDescriptor& a) {
  if (a.input_dim == 0 || a.units == 0 || a.embed_dim == 0 || a.encoder_layers == 0)
    throw InvalidConfig("architecture sizes must be positive");
  if (a.has_decoder() && a.decoder_layers == 0)
    throw InvalidConfig("encoder-decoder model needs decoder layers");
  if (a.has_classifier() && a.num_classes == 0)
    throw InvalidConfig("classifier needs at least one class");
}

template <typename Real>
ModelLayout build_layout(const ArchDescriptor& a, ParameterSet<Real>& p) {
  validate(a);
  ModelLayout l;
  const std::size_t H = a.units;
  auto add_gru = [&](const std::string& prefix, std::size_t in) {
    GruIds g;
    g.W = p.add(prefix + ".W", {3 * H, in});
    g.U = p.add(prefix + ".U", {3 * H, H});
    g.b = p.add(prefix + ".b", {3 * H});
    return g;
  };
  for (std::size_t i = 0; i < a.encoder_layers; ++i)
    l.encoder.push_back(add_gru("enc." + std::to_string(i), i == 0 ? a.input_dim : H));
  l.embed = {p.add("embed.W", {a.embed_dim, H}), p.add("embed.b", {a.embed_dim})};
  if (a.has_decoder()) {
    for (std::size_t i = 0; i < a.decoder_layers; ++i)
      l.decoder.push_back(add_gru("dec." + std::to_string(i), i == 0 ? a.embed_dim : H));
    l.output = {p.add("out.W", {a.input_dim, H}), p.add("out.b", {a.input_dim})};
  }
  if (a.has_classifier())
    l.classifier = {p.add("cls.W", {a.num_classes, a.embed_dim}), p.add("cls.b", {a.num_classes})};
  return l;
}

}  // namespace

template <typename Real>
ModelParameters<Real> zero_model(const ArchDescriptor& arch) {
  ModelParameters<Real> m;
  m.arch = arch;
  m.layout = build_layout(arch, m.params);
  return m;
}

template <typename Real>
ModelParameters<Real> init_model(const ArchDescriptor& arch, std::uint64_t seed) {
  auto m = zero_model<Real>(arch);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    auto& t = m.params[i];
    if (t.shape.size() != 2) continue;  // biases stay zero
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.data) v = static_cast<Real>(dist(rng));
  }
  return m;
}

template <typename To, typename From>
ModelParameters<To> cast_model(const ModelParameters<From>& src) {
  auto out = zero_model<To>(src.arch);
  for (std::size_t i = 0; i < src.params.size(); ++i) {
    const auto& s = src.params[i].data;
    auto& d = out.params[i].data;
    for (std::size_t j = 0; j < s.size(); ++j) d[j] = static_cast<To>(s[j]);
  }
  return out;
}

namespace {
constexpr char kCheckpointMagic[4] = {'A', 'W', 'E', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

template <typename Real>
void save_checkpoint(const ModelParameters<Real>& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write(kCheckpointMagic, 4);
  io::put<std::uint32_t>(os, kCheckpointVersion);
  io::put_string(os, model.arch.to_json());
  io::put<std::uint32_t>(os, static_cast<std::uint32_t>(model.params.size()));
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const auto& t = model.params[i];
    io::put_string(os, model.params.name(i));
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) io::put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    for (Real v : t.data) io::put<float>(os, static_cast<float>(v));
  }
  if (!os) throw IoError("write failed for " + path);
}

template <typename Real>
ModelParameters<Real> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4)) throw CorruptIndex(path + ": truncated checkpoint");
  if (!std::equal(magic, magic + 4, kCheckpointMagic)) throw BadMagic(path + ": not a checkpoint");
  std::uint32_t version = 0, count = 0;
  std::string json;
  if (!io::get(is, version)) throw CorruptIndex(path + ": truncated checkpoint");
  if (version != kCheckpointVersion) throw VersionMismatch(path + ": unsupported checkpoint version");
  if (!io::get_string(is, json) || !io::get(is, count))
    throw CorruptIndex(path + ": truncated checkpoint");

  auto model = zero_model<Real>(ArchDescriptor::from_json(json));
  if (count != model.params.size())
    throw ShapeMismatch(path + ": tensor count does not match descriptor");
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name;
    std::uint32_t ndim = 0;
    if (!io::get_string(is, name) || !io::get(is, ndim) || ndim > 8)
      throw CorruptIndex(path + ": truncated tensor header");
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) {
      std::uint32_t v = 0;
      if (!io::get(is, v)) throw CorruptIndex(path + ": truncated tensor header");
      d = v;
    }
    auto id = model.params.find(name);
    if (!id || model.params[*id].shape != shape)
      throw ShapeMismatch(path + ": unexpected tensor " + name);
    for (auto& v : model.params[*id].data) {
      float f = 0;
      if (!io::get(is, f)) throw CorruptIndex(path + ": truncated tensor data");
      v = static_cast<Real>(f);
    }
  }
  return model;
}

template struct Tensor<float>;
template struct Tensor<double>;
template class ParameterSet<float>;
template class ParameterSet<double>;
template ModelParameters<float> zero_model<float>(const ArchDescriptor&);
template ModelParameters<double> zero_model<double>(const ArchDescriptor&);
template ModelParameters<float> init_model<float>(const ArchDescriptor&, std::uint64_t);
template ModelParameters<double> init_model<double>(const ArchDescriptor&, std::uint64_t);
template ModelParameters<float> cast_model<float, double>(const ModelParameters<double>&);
template ModelParameters<double> cast_model<double, float>(const ModelParameters<float>&);
template ModelParameters<float> cast_model<float, float>(const ModelParameters<float>&);
template ModelParameters<double> cast_model<double, double>(const ModelParameters<double>&);
template void save_checkpoint<float>(const ModelParameters<float>&, const std::string&);
template void save_checkpoint<double>(const ModelParameters<double>&, const std::string&);
template ModelParameters<float> load_checkpoint<float>(const std::string&);
template ModelParameters<double> load_checkpoint<double>(const std::string&);

}  // namespace awe::gradnet
