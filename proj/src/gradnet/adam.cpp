#include <cmath>

#include "awe/error.hpp"
#include "awe/gradnet.hpp"

namespace awe::gradnet {

template <typename Real>
void adam_step(ParameterSet<Real>& params, const ParameterSet<Real>& grads,
               AdamState<Real>& state) {
  if (!params.same_layout(grads) || !params.same_layout(state.m) || !params.same_layout(state.v))
    throw ShapeMismatch("adam: parameter, gradient and moment layouts differ");
  const auto& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double m_corr = 1.0 - std::pow(o.beta1, t);
  const double v_corr = 1.0 - std::pow(o.beta2, t);
  const Real b1 = static_cast<Real>(o.beta1), b2 = static_cast<Real>(o.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].data;
    const auto& g = grads[i].data;
    auto& m = state.m[i].data;
    auto& v = state.v[i].data;
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (Real(1) - b1) * g[j];
      v[j] = b2 * v[j] + (Real(1) - b2) * g[j] * g[j];
      const double m_hat = m[j] / m_corr;
      const double v_hat = v[j] / v_corr;
      p[j] -= static_cast<Real>(o.lr * m_hat / (std::sqrt(v_hat) + o.eps));
    }
  }
}

template <typename Real>
double clip_global_norm(ParameterSet<Real>& grads, double max_norm) {
  double sq = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i)
    for (Real v : grads[i].data) sq += static_cast<double>(v) * static_cast<double>(v);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const Real scale = static_cast<Real>(max_norm / norm);
    for (std::size_t i = 0; i < grads.size(); ++i)
      for (auto& v : grads[i].data) v *= scale;
  }
  return norm;
}

template void adam_step<float>(ParameterSet<float>&, const ParameterSet<float>&,
                               AdamState<float>&);
template void adam_step<double>(ParameterSet<double>&, const ParameterSet<double>&,
                                AdamState<double>&);
template double clip_global_norm<float>(ParameterSet<float>&, double);
template double clip_global_norm<double>(ParameterSet<double>&, double);

}  // namespace awe::gradnet
