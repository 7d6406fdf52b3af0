#include "dtm/adam.hpp"

#include <cmath>

#include "dtm/errors.hpp"

namespace dtm {

AdamState adam_init(const ParamStore& params) {
  AdamState s;
  for (const auto& [name, p] : params) {
    s.m[name] = Tensor::zeros(p.dims);
    s.v[name] = Tensor::zeros(p.dims);
  }
  return s;
}

void adam_step(AdamState& state, ParamStore& params,
               const std::map<std::string, Tensor>& grads, double lr,
               double weight_decay) {
  if (lr <= 0.0) throw ConfigError("adam: learning rate must be positive");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double alpha =
      lr * std::sqrt(1.0 - std::pow(state.beta2, t)) / (1.0 - std::pow(state.beta1, t));
  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end()) throw ShapeError("adam: missing gradient for " + name);
    const Tensor& g = git->second;
    Tensor& m = state.m.at(name);
    Tensor& v = state.v.at(name);
    if (!g.same_dims(p) || !m.same_dims(p))
      throw ShapeError("adam: shape mismatch for " + name + ": param " + p.dims_str() +
                       " grad " + g.dims_str());
    for (size_t i = 0; i < p.data.size(); ++i) {
      if (weight_decay != 0.0) p.data[i] -= lr * weight_decay * p.data[i];
      m.data[i] = state.beta1 * m.data[i] + (1.0 - state.beta1) * g.data[i];
      v.data[i] = state.beta2 * v.data[i] + (1.0 - state.beta2) * g.data[i] * g.data[i];
      p.data[i] -= alpha * m.data[i] / (std::sqrt(v.data[i]) + state.eps);
    }
  }
}

}  // namespace dtm
