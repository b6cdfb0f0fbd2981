#include "cuot/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace cuot {

AdamState AdamState::init(const AdamConfig& cfg, const ParamSet& params) {
  AdamState s;
  s.cfg = cfg;
  s.m.reserve(params.tensors.size());
  s.v.reserve(params.tensors.size());
  for (const auto& t : params.tensors) {
    s.m.emplace_back(static_cast<size_t>(t.numel()), 0.0);
    s.v.emplace_back(static_cast<size_t>(t.numel()), 0.0);
  }
  return s;
}

void adam_step(ParamSet& params, const std::vector<std::vector<double>>& grads,
               AdamState& state) {
  if (grads.size() != params.tensors.size() || state.m.size() != params.tensors.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  if (state.cfg.lr <= 0) throw std::invalid_argument("adam_step: lr must be > 0");

  state.step += 1;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  for (size_t t = 0; t < params.tensors.size(); ++t) {
    auto& p = *params.tensors[t].data;
    const auto& g = grads[t];
    if (g.size() != p.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch for '" +
                                  params.tensors[t].name + "'");
    auto& m = state.m[t];
    auto& v = state.v[t];
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
    }
  }
}

}  // namespace cuot
