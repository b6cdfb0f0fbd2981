#pragma once

#include <cstdint>
#include <vector>

#include "cuot/params.hpp"

namespace cuot {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  int64_t step = 0;
  std::vector<std::vector<double>> m;  // first moments, one entry per parameter tensor
  std::vector<std::vector<double>> v;  // second moments

  static AdamState init(const AdamConfig& cfg, const ParamSet& params);
};

// One bias-corrected Adam update. Gradients are plain arrays aligned with
// `params.tensors`; parameters are updated in place.
void adam_step(ParamSet& params, const std::vector<std::vector<double>>& grads,
               AdamState& state);

}  // namespace cuot
