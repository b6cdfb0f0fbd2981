#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cuot/tensor.hpp"

namespace cuot {

// Named, ordered parameter storage. Buffers are shared with graph leaves
// during a training step, so optimizer updates are visible to the next
// forward pass without copying.
struct ParamTensor {
  std::string name;
  ad::Shape shape;
  std::shared_ptr<std::vector<double>> data;

  int64_t numel() const { return ad::numel(shape); }
};

struct ParamSet {
  std::vector<ParamTensor> tensors;

  int64_t total_size() const {
    int64_t n = 0;
    for (const auto& t : tensors) n += t.numel();
    return n;
  }

  ParamTensor& add(std::string name, ad::Shape shape) {
    auto n = ad::numel(shape);
    tensors.push_back({std::move(name), std::move(shape),
                       std::make_shared<std::vector<double>>(static_cast<size_t>(n), 0.0)});
    return tensors.back();
  }

  // Deep copy (fresh buffers).
  ParamSet clone() const {
    ParamSet out;
    out.tensors.reserve(tensors.size());
    for (const auto& t : tensors)
      out.tensors.push_back({t.name, t.shape, std::make_shared<std::vector<double>>(*t.data)});
    return out;
  }
};

}  // namespace cuot
