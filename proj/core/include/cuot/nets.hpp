#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cuot/params.hpp"
#include "cuot/rng.hpp"
#include "cuot/tensor.hpp"

namespace cuot::nets {

struct ArchConfig {
  int64_t embed_dim = 128;

  // Block counts are fixed by the architecture: the generator embeds the
  // condition through two residual blocks and the datum through three; the
  // potential processes y with a module identical to its x module.
  static constexpr int64_t kGenYBlocks = 2;
  static constexpr int64_t kGenVBlocks = 3;
  static constexpr int64_t kOutBlocks = 2;
  static constexpr int64_t kPotBlocks = 3;
  static constexpr int64_t kHeadBlocks = 2;

  int64_t z_dim() const { return 2 * embed_dim; }
  uint64_t hash() const;
};

struct GeneratorParams {
  ArchConfig arch;
  ParamSet params;
};

struct PotentialParams {
  ArchConfig arch;
  ParamSet params;
};

GeneratorParams init_generator(const ArchConfig& arch, uint64_t seed);
PotentialParams init_potential(const ArchConfig& arch, uint64_t seed);

int64_t generator_param_count(const ArchConfig& arch);
int64_t potential_param_count(const ArchConfig& arch);

// Parameter tensors attached to a graph as leaves (in ParamSet order), so a
// network can be applied several times per tape with shared weights.
struct AttachedParams {
  std::vector<ad::Tensor> leaves;

  static AttachedParams attach(ad::Graph& g, const ParamSet& set);
  std::vector<int64_t> node_ids() const;
};

// u_hat = T(y, v, z). y: [M,1], v: [M,1], z: [M,z_dim] -> [M,1]. The emitted
// condition is the input y by construction (triangular identity on y).
ad::Tensor generator_forward(ad::Graph& g, const ArchConfig& arch,
                             const AttachedParams& p, const ad::Tensor& y,
                             const ad::Tensor& v, const ad::Tensor& z);

// phi(y, u). y: [M,1], u: [M,1] -> [M,1].
ad::Tensor potential_forward(ad::Graph& g, const ArchConfig& arch,
                             const AttachedParams& p, const ad::Tensor& y,
                             const ad::Tensor& u);

// Tape-free convenience evaluation (fresh scratch graph, detached result).
std::vector<double> generator_eval(const GeneratorParams& gp, std::span<const double> y,
                                   std::span<const double> v, std::span<const double> z);
std::vector<double> potential_eval(const PotentialParams& pp, std::span<const double> y,
                                   std::span<const double> u);

}  // namespace cuot::nets
