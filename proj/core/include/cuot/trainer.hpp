#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cuot/adam.hpp"
#include "cuot/entropy.hpp"
#include "cuot/nets.hpp"
#include "cuot/rng.hpp"
#include "cuot/synthdata.hpp"
#include "cuot/tensor.hpp"

namespace cuot::train {

struct AlphaSchedule {
  enum class Kind { Constant, Geometric };
  Kind kind = Kind::Constant;
  double value = 1.0;  // constant schedule
  double start = 1.0;  // geometric ramp over the first half of training,
  double end = 64.0;   // then held constant

  double at(int64_t epoch, int64_t total_epochs) const;
};

struct TrainConfig {
  double tau = 0.0007;
  EntropyKind psi1 = EntropyKind::KL;
  EntropyKind psi2 = EntropyKind::KL;
  AlphaSchedule alpha;
  double lr_generator = 1.6e-4;
  double lr_potential = 1e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;
  int64_t batch_size = 256;
  int64_t epochs = 800;
  double r1_gamma = 0.1;
  uint64_t seed = 1;
  int64_t eval_every = 25;
  nets::ArchConfig arch;
  int64_t eval_n_sub = 1000;   // periodic test-W2 protocol
  int64_t eval_repeats = 5;
  double clamp_threshold = 30.0;        // KL conjugate argument clamp
  double clamp_abort_fraction = 0.01;   // abort when an epoch clamps more than this
  double divergence_abort = 1e6;

  void validate() const;
};

struct EpochLog {
  int64_t epoch = 0;
  double loss_potential = 0.0;
  double loss_generator = 0.0;
  double r1_penalty = 0.0;
  double alpha = 1.0;
  std::optional<double> test_w2;
};

// Thrown when a loss leaves the finite training regime; carries a snapshot
// for the diagnostics file.
struct TrainDivergence : std::runtime_error {
  TrainDivergence(const std::string& msg, int64_t epoch_, int64_t iteration_, double loss_)
      : std::runtime_error(msg), epoch(epoch_), iteration(iteration_), loss(loss_) {}
  int64_t epoch;
  int64_t iteration;
  double loss;
};

struct TrainResult {
  nets::GeneratorParams generator;
  nets::PotentialParams potential;
  nets::GeneratorParams best_generator;
  double best_test_w2 = 0.0;
  int64_t best_epoch = 0;
  std::vector<EpochLog> history;
  int64_t clamped_terms = 0;
  int64_t total_terms = 0;
};

// ---- losses -----------------------------------------------------------------

// tau * (v - u)^2, elementwise.
std::vector<double> transport_cost(std::span<const double> v, std::span<const double> u,
                                   double tau);
ad::Tensor transport_cost_node(ad::Graph& g, const ad::Tensor& v, const ad::Tensor& u,
                               double tau);

// Mini-batch losses over already-evaluated potential values (reference path
// used by tests and identity checks; gamma = 0).
double potential_loss_value(const EntropyFunction& psi1, const EntropyFunction& psi2,
                            std::span<const double> cost, std::span<const double> phi_fake,
                            std::span<const double> phi_real);
double generator_loss_value(std::span<const double> cost, std::span<const double> phi_fake);

struct PotentialLossNode {
  ad::Tensor loss;
  double value = 0.0;
  double r1_value = 0.0;
  int64_t clamped_terms = 0;
  ad::Tensor u_real_leaf;
};

// Potential objective on one mini-batch: mean Psi1*(phi(y,u_hat) - c) +
// mean Psi2*(-phi(y,u_real)) + (gamma/2) mean |grad_u phi(y,u_real)|^2.
// u_hat is the (detached) generator output for this batch.
PotentialLossNode build_potential_loss(ad::Graph& g, const nets::ArchConfig& arch,
                                       const nets::AttachedParams& pot,
                                       const EntropyFunction& psi1,
                                       const EntropyFunction& psi2, double tau,
                                       double r1_gamma, std::span<const double> y,
                                       std::span<const double> v,
                                       std::span<const double> u_hat,
                                       std::span<const double> u_real,
                                       double clamp_threshold);

struct GeneratorLossNode {
  ad::Tensor loss;
  double value = 0.0;
};

// Generator objective: mean [c((y,v), T(y,v,z)) - phi(y, T(y,v,z))], with the
// potential's parameters held constant.
GeneratorLossNode build_generator_loss(ad::Graph& g, const nets::ArchConfig& arch,
                                       const nets::AttachedParams& gen,
                                       const nets::AttachedParams& pot, double tau,
                                       std::span<const double> y,
                                       std::span<const double> v,
                                       std::span<const double> z);

// ---- training ---------------------------------------------------------------

using EpochCallback = std::function<void(const EpochLog&)>;

// Algorithm: per iteration, sample target pairs, build source pairs on the
// same conditions, one potential update, resample (v, z), one generator
// update. Batches must already be standardized.
TrainResult train(const TrainConfig& cfg, const data::PairBatch& train_data,
                  const data::PairBatch& test_data, const EpochCallback& on_epoch = {});

// Generated points for a condition array: v ~ N(0,1), fresh z per sample.
std::vector<double> generate(const nets::GeneratorParams& gen,
                             std::span<const double> y, Rng& rng);

}  // namespace cuot::train
