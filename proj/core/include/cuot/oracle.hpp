#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cuot/entropy.hpp"

namespace cuot::oracle {

struct Atom {
  std::vector<double> coord;
  double weight = 0.0;  // conditional probability mass
};

struct ConditionBlock {
  double y = 0.0;
  double weight = 0.0;  // nu_Y(y)
  std::vector<Atom> source;
  std::vector<Atom> target;
};

// Finite-support CUOT problem: per condition y, transport the source atoms
// onto the target atoms with cost tau*|v-u|^2 and marginal penalties
// D_psi1(rows || eta_y) + D_psi2(cols || nu_y). Conditions share the y list,
// so eta_Y = nu_Y holds by construction.
struct DiscreteInstance {
  std::vector<ConditionBlock> conditions;
  double tau = 1.0;
  EntropyFunction psi1;
  EntropyFunction psi2;

  void validate() const;
  std::vector<double> cost_matrix(size_t cond) const;  // row-major n x m
};

struct ConditionPlan {
  int64_t n = 0, m = 0;
  std::vector<double> pi;  // row-major n x m, nonnegative

  double row_mass(int64_t i) const;
  double col_mass(int64_t j) const;
};

struct TransportPlan {
  std::vector<ConditionPlan> plans;
  double objective = 0.0;
  bool converged = false;
  bool softplus_caveat = false;
  double kkt_residual = 0.0;
  int64_t iterations = 0;
};

struct DualPotentials {
  // Per condition: phi on source atoms, varphi on target atoms, with
  // feasibility phi_i + varphi_j <= C_ij.
  std::vector<std::vector<double>> phi;
  std::vector<std::vector<double>> varphi;
};

// Projected gradient descent with Armijo backtracking on each condition's
// convex program. Strictly convex entropies (KL, chi^2) are required for the
// uniqueness guarantees; Softplus is accepted with a caveat flag.
TransportPlan solve_primal(const DiscreteInstance& inst, double tol = 1e-10,
                           int64_t max_iter = 200000, uint64_t init_seed = 0);

double primal_objective(const DiscreteInstance& inst, const TransportPlan& plan);

// Optimal duals recovered from the plan: varphi_j = -psi2'(col_j / nu_j),
// phi = varphi^c (exactly feasible by construction).
DualPotentials recover_duals(const DiscreteInstance& inst, const TransportPlan& plan);

// Dual objective; throws (listing violated pairs) if duals are infeasible
// beyond tolerance 1e-10.
double eval_dual(const DiscreteInstance& inst, const DualPotentials& duals);

// Columnwise exact c-transform: out_i = min_j (cost[i*m+j] - varphi[j]).
// Ties resolve to the smallest index.
std::vector<double> c_transform_discrete(const std::vector<double>& varphi,
                                         const std::vector<double>& cost, int64_t n,
                                         int64_t m);

struct RelaxedMarginals {
  std::vector<std::vector<double>> eta_tilde;  // per condition, source atom masses
  std::vector<std::vector<double>> nu_tilde;
};

RelaxedMarginals relaxed_marginals(const DiscreteInstance& inst,
                                   const DualPotentials& duals);

// Total marginal divergence sum_y nu_Y(y) [D_psi1(rows||eta_y) + D_psi2(cols||nu_y)].
double marginal_divergence(const DiscreteInstance& inst, const TransportPlan& plan);

// Exact conditional squared W2 (y-averaged) between the source and target
// marginals; requires uniform weights with equal atom counts per condition
// (solved as an assignment problem).
double conditional_w2_sq(const DiscreteInstance& inst);

// Uniform-weight random instance on [-2,2]^dim with n atoms per side.
DiscreteInstance make_random_instance(int64_t n_conditions, int64_t n_atoms, int64_t dim,
                                      EntropyKind kind, double tau, double alpha,
                                      uint64_t seed);

// Canonical 1x1 instance: unit weights, cost c0, KL/KL. Stationarity gives
// optimal mass exp(-c0/2).
DiscreteInstance canonical_1x1(double c0);

std::string to_json(const DiscreteInstance& inst);
DiscreteInstance instance_from_json(const std::string& text);
std::string plan_to_json(const DiscreteInstance& inst, const TransportPlan& plan);

// ---- validation suite (theorems as numerical checks) ------------------------

struct CheckResult {
  std::string name;
  bool pass = false;
  double residual = 0.0;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

CheckReport run_oracle_checks(int64_t n_random, int64_t size, uint64_t seed);

}  // namespace cuot::oracle
