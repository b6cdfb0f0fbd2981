#include "cuot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cuot/assignment.hpp"
#include "cuot/rng.hpp"

namespace cuot::oracle {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTinyRatio = 1e-300;  // keeps log() finite at the boundary
}  // namespace

void DiscreteInstance::validate() const {
  if (conditions.empty()) throw std::invalid_argument("instance has no conditions");
  if (tau <= 0) throw std::invalid_argument("tau must be > 0");
  if (psi1.kind == EntropyKind::Identity || psi2.kind == EntropyKind::Identity)
    throw std::invalid_argument(
        "oracle requires a Csiszar entropy (KL, chi2 or softplus), not identity");
  double wsum = 0.0;
  for (const auto& c : conditions) {
    if (c.weight <= 0) throw std::invalid_argument("condition weights must be > 0");
    wsum += c.weight;
    if (c.source.empty() || c.target.empty())
      throw std::invalid_argument("every condition needs source and target atoms");
    double s = 0, t = 0;
    for (const auto& a : c.source) {
      if (a.weight <= 0) throw std::invalid_argument("atom weights must be > 0");
      s += a.weight;
    }
    for (const auto& a : c.target) {
      if (a.weight <= 0) throw std::invalid_argument("atom weights must be > 0");
      t += a.weight;
    }
    if (std::abs(s - 1.0) > 1e-9 || std::abs(t - 1.0) > 1e-9)
      throw std::invalid_argument("conditional atom weights must sum to 1");
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("condition weights must sum to 1");
}

std::vector<double> DiscreteInstance::cost_matrix(size_t cond) const {
  const auto& c = conditions[cond];
  const size_t n = c.source.size(), m = c.target.size();
  std::vector<double> cost(n * m);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < m; ++j) {
      const auto& v = c.source[i].coord;
      const auto& u = c.target[j].coord;
      if (v.size() != u.size())
        throw std::invalid_argument("atom dimensionality mismatch");
      double d2 = 0;
      for (size_t k = 0; k < v.size(); ++k) d2 += (v[k] - u[k]) * (v[k] - u[k]);
      cost[i * m + j] = tau * d2;
    }
  }
  return cost;
}

double ConditionPlan::row_mass(int64_t i) const {
  double s = 0;
  for (int64_t j = 0; j < m; ++j) s += pi[static_cast<size_t>(i) * m + j];
  return s;
}

double ConditionPlan::col_mass(int64_t j) const {
  double s = 0;
  for (int64_t i = 0; i < n; ++i) s += pi[static_cast<size_t>(i) * m + j];
  return s;
}

namespace {

struct CondProblem {
  int64_t n, m;
  std::vector<double> cost;
  std::vector<double> eta;  // source conditional weights
  std::vector<double> nu;   // target conditional weights
  const EntropyFunction* psi1;
  const EntropyFunction* psi2;

  void marginals(const std::vector<double>& pi, std::vector<double>& rows,
                 std::vector<double>& cols) const {
    rows.assign(n, 0.0);
    cols.assign(m, 0.0);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < m; ++j) {
        const double p = pi[static_cast<size_t>(i) * m + j];
        rows[i] += p;
        cols[j] += p;
      }
  }

  double objective(const std::vector<double>& pi) const {
    std::vector<double> rows, cols;
    marginals(pi, rows, cols);
    double f = 0;
    for (size_t k = 0; k < pi.size(); ++k) f += cost[k] * pi[k];
    for (int64_t i = 0; i < n; ++i) {
      const double p = psi1->psi(rows[i] / eta[i]);
      if (!std::isfinite(p)) return kInf;
      f += eta[i] * p;
    }
    for (int64_t j = 0; j < m; ++j) {
      const double p = psi2->psi(cols[j] / nu[j]);
      if (!std::isfinite(p)) return kInf;
      f += nu[j] * p;
    }
    return f;
  }

  void gradient(const std::vector<double>& pi, std::vector<double>& grad) const {
    std::vector<double> rows, cols;
    marginals(pi, rows, cols);
    std::vector<double> dr(n), dc(m);
    for (int64_t i = 0; i < n; ++i)
      dr[i] = psi1->psi_deriv(std::max(rows[i] / eta[i], kTinyRatio));
    for (int64_t j = 0; j < m; ++j)
      dc[j] = psi2->psi_deriv(std::max(cols[j] / nu[j], kTinyRatio));
    grad.resize(pi.size());
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < m; ++j)
        grad[static_cast<size_t>(i) * m + j] = cost[static_cast<size_t>(i) * m + j] +
                                               dr[i] + dc[j];
  }

  double kkt_residual(const std::vector<double>& pi, const std::vector<double>& grad) const {
    double r = 0;
    for (size_t k = 0; k < pi.size(); ++k)
      r = std::max(r, std::abs(std::min(pi[k], grad[k])));
    return r;
  }
};

struct CondSolveResult {
  ConditionPlan plan;
  bool converged = false;
  double kkt = 0.0;
  int64_t iters = 0;
};

// Projected gradient descent with a proximal Armijo backtracking line search.
CondSolveResult solve_condition(const CondProblem& p, double tol, int64_t max_iter,
                                Rng& rng) {
  const size_t sz = static_cast<size_t>(p.n) * static_cast<size_t>(p.m);
  std::vector<double> pi(sz);
  for (int64_t i = 0; i < p.n; ++i)
    for (int64_t j = 0; j < p.m; ++j)
      pi[static_cast<size_t>(i) * p.m + j] = p.eta[i] * p.nu[j] * rng.uniform(0.5, 1.5);

  double obj = p.objective(pi);
  double step = 1.0;
  std::vector<double> grad, cand(sz);
  CondSolveResult out;

  int64_t it = 0;
  for (; it < max_iter; ++it) {
    p.gradient(pi, grad);
    const double kkt = p.kkt_residual(pi, grad);

    // Backtracking accepts a step under either of two descent tests: the
    // proximal upper-bound model (sharp near the optimum) or plain Armijo
    // sufficient decrease, which stays alive where the entropy gradient is
    // unbounded (zero marginals break the quadratic model's promises).
    constexpr double kSigma = 1e-4;
    bool accepted = false;
    double obj_new = obj;
    while (step >= 1e-18) {
      double pred = 0, inner = 0, move2 = 0;
      for (size_t k = 0; k < sz; ++k) {
        cand[k] = std::max(pi[k] - step * grad[k], 0.0);
        const double d = cand[k] - pi[k];
        pred += grad[k] * -d;
        inner += grad[k] * d;
        move2 += d * d;
      }
      obj_new = p.objective(cand);
      const double slack = 1e-15 * std::abs(obj);
      if (obj_new <= obj + inner + move2 / (2.0 * step) + slack ||
          obj_new <= obj - kSigma * pred + slack) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.kkt = kkt;
      break;
    }

    const double rel_dec = std::abs(obj - obj_new) / std::max(1.0, std::abs(obj));
    pi.swap(cand);
    obj = obj_new;
    step = std::min(step * 1.25, 1e6);

    if (kkt < tol && rel_dec < tol) {
      out.converged = true;
      out.kkt = kkt;
      break;
    }
    out.kkt = kkt;
  }

  out.plan.n = p.n;
  out.plan.m = p.m;
  out.plan.pi = std::move(pi);
  out.iters = it + 1;
  return out;
}

CondProblem make_problem(const DiscreteInstance& inst, size_t cond) {
  const auto& c = inst.conditions[cond];
  CondProblem p;
  p.n = static_cast<int64_t>(c.source.size());
  p.m = static_cast<int64_t>(c.target.size());
  p.cost = inst.cost_matrix(cond);
  p.eta.reserve(c.source.size());
  p.nu.reserve(c.target.size());
  for (const auto& a : c.source) p.eta.push_back(a.weight);
  for (const auto& a : c.target) p.nu.push_back(a.weight);
  p.psi1 = &inst.psi1;
  p.psi2 = &inst.psi2;
  return p;
}

}  // namespace

TransportPlan solve_primal(const DiscreteInstance& inst, double tol, int64_t max_iter,
                           uint64_t init_seed) {
  inst.validate();
  TransportPlan plan;
  plan.softplus_caveat = inst.psi1.kind == EntropyKind::Softplus ||
                         inst.psi2.kind == EntropyKind::Softplus;
  plan.converged = true;
  Rng rng(init_seed ^ 0x6f7261636c65ull);
  for (size_t c = 0; c < inst.conditions.size(); ++c) {
    CondProblem p = make_problem(inst, c);
    Rng crng = rng.split(c);
    auto res = solve_condition(p, tol, max_iter, crng);
    plan.converged = plan.converged && res.converged;
    plan.kkt_residual = std::max(plan.kkt_residual, res.kkt);
    plan.iterations += res.iters;
    plan.plans.push_back(std::move(res.plan));
  }
  plan.objective = primal_objective(inst, plan);
  return plan;
}

double primal_objective(const DiscreteInstance& inst, const TransportPlan& plan) {
  double total = 0;
  for (size_t c = 0; c < inst.conditions.size(); ++c) {
    CondProblem p = make_problem(inst, c);
    total += inst.conditions[c].weight * p.objective(plan.plans[c].pi);
  }
  return total;
}

std::vector<double> c_transform_discrete(const std::vector<double>& varphi,
                                         const std::vector<double>& cost, int64_t n,
                                         int64_t m) {
  if (static_cast<int64_t>(varphi.size()) != m ||
      static_cast<int64_t>(cost.size()) != n * m)
    throw std::invalid_argument("c_transform_discrete: size mismatch");
  std::vector<double> phi(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    double best = cost[static_cast<size_t>(i) * m] - varphi[0];
    for (int64_t j = 1; j < m; ++j) {
      const double v = cost[static_cast<size_t>(i) * m + j] - varphi[j];
      if (v < best) best = v;  // strict: ties keep the smallest index
    }
    phi[static_cast<size_t>(i)] = best;
  }
  return phi;
}

DualPotentials recover_duals(const DiscreteInstance& inst, const TransportPlan& plan) {
  DualPotentials d;
  // Ratio floor well above kTinyRatio so the recovered potentials stay in the
  // conjugates' overflow-free range; by weak duality a floored potential only
  // lowers the dual value.
  constexpr double kDualRatioFloor = 1e-12;
  for (size_t c = 0; c < inst.conditions.size(); ++c) {
    const auto& block = inst.conditions[c];
    const auto& cp = plan.plans[c];
    std::vector<double> varphi(block.target.size());
    for (size_t j = 0; j < block.target.size(); ++j) {
      const double ratio = std::max(cp.col_mass(static_cast<int64_t>(j)) /
                                        block.target[j].weight,
                                    kDualRatioFloor);
      varphi[j] = -inst.psi2.psi_deriv(ratio);
    }
    auto cost = inst.cost_matrix(c);
    d.varphi.push_back(varphi);
    d.phi.push_back(c_transform_discrete(varphi, cost, cp.n, cp.m));
  }
  return d;
}

double eval_dual(const DiscreteInstance& inst, const DualPotentials& duals) {
  constexpr double kFeasTol = 1e-10;
  std::ostringstream violations;
  int n_viol = 0;
  double total = 0;
  for (size_t c = 0; c < inst.conditions.size(); ++c) {
    const auto& block = inst.conditions[c];
    const auto& phi = duals.phi[c];
    const auto& varphi = duals.varphi[c];
    const auto cost = inst.cost_matrix(c);
    const size_t n = block.source.size(), m = block.target.size();
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < m; ++j)
        if (phi[i] + varphi[j] > cost[i * m + j] + kFeasTol) {
          if (n_viol < 8)
            violations << " (cond " << c << ", i=" << i << ", j=" << j
                       << ", excess=" << phi[i] + varphi[j] - cost[i * m + j] << ")";
          ++n_viol;
        }
    double val = 0;
    for (size_t i = 0; i < n; ++i)
      val += -inst.psi1.conj(-phi[i]) * block.source[i].weight;
    for (size_t j = 0; j < m; ++j)
      val += -inst.psi2.conj(-varphi[j]) * block.target[j].weight;
    total += block.weight * val;
  }
  if (n_viol > 0)
    throw std::invalid_argument("eval_dual: infeasible potentials, " +
                                std::to_string(n_viol) + " violated pairs:" +
                                violations.str());
  return total;
}

RelaxedMarginals relaxed_marginals(const DiscreteInstance& inst,
                                   const DualPotentials& duals) {
  RelaxedMarginals rm;
  for (size_t c = 0; c < inst.conditions.size(); ++c) {
    const auto& block = inst.conditions[c];
    std::vector<double> et(block.source.size()), nt(block.target.size());
    for (size_t i = 0; i < et.size(); ++i)
      et[i] = inst.psi1.conj_deriv(-duals.phi[c][i]) * block.source[i].weight;
    for (size_t j = 0; j < nt.size(); ++j)
      nt[j] = inst.psi2.conj_deriv(-duals.varphi[c][j]) * block.target[j].weight;
    rm.eta_tilde.push_back(std::move(et));
    rm.nu_tilde.push_back(std::move(nt));
  }
  return rm;
}

double marginal_divergence(const DiscreteInstance& inst, const TransportPlan& plan) {
  EntropyFunction p1 = inst.psi1, p2 = inst.psi2;
  p1.alpha = 1.0;  // unscaled divergences
  p2.alpha = 1.0;
  double total = 0;
  for (size_t c = 0; c < inst.conditions.size(); ++c) {
    const auto& block = inst.conditions[c];
    const auto& cp = plan.plans[c];
    double d = 0;
    for (size_t i = 0; i < block.source.size(); ++i)
      d += block.source[i].weight *
           p1.psi(cp.row_mass(static_cast<int64_t>(i)) / block.source[i].weight);
    for (size_t j = 0; j < block.target.size(); ++j)
      d += block.target[j].weight *
           p2.psi(cp.col_mass(static_cast<int64_t>(j)) / block.target[j].weight);
    total += block.weight * d;
  }
  return total;
}

double conditional_w2_sq(const DiscreteInstance& inst) {
  double total = 0;
  for (size_t c = 0; c < inst.conditions.size(); ++c) {
    const auto& block = inst.conditions[c];
    const size_t n = block.source.size();
    if (block.target.size() != n)
      throw std::invalid_argument("conditional_w2_sq needs equal atom counts");
    for (const auto& a : block.source)
      if (std::abs(a.weight - 1.0 / n) > 1e-12)
        throw std::invalid_argument("conditional_w2_sq needs uniform weights");
    for (const auto& a : block.target)
      if (std::abs(a.weight - 1.0 / n) > 1e-12)
        throw std::invalid_argument("conditional_w2_sq needs uniform weights");
    // Squared-distance cost without tau.
    std::vector<double> cost(n * n);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) {
        double d2 = 0;
        for (size_t k = 0; k < block.source[i].coord.size(); ++k) {
          const double d = block.source[i].coord[k] - block.target[j].coord[k];
          d2 += d * d;
        }
        cost[i * n + j] = d2;
      }
    const auto res = solve_assignment(cost, static_cast<int>(n));
    total += block.weight * res.total_cost / static_cast<double>(n);
  }
  return total;
}

DiscreteInstance make_random_instance(int64_t n_conditions, int64_t n_atoms, int64_t dim,
                                      EntropyKind kind, double tau, double alpha,
                                      uint64_t seed) {
  Rng rng(seed);
  DiscreteInstance inst;
  inst.tau = tau;
  inst.psi1 = {kind, alpha};
  inst.psi2 = {kind, alpha};
  for (int64_t c = 0; c < n_conditions; ++c) {
    ConditionBlock block;
    block.y = rng.uniform(-1.0, 1.0);
    block.weight = 1.0 / static_cast<double>(n_conditions);
    for (int64_t i = 0; i < n_atoms; ++i) {
      Atom a;
      for (int64_t k = 0; k < dim; ++k) a.coord.push_back(rng.uniform(-2.0, 2.0));
      a.weight = 1.0 / static_cast<double>(n_atoms);
      block.source.push_back(std::move(a));
    }
    for (int64_t j = 0; j < n_atoms; ++j) {
      Atom a;
      for (int64_t k = 0; k < dim; ++k) a.coord.push_back(rng.uniform(-2.0, 2.0));
      a.weight = 1.0 / static_cast<double>(n_atoms);
      block.target.push_back(std::move(a));
    }
    inst.conditions.push_back(std::move(block));
  }
  return inst;
}

DiscreteInstance canonical_1x1(double c0) {
  DiscreteInstance inst;
  inst.tau = 1.0;
  inst.psi1 = {EntropyKind::KL, 1.0};
  inst.psi2 = {EntropyKind::KL, 1.0};
  ConditionBlock block;
  block.y = 0.0;
  block.weight = 1.0;
  block.source.push_back({{0.0}, 1.0});
  block.target.push_back({{std::sqrt(c0)}, 1.0});
  inst.conditions.push_back(std::move(block));
  return inst;
}

using nlohmann::json;

std::string to_json(const DiscreteInstance& inst) {
  json j;
  j["tau"] = inst.tau;
  j["psi1"] = {{"kind", to_string(inst.psi1.kind)}, {"alpha", inst.psi1.alpha}};
  j["psi2"] = {{"kind", to_string(inst.psi2.kind)}, {"alpha", inst.psi2.alpha}};
  j["conditions"] = json::array();
  for (const auto& c : inst.conditions) {
    json jc;
    jc["y"] = c.y;
    jc["weight"] = c.weight;
    auto atoms = [](const std::vector<Atom>& as) {
      json arr = json::array();
      for (const auto& a : as) arr.push_back({{"coord", a.coord}, {"weight", a.weight}});
      return arr;
    };
    jc["source"] = atoms(c.source);
    jc["target"] = atoms(c.target);
    j["conditions"].push_back(std::move(jc));
  }
  return j.dump(2);
}

DiscreteInstance instance_from_json(const std::string& text) {
  json j = json::parse(text);
  DiscreteInstance inst;
  inst.tau = j.at("tau").get<double>();
  inst.psi1 = {entropy_kind_from_string(j.at("psi1").at("kind").get<std::string>()),
               j.at("psi1").value("alpha", 1.0)};
  inst.psi2 = {entropy_kind_from_string(j.at("psi2").at("kind").get<std::string>()),
               j.at("psi2").value("alpha", 1.0)};
  for (const auto& jc : j.at("conditions")) {
    ConditionBlock c;
    c.y = jc.at("y").get<double>();
    c.weight = jc.at("weight").get<double>();
    auto atoms = [](const json& arr) {
      std::vector<Atom> as;
      for (const auto& ja : arr)
        as.push_back({ja.at("coord").get<std::vector<double>>(),
                      ja.at("weight").get<double>()});
      return as;
    };
    c.source = atoms(jc.at("source"));
    c.target = atoms(jc.at("target"));
    inst.conditions.push_back(std::move(c));
  }
  inst.validate();
  return inst;
}

std::string plan_to_json(const DiscreteInstance& inst, const TransportPlan& plan) {
  json j;
  j["objective"] = plan.objective;
  j["converged"] = plan.converged;
  j["kkt_residual"] = plan.kkt_residual;
  j["iterations"] = plan.iterations;
  j["softplus_caveat"] = plan.softplus_caveat;
  const auto duals = recover_duals(inst, plan);
  j["dual"] = eval_dual(inst, duals);
  j["duality_gap"] = plan.objective - j["dual"].get<double>();
  j["conditions"] = json::array();
  for (const auto& cp : plan.plans) {
    json jc;
    jc["rows"] = cp.n;
    jc["cols"] = cp.m;
    json mat = json::array();
    for (int64_t i = 0; i < cp.n; ++i) {
      json row = json::array();
      for (int64_t jcol = 0; jcol < cp.m; ++jcol)
        row.push_back(cp.pi[static_cast<size_t>(i) * cp.m + jcol]);
      mat.push_back(std::move(row));
    }
    jc["pi"] = std::move(mat);
    j["conditions"].push_back(std::move(jc));
  }
  return j.dump(2);
}

bool CheckReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

CheckReport run_oracle_checks(int64_t n_random, int64_t size, uint64_t seed) {
  CheckReport report;
  Rng rng(seed);

  // Strong duality + uniqueness on random single-condition KL/KL instances.
  double worst_gap = 0, worst_uniq = 0;
  bool conv = true;
  for (int64_t t = 0; t < n_random; ++t) {
    auto inst = make_random_instance(1, size, 1, EntropyKind::KL,
                                     rng.uniform(0.5, 2.0), 1.0, rng.next_u64());
    auto plan_a = solve_primal(inst, 1e-10, 400000, 11 + t);
    auto plan_b = solve_primal(inst, 1e-10, 400000, 1711 + t);
    conv = conv && plan_a.converged && plan_b.converged;
    const auto duals = recover_duals(inst, plan_a);
    worst_gap = std::max(worst_gap, std::abs(plan_a.objective - eval_dual(inst, duals)));
    for (size_t k = 0; k < plan_a.plans[0].pi.size(); ++k)
      worst_uniq = std::max(worst_uniq,
                            std::abs(plan_a.plans[0].pi[k] - plan_b.plans[0].pi[k]));
  }
  report.checks.push_back({"duality-gap", conv && worst_gap < 1e-6, worst_gap,
                           std::to_string(n_random) + " random " + std::to_string(size) +
                               "x" + std::to_string(size) + " KL/KL instances"});
  report.checks.push_back({"uniqueness", conv && worst_uniq < 1e-6, worst_uniq,
                           "max entrywise difference across independent inits"});

  // Canonical 1x1 instance with cost 2: optimal mass exp(-1).
  {
    auto inst = canonical_1x1(2.0);
    auto plan = solve_primal(inst, 1e-11, 400000, 5);
    const double m = plan.plans[0].pi[0];
    const double err = std::abs(m - std::exp(-1.0));
    report.checks.push_back({"canonical-1x1", err < 1e-6, err,
                             "plan mass " + std::to_string(m) + " vs exp(-1)"});
  }

  // Transport-cost bound on the relaxed marginals over random instances.
  {
    double worst_margin = kInf;
    for (int64_t t = 0; t < 20; ++t) {
      const EntropyKind kind = t % 2 == 0 ? EntropyKind::KL : EntropyKind::ChiSquared;
      auto inst = make_random_instance(2 + t % 3, 3 + t % 4, 1 + t % 2, kind,
                                       rng.uniform(0.5, 2.0), 1.0, rng.next_u64());
      auto plan = solve_primal(inst, 1e-10, 400000, 23 + t);
      const auto duals = recover_duals(inst, plan);
      const auto rm = relaxed_marginals(inst, duals);
      EntropyFunction p1 = inst.psi1, p2 = inst.psi2;
      double dsum = 0;
      for (size_t c = 0; c < inst.conditions.size(); ++c) {
        const auto& block = inst.conditions[c];
        double d = 0;
        for (size_t i = 0; i < block.source.size(); ++i)
          d += block.source[i].weight *
               p1.psi(rm.eta_tilde[c][i] / block.source[i].weight);
        for (size_t j = 0; j < block.target.size(); ++j)
          d += block.target[j].weight *
               p2.psi(rm.nu_tilde[c][j] / block.target[j].weight);
        dsum += block.weight * d;
      }
      const double margin = inst.tau * conditional_w2_sq(inst) - dsum;
      worst_margin = std::min(worst_margin, margin);
    }
    report.checks.push_back({"divergence-bound", worst_margin >= -1e-8, worst_margin,
                             "min margin of tau*W2^2 - sum of divergences over 20 instances"});
  }

  // Marginal tightening as alpha grows.
  {
    auto base = make_random_instance(2, 3, 1, EntropyKind::KL, 1.0, 1.0, rng.next_u64());
    double prev = kInf;
    bool monotone = true;
    std::ostringstream vals;
    for (double alpha : {1.0, 10.0, 100.0}) {
      DiscreteInstance inst = base;
      inst.psi1.alpha = alpha;
      inst.psi2.alpha = alpha;
      auto plan = solve_primal(inst, 1e-10, 400000, 91);
      const double d = marginal_divergence(inst, plan);
      vals << " alpha=" << alpha << ": " << d;
      if (d > prev + 1e-12) monotone = false;
      prev = d;
    }
    report.checks.push_back({"alpha-tightening", monotone, 0.0, vals.str()});
  }

  // Outlier deflection: a far 1%-mass target atom at 100x cost receives
  // almost none of its nominal mass.
  {
    DiscreteInstance inst;
    inst.tau = 1.0;
    inst.psi1 = {EntropyKind::KL, 1.0};
    inst.psi2 = {EntropyKind::KL, 1.0};
    ConditionBlock block;
    block.y = 0.0;
    block.weight = 1.0;
    for (int i = 0; i < 3; ++i) block.source.push_back({{0.2 * i}, 1.0 / 3.0});
    block.target.push_back({{0.1}, 0.33});
    block.target.push_back({{0.3}, 0.33});
    block.target.push_back({{0.5}, 0.33});
    block.target.push_back({{10.0}, 0.01});  // cost ~100 vs ~1 for the rest
    inst.conditions.push_back(std::move(block));
    auto plan = solve_primal(inst, 1e-10, 400000, 7);
    const double mass = plan.plans[0].col_mass(3);
    const double frac = mass / 0.01;
    report.checks.push_back({"outlier-deflection", frac < 0.10, frac,
                             "far-atom mass fraction of nominal (want < 0.10)"});
  }

  return report;
}

}  // namespace cuot::oracle
