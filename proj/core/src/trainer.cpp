#include "cuot/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "cuot/metrics.hpp"

namespace cuot::train {

double AlphaSchedule::at(int64_t epoch, int64_t total_epochs) const {
  if (kind == Kind::Constant) return value;
  const int64_t ramp = std::max<int64_t>(1, total_epochs / 2);
  if (epoch >= ramp) return end;
  const double t = static_cast<double>(epoch) / static_cast<double>(ramp);
  return start * std::pow(end / start, t);
}

void TrainConfig::validate() const {
  if (tau <= 0) throw std::invalid_argument("tau must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (r1_gamma < 0) throw std::invalid_argument("r1_gamma must be >= 0");
  if (lr_generator <= 0 || lr_potential <= 0)
    throw std::invalid_argument("learning rates must be > 0");
  if (alpha.kind == AlphaSchedule::Kind::Constant) {
    if (alpha.value < 1.0) throw std::invalid_argument("alpha must be >= 1");
  } else if (alpha.start < 1.0 || alpha.end < alpha.start) {
    throw std::invalid_argument("alpha schedule must be >= 1 and non-decreasing");
  }
}

std::vector<double> transport_cost(std::span<const double> v, std::span<const double> u,
                                   double tau) {
  if (v.size() != u.size())
    throw std::invalid_argument("transport_cost: batch length mismatch");
  std::vector<double> c(v.size());
  for (size_t i = 0; i < v.size(); ++i) c[i] = tau * (v[i] - u[i]) * (v[i] - u[i]);
  return c;
}

ad::Tensor transport_cost_node(ad::Graph& g, const ad::Tensor& v, const ad::Tensor& u,
                               double tau) {
  return ad::smul(g, ad::square(g, ad::sub(g, v, u)), tau);
}

double potential_loss_value(const EntropyFunction& psi1, const EntropyFunction& psi2,
                            std::span<const double> cost, std::span<const double> phi_fake,
                            std::span<const double> phi_real) {
  if (cost.size() != phi_fake.size() || phi_fake.size() != phi_real.size())
    throw std::invalid_argument("potential_loss_value: batch length mismatch");
  const double m = static_cast<double>(cost.size());
  double acc = 0.0;
  for (size_t j = 0; j < cost.size(); ++j) acc += psi1.conj(phi_fake[j] - cost[j]);
  double acc2 = 0.0;
  for (size_t j = 0; j < cost.size(); ++j) acc2 += psi2.conj(-phi_real[j]);
  return acc / m + acc2 / m;
}

double generator_loss_value(std::span<const double> cost, std::span<const double> phi_fake) {
  if (cost.size() != phi_fake.size())
    throw std::invalid_argument("generator_loss_value: batch length mismatch");
  double acc = 0.0;
  for (size_t j = 0; j < cost.size(); ++j) acc += cost[j] - phi_fake[j];
  return acc / static_cast<double>(cost.size());
}

namespace {

ad::Tensor column_const(ad::Graph& g, std::span<const double> v) {
  return g.ensure(ad::Tensor({static_cast<int64_t>(v.size()), 1},
                             std::vector<double>(v.begin(), v.end())));
}

// Clamp the conjugate argument for KL (exp growth); count clamped entries.
ad::Tensor guarded_conj(ad::Graph& g, const EntropyFunction& psi, const ad::Tensor& arg,
                        double clamp_threshold, int64_t* clamped) {
  if (psi.kind != EntropyKind::KL || clamp_threshold <= 0) return psi.conj_node(g, arg);
  const double limit = clamp_threshold * psi.alpha;
  int64_t over = 0;
  for (double x : *arg.data) over += x > limit;
  if (clamped) *clamped += over;
  if (over == 0) return psi.conj_node(g, arg);
  return psi.conj_node(g, ad::clamp_max(g, arg, limit));
}

}  // namespace

PotentialLossNode build_potential_loss(ad::Graph& g, const nets::ArchConfig& arch,
                                       const nets::AttachedParams& pot,
                                       const EntropyFunction& psi1,
                                       const EntropyFunction& psi2, double tau,
                                       double r1_gamma, std::span<const double> y,
                                       std::span<const double> v,
                                       std::span<const double> u_hat,
                                       std::span<const double> u_real,
                                       double clamp_threshold) {
  if (y.size() != v.size() || y.size() != u_hat.size() || y.size() != u_real.size())
    throw std::invalid_argument("build_potential_loss: batch length mismatch");

  PotentialLossNode out;
  ad::Tensor y_col = column_const(g, y);
  ad::Tensor fake_col = column_const(g, u_hat);
  out.u_real_leaf = column_const(g, u_real);

  // Transported term: Psi1*(phi(y, u_hat) - c), cost constant w.r.t. omega.
  const std::vector<double> cost = transport_cost(v, u_hat, tau);
  ad::Tensor phi_fake = nets::potential_forward(g, arch, pot, y_col, fake_col);
  ad::Tensor arg1 = ad::sub(g, phi_fake, column_const(g, cost));
  ad::Tensor term1 = ad::mean(g, guarded_conj(g, psi1, arg1, clamp_threshold,
                                              &out.clamped_terms));

  // Real term: Psi2*(-phi(y, u_real)).
  ad::Tensor phi_real = nets::potential_forward(g, arch, pot, y_col, out.u_real_leaf);
  ad::Tensor arg2 = ad::smul(g, phi_real, -1.0);
  ad::Tensor term2 = ad::mean(g, guarded_conj(g, psi2, arg2, clamp_threshold,
                                              &out.clamped_terms));

  ad::Tensor total = ad::add(g, term1, term2);

  if (r1_gamma > 0) {
    // Per-sample gradient of phi w.r.t. the data input, via a backward pass
    // recorded on the tape (rows are independent, so d(sum phi)/du is the
    // per-sample derivative).
    ad::Tensor s = ad::sum(g, phi_real);
    std::vector<int64_t> target{out.u_real_leaf.node};
    ad::GradMap gm = ad::backward(g, s, &target);
    ad::Tensor gu = gm.at(out.u_real_leaf);
    ad::Tensor r1 = ad::smul(g, ad::mean(g, ad::rownorm2(g, gu)), r1_gamma / 2.0);
    out.r1_value = r1.value();
    total = ad::add(g, total, r1);
  }

  out.loss = total;
  out.value = total.value();
  return out;
}

GeneratorLossNode build_generator_loss(ad::Graph& g, const nets::ArchConfig& arch,
                                       const nets::AttachedParams& gen,
                                       const nets::AttachedParams& pot, double tau,
                                       std::span<const double> y,
                                       std::span<const double> v,
                                       std::span<const double> z) {
  if (y.size() != v.size())
    throw std::invalid_argument("build_generator_loss: batch length mismatch");
  const int64_t m = static_cast<int64_t>(y.size());

  ad::Tensor y_col = column_const(g, y);
  ad::Tensor v_col = column_const(g, v);
  ad::Tensor z_mat = g.ensure(
      ad::Tensor({m, arch.z_dim()}, std::vector<double>(z.begin(), z.end())));

  ad::Tensor u_hat = nets::generator_forward(g, arch, gen, y_col, v_col, z_mat);
  ad::Tensor cost = transport_cost_node(g, v_col, u_hat, tau);
  ad::Tensor phi = nets::potential_forward(g, arch, pot, y_col, u_hat);

  GeneratorLossNode out;
  out.loss = ad::mean(g, ad::sub(g, cost, phi));
  out.value = out.loss.value();
  return out;
}

std::vector<double> generate(const nets::GeneratorParams& gen, std::span<const double> y,
                             Rng& rng) {
  const size_t n = y.size();
  std::vector<double> out(n);
  const int64_t zdim = gen.arch.z_dim();
  constexpr size_t kChunk = 2048;
  std::vector<double> v, z;
  for (size_t at = 0; at < n; at += kChunk) {
    const size_t len = std::min(kChunk, n - at);
    v.resize(len);
    z.resize(len * static_cast<size_t>(zdim));
    rng.fill_normal(v);
    rng.fill_normal(z);
    auto u = nets::generator_eval(gen, {y.data() + at, len}, v, z);
    std::copy(u.begin(), u.end(), out.begin() + static_cast<int64_t>(at));
  }
  return out;
}

namespace {

std::vector<std::vector<double>> extract_grads(const ad::GradMap& gm,
                                               const nets::AttachedParams& attached) {
  std::vector<std::vector<double>> grads;
  grads.reserve(attached.leaves.size());
  for (const auto& leaf : attached.leaves) grads.push_back(*gm.at(leaf).data);
  return grads;
}

double eval_test_w2(const nets::GeneratorParams& gen, const data::PairBatch& test,
                    const TrainConfig& cfg, Rng rng) {
  std::vector<double> u_hat = generate(gen, test.y, rng);
  metrics::Points generated{test.y, u_hat};
  metrics::Points reference{test.y, test.x};
  const int n_sub = static_cast<int>(
      std::min<int64_t>(cfg.eval_n_sub, static_cast<int64_t>(test.size())));
  if (static_cast<size_t>(n_sub) == test.size() && cfg.eval_repeats == 1)
    return metrics::w2_exact(generated, reference);
  return metrics::robust_w2(generated, reference, n_sub,
                            static_cast<int>(cfg.eval_repeats), rng.next_u64());
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const data::PairBatch& train_data,
                  const data::PairBatch& test_data, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_data.size() == 0 || test_data.size() == 0)
    throw std::invalid_argument("train: empty dataset");

  TrainResult result;
  result.generator = nets::init_generator(cfg.arch, cfg.seed);
  result.potential = nets::init_potential(cfg.arch, cfg.seed + 0x9e37);
  AdamState adam_gen = AdamState::init({cfg.lr_generator, cfg.adam_beta1, cfg.adam_beta2, 1e-8},
                                       result.generator.params);
  AdamState adam_pot = AdamState::init({cfg.lr_potential, cfg.adam_beta1, cfg.adam_beta2, 1e-8},
                                       result.potential.params);

  Rng root(cfg.seed);
  Rng rng_shuffle = root.split("shuffle");
  Rng rng_source = root.split("source-v");
  Rng rng_z = root.split("aux-z");
  Rng rng_eval = root.split("eval");

  const int64_t n = static_cast<int64_t>(train_data.size());
  const int64_t m_cfg = cfg.batch_size;
  const int64_t iters = (n + m_cfg - 1) / m_cfg;

  result.best_test_w2 = std::numeric_limits<double>::infinity();
  std::vector<int64_t> order(n);
  for (int64_t i = 0; i < n; ++i) order[i] = i;

  std::vector<double> y_batch, u_batch, v_batch, z_batch;

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double alpha = cfg.alpha.at(epoch, cfg.epochs);
    const EntropyFunction psi1{cfg.psi1, alpha};
    const EntropyFunction psi2{cfg.psi2, alpha};

    rng_shuffle.shuffle(order);
    double sum_lp = 0, sum_lg = 0, sum_r1 = 0;
    int64_t epoch_clamped = 0, epoch_terms = 0;

    for (int64_t it = 0; it < iters; ++it) {
      const int64_t lo = it * m_cfg;
      const int64_t m = std::min(m_cfg, n - lo);
      y_batch.resize(m);
      u_batch.resize(m);
      for (int64_t k = 0; k < m; ++k) {
        y_batch[k] = train_data.y[order[lo + k]];
        u_batch[k] = train_data.x[order[lo + k]];
      }

      // Potential update (generator held fixed).
      v_batch.resize(m);
      rng_source.fill_normal(v_batch);
      z_batch.resize(m * cfg.arch.z_dim());
      rng_z.fill_normal(z_batch);
      const std::vector<double> u_hat =
          nets::generator_eval(result.generator, y_batch, v_batch, z_batch);
      {
        ad::Graph g;
        auto pot = nets::AttachedParams::attach(g, result.potential.params);
        auto ln = build_potential_loss(g, cfg.arch, pot, psi1, psi2, cfg.tau,
                                       cfg.r1_gamma, y_batch, v_batch, u_hat, u_batch,
                                       cfg.clamp_threshold);
        if (!std::isfinite(ln.value) || std::abs(ln.value) > cfg.divergence_abort)
          throw TrainDivergence("potential loss diverged to " + std::to_string(ln.value),
                                epoch, it, ln.value);
        auto ids = pot.node_ids();
        ad::GradMap gm = ad::backward(g, ln.loss, &ids);
        auto grads = extract_grads(gm, pot);
        adam_step(result.potential.params, grads, adam_pot);
        sum_lp += ln.value;
        sum_r1 += ln.r1_value;
        epoch_clamped += ln.clamped_terms;
        epoch_terms += 2 * m;
      }

      // Generator update on fresh (v, z), same conditions.
      rng_source.fill_normal(v_batch);
      rng_z.fill_normal(z_batch);
      {
        ad::Graph g;
        auto gen = nets::AttachedParams::attach(g, result.generator.params);
        auto pot = nets::AttachedParams::attach(g, result.potential.params);
        auto ln = build_generator_loss(g, cfg.arch, gen, pot, cfg.tau, y_batch, v_batch,
                                       z_batch);
        if (!std::isfinite(ln.value) || std::abs(ln.value) > cfg.divergence_abort)
          throw TrainDivergence("generator loss diverged to " + std::to_string(ln.value),
                                epoch, it, ln.value);
        auto ids = gen.node_ids();
        ad::GradMap gm = ad::backward(g, ln.loss, &ids);
        auto grads = extract_grads(gm, gen);
        adam_step(result.generator.params, grads, adam_gen);
        sum_lg += ln.value;
      }
    }

    result.clamped_terms += epoch_clamped;
    result.total_terms += epoch_terms;
    if (epoch_terms > 0 &&
        static_cast<double>(epoch_clamped) / static_cast<double>(epoch_terms) >
            cfg.clamp_abort_fraction)
      throw TrainDivergence("conjugate clamp engaged for >" +
                                std::to_string(cfg.clamp_abort_fraction * 100) +
                                "% of terms this epoch",
                            epoch, iters - 1, sum_lp / iters);

    EpochLog log;
    log.epoch = epoch;
    log.loss_potential = sum_lp / static_cast<double>(iters);
    log.loss_generator = sum_lg / static_cast<double>(iters);
    log.r1_penalty = sum_r1 / static_cast<double>(iters);
    log.alpha = alpha;

    const bool last = epoch + 1 == cfg.epochs;
    if (epoch % cfg.eval_every == 0 || last) {
      const double w2 = eval_test_w2(result.generator, test_data, cfg,
                                     rng_eval.split(epoch));
      log.test_w2 = w2;
      if (w2 < result.best_test_w2) {
        result.best_test_w2 = w2;
        result.best_epoch = epoch;
        result.best_generator = result.generator;
        result.best_generator.params = result.generator.params.clone();
      }
    }
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace cuot::train
