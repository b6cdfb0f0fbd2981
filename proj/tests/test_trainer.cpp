#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cuot/nets.hpp"
#include "cuot/rng.hpp"
#include "cuot/trainer.hpp"

using namespace cuot;
using namespace cuot::train;

namespace {

std::vector<double> randn(size_t n, Rng& rng) {
  std::vector<double> v(n);
  rng.fill_normal(v);
  return v;
}

struct TinySetup {
  nets::ArchConfig arch;
  nets::GeneratorParams gen;
  nets::PotentialParams pot;
  std::vector<double> y, v, u, z;

  explicit TinySetup(uint64_t seed, size_t m = 3) {
    arch.embed_dim = 2;
    gen = nets::init_generator(arch, seed);
    pot = nets::init_potential(arch, seed + 1);
    Rng rng(seed + 2);
    y = randn(m, rng);
    v = randn(m, rng);
    u = randn(m, rng);
    z = randn(m * arch.z_dim(), rng);
  }
};

}  // namespace

TEST_CASE("transport cost closed forms") {
  auto c = transport_cost(std::vector<double>{0.0}, std::vector<double>{1.0}, 0.0007);
  CHECK(c[0] == doctest::Approx(0.0007).epsilon(1e-15));
  auto z = transport_cost(std::vector<double>{0.4}, std::vector<double>{0.4}, 2.0);
  CHECK(z[0] == 0.0);
  auto big = transport_cost(std::vector<double>{1.0}, std::vector<double>{4.0}, 2.0);
  CHECK(big[0] == doctest::Approx(18.0));
  CHECK_THROWS(transport_cost(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}, 1.0));
}

TEST_CASE("hand-evaluated mini-batch losses") {
  // Identity conjugates, M=1, c=0.5, phi(T)=0.2, phi(real)=0.7, gamma=0.
  EntropyFunction id{EntropyKind::Identity, 1.0};
  const double lp = potential_loss_value(id, id, std::vector<double>{0.5},
                                         std::vector<double>{0.2},
                                         std::vector<double>{0.7});
  CHECK(lp == doctest::Approx(-1.0).epsilon(1e-12));

  // KL conjugates with all zeros: Psi*(0) = 0 on both terms.
  EntropyFunction kl{EntropyKind::KL, 1.0};
  const double lz = potential_loss_value(kl, kl, std::vector<double>{0.0},
                                         std::vector<double>{0.0},
                                         std::vector<double>{0.0});
  CHECK(lz == doctest::Approx(0.0).epsilon(1e-12));

  CHECK(generator_loss_value(std::vector<double>{0.3}, std::vector<double>{0.1}) ==
        doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("alpha-scaling identity for both losses at random parameters") {
  Rng rng(2028);
  for (int trial = 0; trial < 8; ++trial) {
    TinySetup s(100 + trial, 4);
    const double tau = rng.uniform(0.2, 2.0);
    const double a = rng.uniform(1.5, 32.0);

    auto u_hat = nets::generator_eval(s.gen, s.y, s.v, s.z);
    auto phi_fake = nets::potential_eval(s.pot, s.y, u_hat);
    auto phi_real = nets::potential_eval(s.pot, s.y, s.u);
    auto cost = transport_cost(s.v, u_hat, tau);
    auto cost_scaled = transport_cost(s.v, u_hat, tau / a);

    for (EntropyKind kind : {EntropyKind::KL, EntropyKind::ChiSquared,
                             EntropyKind::Softplus}) {
      EntropyFunction scaled{kind, a};
      EntropyFunction unit{kind, 1.0};
      std::vector<double> pf_div(phi_fake), pr_div(phi_real);
      for (auto& x : pf_div) x /= a;
      for (auto& x : pr_div) x /= a;
      const double lhs = potential_loss_value(scaled, scaled, cost, phi_fake, phi_real);
      const double rhs =
          a * potential_loss_value(unit, unit, cost_scaled, pf_div, pr_div);
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
    // Generator loss: L(tau, phi) == a * L(tau/a, phi/a).
    std::vector<double> pf_div(phi_fake);
    for (auto& x : pf_div) x /= a;
    const double gl = generator_loss_value(cost, phi_fake);
    const double gl_scaled = a * generator_loss_value(cost_scaled, pf_div);
    CHECK(std::abs(gl - gl_scaled) < 1e-10);
  }
}

TEST_CASE("potential loss gradient matches finite differences (tiny config)") {
  TinySetup s(7);
  EntropyFunction kl{EntropyKind::KL, 1.0};
  auto u_hat = nets::generator_eval(s.gen, s.y, s.v, s.z);

  std::vector<ad::Array> point;
  for (const auto& t : s.pot.params.tensors) point.push_back({t.shape, *t.data});

  const double err = ad::grad_check(
      [&](ad::Graph& g, const std::vector<ad::Tensor>& leaves) {
        nets::AttachedParams ap;
        ap.leaves = leaves;
        auto ln = build_potential_loss(g, s.arch, ap, kl, kl, 0.5, 0.1, s.y, s.v, u_hat,
                                       s.u, 30.0);
        return ln.loss;
      },
      point, 1e-5);
  INFO("relative error ", err);
  CHECK(err < 1e-3);
}

TEST_CASE("generator loss gradient matches finite differences (tiny config)") {
  TinySetup s(8);
  std::vector<ad::Array> point;
  for (const auto& t : s.gen.params.tensors) point.push_back({t.shape, *t.data});

  const double err = ad::grad_check(
      [&](ad::Graph& g, const std::vector<ad::Tensor>& leaves) {
        nets::AttachedParams gen;
        gen.leaves = leaves;
        auto pot = nets::AttachedParams::attach(g, s.pot.params);
        auto ln = build_generator_loss(g, s.arch, gen, pot, 0.5, s.y, s.v, s.z);
        return ln.loss;
      },
      point, 1e-5);
  INFO("relative error ", err);
  CHECK(err < 1e-3);
}

TEST_CASE("c-transform consistency: generator argmin against a frozen quadratic") {
  // With phi(y,u) = -(u - ustar)^2 and tau -> 0, the argmin of c - phi is ustar.
  const double ustar = 0.8;
  const double tau = 1e-6;

  // Grid oracle.
  double best_u = -10, best_val = 1e300;
  for (double u = -3; u <= 3; u += 1e-4) {
    const double val = tau * u * u - (-(u - ustar) * (u - ustar));
    if (val < best_val) {
      best_val = val;
      best_u = u;
    }
  }
  CHECK(std::abs(best_u - ustar) < 1e-3);

  // A flexible tiny generator trained on mean[c - phi(T)] drives T toward ustar.
  nets::ArchConfig arch;
  arch.embed_dim = 4;
  auto gen = nets::init_generator(arch, 3);
  AdamState adam = AdamState::init({5e-3, 0.5, 0.9, 1e-8}, gen.params);
  Rng rng(4);
  const size_t m = 16;
  for (int step = 0; step < 400; ++step) {
    auto y = randn(m, rng), v = randn(m, rng), z = randn(m * arch.z_dim(), rng);
    ad::Graph g;
    auto ap = nets::AttachedParams::attach(g, gen.params);
    ad::Tensor yt = g.ensure(ad::Tensor({(int64_t)m, 1}, y));
    ad::Tensor vt = g.ensure(ad::Tensor({(int64_t)m, 1}, v));
    ad::Tensor zt = g.ensure(ad::Tensor({(int64_t)m, (int64_t)arch.z_dim()}, z));
    ad::Tensor u_hat = nets::generator_forward(g, arch, ap, yt, vt, zt);
    ad::Tensor cost = transport_cost_node(g, vt, u_hat, tau);
    ad::Tensor phi = ad::smul(g, ad::square(g, ad::add_scalar(g, u_hat, -ustar)), -1.0);
    ad::Tensor loss = ad::mean(g, ad::sub(g, cost, phi));
    auto ids = ap.node_ids();
    auto gm = ad::backward(g, loss, &ids);
    std::vector<std::vector<double>> grads;
    for (const auto& leaf : ap.leaves) grads.push_back(*gm.at(leaf).data);
    adam_step(gen.params, grads, adam);
  }
  auto y = randn(64, rng), v = randn(64, rng), z = randn(64 * arch.z_dim(), rng);
  auto u_hat = nets::generator_eval(gen, y, v, z);
  double mean_abs = 0;
  for (double u : u_hat) mean_abs += std::abs(u - ustar);
  mean_abs /= static_cast<double>(u_hat.size());
  CHECK(mean_abs < 0.05);
}

TEST_CASE("degenerate case: constant potential and zero tau give zero gradient") {
  TinySetup s(9);
  ad::Graph g;
  auto gen = nets::AttachedParams::attach(g, s.gen.params);
  ad::Tensor yt = g.ensure(ad::Tensor({3, 1}, s.y));
  ad::Tensor vt = g.ensure(ad::Tensor({3, 1}, s.v));
  ad::Tensor zt = g.ensure(ad::Tensor({3, s.arch.z_dim()}, s.z));
  ad::Tensor u_hat = nets::generator_forward(g, s.arch, gen, yt, vt, zt);
  ad::Tensor cost = transport_cost_node(g, vt, u_hat, 0.0);
  // phi == const: loss = mean(c) - const, and with tau = 0 the loss is constant.
  ad::Tensor loss = ad::mean(g, ad::add_scalar(g, cost, -3.14));
  auto ids = gen.node_ids();
  auto gm = ad::backward(g, loss, &ids);
  for (const auto& leaf : gen.leaves) {
    for (double x : *gm.at(leaf).data) CHECK(x == 0.0);
  }
}

TEST_CASE("clamp accounting on the KL conjugate") {
  TinySetup s(10);
  EntropyFunction kl{EntropyKind::KL, 1.0};
  auto u_hat = nets::generator_eval(s.gen, s.y, s.v, s.z);
  ad::Graph g;
  auto ap = nets::AttachedParams::attach(g, s.pot.params);
  auto ln = build_potential_loss(g, s.arch, ap, kl, kl, 0.5, 0.0, s.y, s.v, u_hat, s.u,
                                 1e-9);  // clamp threshold below typical magnitudes
  CHECK(ln.clamped_terms > 0);
  CHECK(std::isfinite(ln.value));
}

TEST_CASE("alpha schedule shapes") {
  AlphaSchedule constant;
  CHECK(constant.at(0, 100) == 1.0);
  CHECK(constant.at(99, 100) == 1.0);

  AlphaSchedule geo{AlphaSchedule::Kind::Geometric, 1.0, 1.0, 64.0};
  double prev = 0;
  for (int e = 0; e < 100; ++e) {
    const double a = geo.at(e, 100);
    CHECK(a >= prev - 1e-12);
    prev = a;
  }
  CHECK(geo.at(0, 100) == doctest::Approx(1.0));
  CHECK(geo.at(50, 100) == doctest::Approx(64.0));
  CHECK(geo.at(99, 100) == doctest::Approx(64.0));
}

TEST_CASE("smoke training run and bitwise determinism") {
  auto make_cfg = [] {
    TrainConfig cfg;
    cfg.arch.embed_dim = 4;
    cfg.batch_size = 4;
    cfg.epochs = 2;
    cfg.eval_every = 1;
    cfg.eval_n_sub = 32;
    cfg.eval_repeats = 1;
    cfg.tau = 0.0007;
    cfg.seed = 5;
    return cfg;
  };
  auto train_data = data::sample_target(data::DatasetKind::Circles, 64, 0.05, 1);
  auto test_data = data::sample_target(data::DatasetKind::Circles, 32, 0.05, 2);
  auto stats = data::fit_stats_clean(train_data);
  data::standardize(train_data, stats);
  data::standardize(test_data, stats);

  auto r1 = cuot::train::train(make_cfg(), train_data, test_data);
  CHECK(r1.history.size() == 2);
  for (const auto& log : r1.history) {
    CHECK(std::isfinite(log.loss_potential));
    CHECK(std::isfinite(log.loss_generator));
  }
  CHECK(r1.history.front().test_w2.has_value());
  CHECK(std::isfinite(r1.best_test_w2));

  auto r2 = cuot::train::train(make_cfg(), train_data, test_data);
  for (size_t t = 0; t < r1.generator.params.tensors.size(); ++t)
    CHECK(*r1.generator.params.tensors[t].data == *r2.generator.params.tensors[t].data);
  for (size_t t = 0; t < r1.potential.params.tensors.size(); ++t)
    CHECK(*r1.potential.params.tensors[t].data == *r2.potential.params.tensors[t].data);
}

TEST_CASE("divergence abort carries a snapshot") {
  TrainConfig cfg;
  cfg.arch.embed_dim = 4;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.divergence_abort = 1e-12;  // force the abort path immediately
  auto train_data = data::sample_target(data::DatasetKind::Moons, 16, 0.05, 1);
  auto test_data = data::sample_target(data::DatasetKind::Moons, 16, 0.05, 2);
  auto stats = data::fit_stats_clean(train_data);
  data::standardize(train_data, stats);
  data::standardize(test_data, stats);
  try {
    cuot::train::train(cfg, train_data, test_data);
    FAIL("expected TrainDivergence");
  } catch (const TrainDivergence& e) {
    CHECK(e.epoch == 0);
    CHECK(std::isfinite(e.loss));
  }
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.tau = -1;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.batch_size = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.alpha.kind = AlphaSchedule::Kind::Constant;
  cfg.alpha.value = 0.5;
  CHECK_THROWS(cfg.validate());
}
