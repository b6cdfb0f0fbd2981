#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cuot/adam.hpp"
#include "cuot/rng.hpp"
#include "cuot/tensor.hpp"

using namespace cuot;
using namespace cuot::ad;

namespace {

Array random_array(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Array a;
  a.shape = shape;
  a.data.resize(static_cast<size_t>(numel(shape)));
  for (auto& v : a.data) v = rng.uniform(lo, hi);
  return a;
}

}  // namespace

TEST_CASE("closed-form forward values") {
  Graph g;
  CHECK(softplus(g, Tensor::scalar(0.0)).value() == doctest::Approx(std::log(2.0)));

  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b({3, 1}, {1, 1, 1});
  Tensor c = matmul(g, a, b);
  CHECK(c.shape == Shape{2, 1});
  CHECK((*c.data)[0] == 6);
  CHECK((*c.data)[1] == 15);

  Tensor row({1, 2}, {3, 4});
  CHECK(rownorm2(g, row).value() == 25);
}

TEST_CASE("basic gradients") {
  Graph g;
  Tensor x = g.ensure(Tensor::scalar(3.0));
  Tensor y = square(g, x);
  auto gm = backward(g, y);
  CHECK(gm.at(x).value() == doctest::Approx(6.0));
}

TEST_CASE("softplus gradient at zero is one half") {
  Graph g;
  Tensor x = g.ensure(Tensor::scalar(0.0));
  auto gm = backward(g, softplus(g, x));
  CHECK(gm.at(x).value() == doctest::Approx(0.5));
}

TEST_CASE("double backward: second derivative of x^3 at 2 is 12") {
  Graph g;
  Tensor x = g.ensure(Tensor::scalar(2.0));
  Tensor y = mul(g, square(g, x), x);
  auto gm = backward(g, y);
  Tensor dy = gm.at(x);  // 3x^2
  CHECK(dy.value() == doctest::Approx(12.0));
  auto gm2 = backward(g, dy);
  CHECK(gm2.at(x).value() == doctest::Approx(12.0));  // 6x
}

TEST_CASE("non-scalar root rejected; detached leaf gets zero gradient") {
  Graph g;
  Tensor x = g.ensure(Tensor({2}, {1, 2}));
  CHECK_THROWS_AS(backward(g, x), ShapeError);

  Tensor root = sum(g, x);
  auto gm = backward(g, root);
  Tensor unrelated({3}, {1, 2, 3});
  Tensor zg = gm.at(unrelated);
  for (double v : *zg.data) CHECK(v == 0.0);
}

TEST_CASE("shape errors are descriptive; non-finite output names the op") {
  Graph g;
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({3, 1}, {1, 2, 3});
  CHECK_THROWS_AS(matmul(g, a, b), ShapeError);
  CHECK_THROWS_WITH_AS(log(g, Tensor::scalar(-1.0)),
                       doctest::Contains("log"), NumericError);
}

TEST_CASE("grad_check over every supported op") {
  Rng rng(2024);
  const double h = 1e-4;
  auto check20 = [&](const char* name, const ScalarFn& f,
                     const std::function<std::vector<Array>(Rng&)>& point_gen) {
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      auto pt = point_gen(rng);
      worst = std::max(worst, grad_check(f, pt, h));
    }
    INFO("op ", name, " worst rel err ", worst);
    CHECK(worst < 1e-5);
  };

  auto two_mats = [](Rng& r) {
    Rng rr = r.split(r.next_u64());
    return std::vector<Array>{random_array({3, 4}, rr), random_array({3, 4}, rr)};
  };
  check20("add", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, add(g, v[0], v[1]));
  }, two_mats);
  check20("sub", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, square(g, sub(g, v[0], v[1])));
  }, two_mats);
  check20("mul", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, mul(g, v[0], v[1]));
  }, two_mats);

  auto bias_case = [](Rng& r) {
    Rng rr = r.split(r.next_u64());
    return std::vector<Array>{random_array({4, 3}, rr), random_array({1, 3}, rr)};
  };
  check20("row-bias add", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, square(g, add(g, v[0], v[1])));
  }, bias_case);

  auto scalar_tensor = [](Rng& r) {
    Rng rr = r.split(r.next_u64());
    return std::vector<Array>{random_array({}, rr), random_array({2, 3}, rr)};
  };
  check20("scalar broadcast mul", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, mul(g, v[0], v[1]));
  }, scalar_tensor);

  auto one_mat = [](Rng& r) {
    Rng rr = r.split(r.next_u64());
    return std::vector<Array>{random_array({3, 4}, rr)};
  };
  check20("smul", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, smul(g, v[0], -1.7));
  }, one_mat);
  check20("add_scalar+square", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, square(g, add_scalar(g, v[0], 0.3)));
  }, one_mat);
  check20("exp", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, exp(g, v[0]));
  }, one_mat);
  check20("softplus", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, softplus(g, v[0]));
  }, one_mat);
  check20("sigmoid", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, sigmoid(g, v[0]));
  }, one_mat);
  check20("silu", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, silu(g, v[0]));
  }, one_mat);
  check20("transpose+mean", [](Graph& g, const std::vector<Tensor>& v) {
    return mean(g, transpose(g, v[0]));
  }, one_mat);
  check20("reshape", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, square(g, reshape(g, v[0], {12})));
  }, one_mat);
  check20("rownorm2", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, rownorm2(g, v[0]));
  }, one_mat);
  check20("clamp_max", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, clamp_max(g, v[0], 0.2));
  }, one_mat);

  auto positive_mat = [](Rng& r) {
    Rng rr = r.split(r.next_u64());
    return std::vector<Array>{random_array({3, 4}, rr, 0.5, 2.0)};
  };
  check20("log", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, log(g, v[0]));
  }, positive_mat);
  check20("recip", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, recip(g, v[0]));
  }, positive_mat);

  auto nonzero_mat = [](Rng& r) {
    Rng rr = r.split(r.next_u64());
    auto a = random_array({3, 4}, rr);
    for (auto& v : a.data) v += v >= 0 ? 0.05 : -0.05;  // keep away from the kink
    return std::vector<Array>{a};
  };
  check20("relu", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, square(g, relu(g, v[0])));
  }, nonzero_mat);

  check20("matmul", [](Graph& g, const std::vector<Tensor>& v) {
    return sum(g, matmul(g, v[0], v[1]));
  }, [](Rng& r) {
    Rng rr = r.split(r.next_u64());
    return std::vector<Array>{random_array({3, 4}, rr), random_array({4, 2}, rr)};
  });

  check20("concat+slice", [](Graph& g, const std::vector<Tensor>& v) {
    Tensor c = concat_cols(g, v[0], v[1]);
    return sum(g, square(g, slice_cols(g, c, 1, 4)));
  }, [](Rng& r) {
    Rng rr = r.split(r.next_u64());
    return std::vector<Array>{random_array({3, 2}, rr), random_array({3, 3}, rr)};
  });
}

TEST_CASE("grad_check spec examples") {
  Rng rng(5);
  auto pt = std::vector<Array>{random_array({5}, rng)};
  const double err = grad_check(
      [](Graph& g, const std::vector<Tensor>& v) { return sum(g, square(g, v[0])); }, pt,
      1e-4);
  CHECK(err < 1e-6);

  // Constant function: zero both ways.
  const double cerr = grad_check(
      [](Graph& g, const std::vector<Tensor>& v) {
        (void)v;
        return g.ensure(Tensor::scalar(4.2));
      },
      pt, 1e-4);
  CHECK(cerr == 0.0);
}

TEST_CASE("backward is linear in the root") {
  Rng rng(77);
  auto x = random_array({4}, rng);
  const double a = 1.7, b = -0.6;

  Graph g;
  Tensor leaf = g.leaf(x.shape, std::make_shared<std::vector<double>>(x.data));
  Tensor f = sum(g, square(g, leaf));
  Tensor h = sum(g, exp(g, leaf));
  Tensor combo = add(g, smul(g, f, a), smul(g, h, b));
  auto gm = backward(g, combo);
  Tensor gc = gm.at(leaf);

  Graph g2;
  Tensor leaf2 = g2.leaf(x.shape, std::make_shared<std::vector<double>>(x.data));
  auto gf = backward(g2, sum(g2, square(g2, leaf2))).at(leaf2);
  auto gh = backward(g2, sum(g2, exp(g2, leaf2))).at(leaf2);
  for (int i = 0; i < 4; ++i) {
    const double expect = a * (*gf.data)[i] + b * (*gh.data)[i];
    CHECK((*gc.data)[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("double backward of a gradient norm matches finite differences") {
  // phi(x) = sum(silu(x W)) for a fixed W; F(x) = |grad_x phi|^2.
  Rng rng(11);
  auto w = random_array({3, 3}, rng);
  auto x0 = random_array({1, 3}, rng);

  auto grad_norm = [&](const std::vector<double>& xv) {
    Graph g;
    Tensor x = g.leaf({1, 3}, std::make_shared<std::vector<double>>(xv));
    Tensor W = g.ensure(Tensor({3, 3}, w.data));
    Tensor phi = sum(g, silu(g, matmul(g, x, W)));
    std::vector<int64_t> tgt{x.node};
    auto gm = backward(g, phi, &tgt);
    return gm.at(x);
  };

  // Analytic gradient of F via double backward.
  Graph g;
  Tensor x = g.leaf({1, 3}, std::make_shared<std::vector<double>>(x0.data));
  Tensor W = g.ensure(Tensor({3, 3}, w.data));
  Tensor phi = sum(g, silu(g, matmul(g, x, W)));
  std::vector<int64_t> tgt{x.node};
  auto gm1 = backward(g, phi, &tgt);
  Tensor gx = gm1.at(x);
  Tensor F = sum(g, square(g, gx));
  auto gm2 = backward(g, F);
  Tensor dF = gm2.at(x);

  const double h = 1e-5;
  for (int i = 0; i < 3; ++i) {
    auto xp = x0.data, xm = x0.data;
    xp[i] += h;
    xm[i] -= h;
    auto gp = grad_norm(xp), gmv = grad_norm(xm);
    double fp = 0, fm = 0;
    for (double v : *gp.data) fp += v * v;
    for (double v : *gmv.data) fm += v * v;
    const double numeric = (fp - fm) / (2 * h);
    const double analytic = (*dF.data)[i];
    CHECK(std::abs(analytic - numeric) /
              std::max({std::abs(analytic), std::abs(numeric), 1e-8}) < 1e-4);
  }
}

TEST_CASE("replay determinism: identical inputs give identical bytes") {
  auto run = [] {
    Rng rng(31337);
    Graph g;
    Tensor a = g.ensure(Tensor({4, 4}, [&] {
      std::vector<double> v(16);
      for (auto& x : v) x = rng.uniform(-1, 1);
      return v;
    }()));
    Tensor out = silu(g, matmul(g, a, transpose(g, a)));
    auto gm = backward(g, sum(g, out));
    return std::make_pair(*out.data, *gm.at(a).data);
  };
  auto [o1, g1] = run();
  auto [o2, g2] = run();
  CHECK(o1 == o2);
  CHECK(g1 == g2);
}

TEST_CASE("adam: hand-executed first step") {
  ParamSet params;
  auto& p = params.add("w", {1});
  (*p.data)[0] = 1.0;
  AdamState st = AdamState::init({0.1, 0.5, 0.9, 1e-8}, params);
  adam_step(params, {{1.0}}, st);
  // Bias correction makes the first step lr * g / (|g| + eps).
  CHECK((*p.data)[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
  CHECK(st.step == 1);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ParamSet params;
  auto& p = params.add("w", {2});
  (*p.data)[0] = 0.3;
  (*p.data)[1] = -0.7;
  AdamState st = AdamState::init({0.1, 0.5, 0.9, 1e-8}, params);
  adam_step(params, {{0.0, 0.0}}, st);
  CHECK((*p.data)[0] == 0.3);
  CHECK((*p.data)[1] == -0.7);
  CHECK(st.step == 1);
}

TEST_CASE("adam: determinism and shape validation") {
  auto run = [] {
    ParamSet params;
    auto& p = params.add("w", {3});
    (*p.data) = {0.1, 0.2, 0.3};
    AdamState st = AdamState::init({0.01, 0.5, 0.9, 1e-8}, params);
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
      std::vector<double> grad(3);
      for (auto& gv : grad) gv = rng.normal();
      adam_step(params, {grad}, st);
    }
    return *params.tensors[0].data;
  };
  CHECK(run() == run());

  ParamSet params;
  params.add("w", {3});
  AdamState st = AdamState::init({0.01, 0.5, 0.9, 1e-8}, params);
  CHECK_THROWS(adam_step(params, {{1.0}}, st));
}
