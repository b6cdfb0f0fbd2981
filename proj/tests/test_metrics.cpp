#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cuot/assignment.hpp"
#include "cuot/metrics.hpp"
#include "cuot/rng.hpp"

using namespace cuot;
using metrics::Points;

namespace {

double brute_force_assignment(const std::vector<double>& cost, int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::max();
  do {
    double total = 0;
    for (int i = 0; i < n; ++i) total += cost[static_cast<size_t>(i) * n + perm[i]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Points random_points(int n, Rng& rng, double shift = 0.0) {
  Points p;
  for (int i = 0; i < n; ++i) p.push_back(rng.normal(), rng.normal() + shift);
  return p;
}

}  // namespace

TEST_CASE("assignment solver matches brute force up to n=7") {
  Rng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_int(7));
    std::vector<double> cost(static_cast<size_t>(n) * n);
    for (auto& c : cost) c = rng.uniform(0.0, 10.0);
    const auto res = solve_assignment(cost, n);
    // Valid permutation.
    std::vector<int> seen(n, 0);
    for (int i = 0; i < n; ++i) seen[res.row_to_col[i]]++;
    for (int i = 0; i < n; ++i) CHECK(seen[i] == 1);
    CHECK(res.total_cost == doctest::Approx(brute_force_assignment(cost, n)).epsilon(1e-9));
  }
}

TEST_CASE("w2_exact closed cases") {
  Points a, b;
  a.push_back(0, 0);
  b.push_back(3, 4);
  CHECK(metrics::w2_exact(a, b) == doctest::Approx(5.0));

  Rng rng(7);
  Points c = random_points(20, rng);
  CHECK(metrics::w2_exact(c, c) == doctest::Approx(0.0));

  Points big = random_points(5, rng);
  CHECK_THROWS(metrics::w2_exact(c, big));
}

TEST_CASE("w2_exact equals permutation brute force on 3x3") {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    Points a = random_points(3, rng), b = random_points(3, rng);
    std::vector<double> cost(9);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double dy = a.y[i] - b.y[j], dx = a.x[i] - b.x[j];
        cost[static_cast<size_t>(i) * 3 + j] = dy * dy + dx * dx;
      }
    const double expect = std::sqrt(brute_force_assignment(cost, 3) / 3.0);
    CHECK(metrics::w2_exact(a, b) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("metric axioms on samples") {
  Rng rng(13);
  Points a = random_points(16, rng), b = random_points(16, rng), c = random_points(16, rng);
  const double ab = metrics::w2_exact(a, b);
  const double ba = metrics::w2_exact(b, a);
  const double ac = metrics::w2_exact(a, c);
  const double cb = metrics::w2_exact(c, b);
  CHECK(std::abs(ab - ba) < 1e-12);
  CHECK(ab <= ac + cb + 1e-9);
}

TEST_CASE("1-d W2: translation and unequal sizes") {
  CHECK(metrics::w2_1d({0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}) == doctest::Approx(0.0));
  CHECK(metrics::w2_1d({0.0, 1.0, 2.0}, {0.5, 1.5, 2.5}) == doctest::Approx(0.5));
  // Hand computation: quantiles of {0,1} vs {0.5}.
  CHECK(metrics::w2_1d({0.0, 1.0}, {0.5}) == doctest::Approx(0.5));
}

TEST_CASE("binned conditional W2") {
  Rng rng(3);
  Points b;
  for (int i = 0; i < 4000; ++i) b.push_back(rng.uniform(0, 1), rng.normal());
  CHECK(metrics::w2_conditional_binned(b, b, 20).value == doctest::Approx(0.0));

  Points shifted = b;
  for (auto& x : shifted.x) x += 0.75;
  const auto r = metrics::w2_conditional_binned(shifted, b, 20);
  CHECK(r.value == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(r.skipped_bins == 0);

  // Two-bin toy against a hand-computed sorted matching.
  Points ta, tb;
  // bin 1: y ~ 0, xs {0, 2} vs {1, 3}; bin 2: y ~ 10, xs {5} vs {6}.
  ta.push_back(0.0, 0.0);
  ta.push_back(0.1, 2.0);
  ta.push_back(10.0, 5.0);
  tb.push_back(0.0, 1.0);
  tb.push_back(0.1, 3.0);
  tb.push_back(10.0, 6.0);
  const auto toy = metrics::w2_conditional_binned(ta, tb, 2);
  // Per-bin sorted matching gives 1 in both bins; masses 2/3 and 1/3.
  CHECK(toy.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("robust_w2 behavior") {
  Rng rng(4);
  Points clean = random_points(800, rng);
  CHECK(metrics::robust_w2(clean, clean, 800, 1, 9) == doctest::Approx(0.0));

  // Contaminating 1% of points far away strictly increases the distance.
  Points contaminated = clean;
  for (int i = 0; i < 8; ++i) {
    contaminated.y[i] = 40 + i;
    contaminated.x[i] = 40 + i;
  }
  const double d_cont = metrics::robust_w2(contaminated, clean, 400, 3, 9);
  const double d_clean = metrics::robust_w2(clean, clean, 400, 3, 9);
  CHECK(d_cont > d_clean);

  CHECK(metrics::robust_w2(clean, clean, 400, 3, 123) ==
        metrics::robust_w2(clean, clean, 400, 3, 123));
  CHECK_THROWS(metrics::robust_w2(clean, clean, 10000, 1, 1));
}

TEST_CASE("subsampling consistency of the repeated-matching estimate") {
  Rng rng(6);
  Points a = random_points(5000, rng, 0.0);
  Points b = random_points(5000, rng, 0.35);
  std::vector<double> vals;
  for (int r = 0; r < 20; ++r) vals.push_back(metrics::robust_w2(a, b, 1000, 1, 100 + r));
  const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
  double var = 0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= (vals.size() - 1);
  const double stderr_mean = std::sqrt(var / vals.size());
  CHECK(stderr_mean < 0.1 * mean);
}

TEST_CASE("kde grid") {
  Points one;
  one.push_back(0.0, 0.0);
  auto g = metrics::kde_grid(one, -2, 2, -2, 2, 21, 21, 0.3);
  // Max at the cell containing the origin.
  int best = 0;
  for (size_t i = 0; i < g.density.size(); ++i)
    if (g.density[i] > g.density[best]) best = static_cast<int>(i);
  CHECK(best == (21 / 2) * 21 + 21 / 2);
  CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-3));

  CHECK_THROWS(metrics::kde_grid(one, -2, 2, -2, 2, 21, 21, 0.0));
  CHECK_THROWS(metrics::kde_grid(one, -2, 2, -2, 2, 1, 21));

  // Scott default on a standard normal cloud resembles the analytic density.
  // (20k points keep the sampling noise of the KDE well under the bound.)
  Rng rng(14);
  Points cloud = random_points(20000, rng);
  auto gd = metrics::kde_grid(cloud, -5, 5, -5, 5, 41, 41);
  CHECK(gd.mass() == doctest::Approx(1.0).epsilon(1e-3));
  double peak = 0;
  int arg = 0;
  for (size_t i = 0; i < gd.density.size(); ++i)
    if (gd.density[i] > peak) {
      peak = gd.density[i];
      arg = static_cast<int>(i);
    }
  const int iy = arg / 41, ix = arg % 41;
  CHECK(std::abs(iy - 20) <= 2);
  CHECK(std::abs(ix - 20) <= 2);
  // Pointwise agreement with the analytic smoothed density: a Gaussian KDE of
  // standard normal samples estimates N(0, 1 + h^2) per axis.
  const double sx = 1.0 + gd.bandwidth_x * gd.bandwidth_x;
  const double sy = 1.0 + gd.bandwidth_y * gd.bandwidth_y;
  const double apeak = 1.0 / (2 * M_PI * std::sqrt(sx * sy));
  double worst = 0;
  for (int gy = 0; gy < 41; ++gy)
    for (int gx = 0; gx < 41; ++gx) {
      const double cy = -5 + (gy + 0.5) * (10.0 / 41);
      const double cx = -5 + (gx + 0.5) * (10.0 / 41);
      const double analytic = apeak * std::exp(-0.5 * (cx * cx / sx + cy * cy / sy));
      worst = std::max(worst, std::abs(gd.at(gy, gx) - analytic));
    }
  CHECK(worst < 0.05 * apeak);
}
