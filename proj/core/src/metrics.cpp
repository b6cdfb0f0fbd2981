#include "cuot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cuot/assignment.hpp"
#include "cuot/rng.hpp"

namespace cuot::metrics {

double w2_exact(const Points& a, const Points& b) {
  if (a.size() != b.size())
    throw std::invalid_argument(
        "w2_exact requires equal sizes (" + std::to_string(a.size()) + " vs " +
        std::to_string(b.size()) + "); subsample the larger set first");
  if (a.size() == 0) throw std::invalid_argument("w2_exact: empty point sets");
  const int n = static_cast<int>(a.size());
  std::vector<double> cost(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double ay = a.y[i], ax = a.x[i];
    for (int j = 0; j < n; ++j) {
      const double dy = ay - b.y[j], dx = ax - b.x[j];
      cost[static_cast<size_t>(i) * n + j] = dy * dy + dx * dx;
    }
  }
  const auto res = solve_assignment(cost, n);
  return std::sqrt(res.total_cost / n);
}

double w2_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("w2_1d: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const size_t n = a.size(), m = b.size();
  // Integrate (Fa^{-1}(q) - Fb^{-1}(q))^2 over q in [0,1]; the quantile
  // functions are constant on [i/n,(i+1)/n) and [j/m,(j+1)/m).
  size_t i = 0, j = 0;
  double q = 0.0, acc = 0.0;
  while (i < n && j < m) {
    const double qa = static_cast<double>(i + 1) / n;
    const double qb = static_cast<double>(j + 1) / m;
    const double qn = std::min(qa, qb);
    const double diff = a[i] - b[j];
    acc += diff * diff * (qn - q);
    q = qn;
    if (qa <= qn) ++i;
    if (qb <= qn) ++j;
  }
  return std::sqrt(acc);
}

BinnedW2 w2_conditional_binned(const Points& a, const Points& b, int bins) {
  if (bins < 1) throw std::invalid_argument("w2_conditional_binned: bins must be >= 1");
  if (a.size() == 0 || b.size() == 0)
    throw std::invalid_argument("w2_conditional_binned: empty distribution");

  // Bin edges at quantiles of b's y-marginal.
  std::vector<double> ys = b.y;
  std::sort(ys.begin(), ys.end());
  std::vector<double> edges(static_cast<size_t>(bins) - 1);
  for (int k = 1; k < bins; ++k) {
    const double q = static_cast<double>(k) / bins;
    const double pos = q * (ys.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const double frac = pos - lo;
    edges[k - 1] = lo + 1 < ys.size() ? ys[lo] * (1 - frac) + ys[lo + 1] * frac : ys[lo];
  }
  auto bin_of = [&](double y) {
    return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), y) - edges.begin());
  };

  std::vector<std::vector<double>> ax(bins), bx(bins);
  for (size_t i = 0; i < a.size(); ++i) ax[bin_of(a.y[i])].push_back(a.x[i]);
  for (size_t i = 0; i < b.size(); ++i) bx[bin_of(b.y[i])].push_back(b.x[i]);

  BinnedW2 out;
  out.per_bin.assign(bins, 0.0);
  out.bin_mass.assign(bins, 0.0);
  double total_mass = 0.0, acc = 0.0;
  for (int k = 0; k < bins; ++k) {
    if (bx[k].empty()) continue;  // unoccupied bin of the reference
    if (ax[k].empty()) {
      ++out.skipped_bins;
      continue;
    }
    const double mass = static_cast<double>(bx[k].size()) / b.size();
    const double w = w2_1d(ax[k], bx[k]);
    out.per_bin[k] = w;
    out.bin_mass[k] = mass;
    acc += mass * w * w;
    total_mass += mass;
  }
  if (total_mass <= 0)
    throw std::invalid_argument("w2_conditional_binned: no bin occupied by both");
  out.value = std::sqrt(acc / total_mass);
  return out;
}

namespace {
Points subsample(const Points& p, int n_sub, Rng& rng) {
  auto idx = rng.sample_indices(static_cast<int64_t>(p.size()), n_sub);
  Points out;
  out.y.reserve(n_sub);
  out.x.reserve(n_sub);
  for (auto i : idx) out.push_back(p.y[i], p.x[i]);
  return out;
}
}  // namespace

double robust_w2(const Points& generated, const Points& clean_reference, int n_sub,
                 int repeats, uint64_t seed) {
  if (repeats < 1) throw std::invalid_argument("robust_w2: repeats must be >= 1");
  if (static_cast<int>(generated.size()) < n_sub ||
      static_cast<int>(clean_reference.size()) < n_sub)
    throw std::invalid_argument("robust_w2: fewer points than n_sub");
  Rng rng(seed);
  double acc = 0.0;
  for (int r = 0; r < repeats; ++r) {
    Rng ra = rng.split(2 * r);
    Rng rb = rng.split(2 * r + 1);
    const Points sa = subsample(generated, n_sub, ra);
    const Points sb = subsample(clean_reference, n_sub, rb);
    acc += w2_exact(sa, sb);
  }
  return acc / repeats;
}

double KdeGrid::mass() const {
  double m = 0.0;
  for (double d : density) m += d;
  return m * cell_area;
}

KdeGrid kde_grid(const Points& samples, double x0, double x1, double y0, double y1,
                 int res_x, int res_y, std::optional<double> bandwidth) {
  if (samples.size() == 0) throw std::invalid_argument("kde_grid: empty sample set");
  if (res_x < 2 || res_y < 2)
    throw std::invalid_argument("kde_grid: resolution must be >= 2 per axis");
  if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("kde_grid: empty extent");

  const size_t n = samples.size();
  double hx, hy;
  if (bandwidth.has_value()) {
    if (*bandwidth <= 0) throw std::invalid_argument("kde_grid: bandwidth must be > 0");
    hx = hy = *bandwidth;
  } else {
    auto sigma = [&](const std::vector<double>& v) {
      double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
      double ss = 0.0;
      for (double t : v) ss += (t - mean) * (t - mean);
      return std::sqrt(ss / std::max<size_t>(1, v.size() - 1));
    };
    const double scott = std::pow(static_cast<double>(n), -1.0 / 6.0);
    hx = std::max(1e-12, sigma(samples.x) * scott);
    hy = std::max(1e-12, sigma(samples.y) * scott);
  }

  KdeGrid grid;
  grid.res_x = res_x;
  grid.res_y = res_y;
  grid.x0 = x0;
  grid.x1 = x1;
  grid.y0 = y0;
  grid.y1 = y1;
  grid.bandwidth_x = hx;
  grid.bandwidth_y = hy;
  const double dx = (x1 - x0) / res_x, dy = (y1 - y0) / res_y;
  grid.cell_area = dx * dy;
  grid.density.assign(static_cast<size_t>(res_x) * res_y, 0.0);

  // Separable kernel: per-sample row/column factors, then an outer product.
  std::vector<double> kx(res_x), ky(res_y);
  const double norm = 1.0 / (2.0 * M_PI * hx * hy * static_cast<double>(n));
  for (size_t s = 0; s < n; ++s) {
    for (int ix = 0; ix < res_x; ++ix) {
      const double cx = x0 + (ix + 0.5) * dx;
      const double t = (cx - samples.x[s]) / hx;
      kx[ix] = std::exp(-0.5 * t * t);
    }
    for (int iy = 0; iy < res_y; ++iy) {
      const double cy = y0 + (iy + 0.5) * dy;
      const double t = (cy - samples.y[s]) / hy;
      ky[iy] = std::exp(-0.5 * t * t);
    }
    for (int iy = 0; iy < res_y; ++iy) {
      double* row = grid.density.data() + static_cast<size_t>(iy) * res_x;
      const double f = ky[iy] * norm;
      for (int ix = 0; ix < res_x; ++ix) row[ix] += f * kx[ix];
    }
  }
  return grid;
}

}  // namespace cuot::metrics
