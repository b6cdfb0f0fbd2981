#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cuot::metrics {

// Equal-weight empirical distribution of (y, x) pairs; y is the conditioning
// coordinate, x the data coordinate.
struct Points {
  std::vector<double> y;
  std::vector<double> x;

  size_t size() const { return y.size(); }
  void push_back(double yy, double xx) {
    y.push_back(yy);
    x.push_back(xx);
  }
};

// Exact empirical W2 between equal-sized point sets: sqrt of the mean squared
// Euclidean distance under the optimal bijection (exact assignment).
double w2_exact(const Points& a, const Points& b);

// Exact 1-d W2 between empirical samples of possibly different sizes
// (L2 distance of quantile functions; exact for piecewise-constant CDFs).
double w2_1d(std::vector<double> a, std::vector<double> b);

struct BinnedW2 {
  double value = 0.0;
  std::vector<double> per_bin;
  std::vector<double> bin_mass;
  int skipped_bins = 0;
};

// Conditional W2 with y discretized by quantile bins of b's y-marginal:
// sqrt of the bin-mass-weighted mean of squared within-bin 1-d W2 on x.
// Bins where `a` is empty are skipped (with renormalization) and counted.
BinnedW2 w2_conditional_binned(const Points& a, const Points& b, int bins);

// Mean of w2_exact over `repeats` seeded subsample pairs of size n_sub.
double robust_w2(const Points& generated, const Points& clean_reference, int n_sub,
                 int repeats, uint64_t seed);

struct KdeGrid {
  int res_x = 0, res_y = 0;
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  std::vector<double> density;  // row-major, rows follow the y axis
  double cell_area = 0;
  double bandwidth_x = 0, bandwidth_y = 0;

  double at(int iy, int ix) const { return density[static_cast<size_t>(iy) * res_x + ix]; }
  double mass() const;
};

// Gaussian KDE on a regular grid; bandwidth std::nullopt selects Scott's rule
// (n^(-1/6) * per-axis sigma). A zero bandwidth is rejected.
KdeGrid kde_grid(const Points& samples, double x0, double x1, double y0, double y1,
                 int res_x, int res_y, std::optional<double> bandwidth = std::nullopt);

struct MetricsReport {
  double joint_w2 = 0.0;
  double conditional_w2 = 0.0;
  std::vector<double> per_bin_w2;
  int bins = 0;
  int n_sub = 0;
  int repeats = 0;
  size_t n_generated = 0;
  size_t n_reference = 0;
  // Populated for contaminated datasets only.
  std::optional<double> robust_w2_clean;
  std::optional<double> w2_contaminated_reference;
  uint64_t seed = 0;
  std::string config_fingerprint;
};

}  // namespace cuot::metrics
