#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cuot::data {

enum class DatasetKind { Moons, Circles, Swissroll, Checkerboard };

std::string to_string(DatasetKind k);
DatasetKind dataset_kind_from_string(std::string_view s);

// Aligned (condition y, datum x) pairs. For target batches x holds u, for
// source batches x holds v. The first joint coordinate is always y.
struct PairBatch {
  DatasetKind kind = DatasetKind::Circles;
  std::vector<double> y;
  std::vector<double> x;
  std::vector<uint8_t> is_outlier;
  bool outlier_warning = false;  // set when a requested fraction rounded to zero

  size_t size() const { return y.size(); }
  size_t outlier_count() const;
};

struct OutlierSpec {
  double fraction = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;

  bool enabled() const { return fraction > 0.0; }
  void validate() const;
};

struct StandardizeStats {
  double mean_y = 0.0, std_y = 1.0;
  double mean_x = 0.0, std_x = 1.0;
};

// n joint samples of the 2D target distribution; first coordinate stored as
// y, second as x. Deterministic per seed.
PairBatch sample_target(DatasetKind kind, int64_t n, double noise, uint64_t seed);

// Product-measure source: y copied from the target batch (so the conditioning
// marginals agree exactly), v standard normal.
PairBatch make_source(const std::vector<double>& target_y, uint64_t seed);

// Replaces ceil(fraction*n) points with draws from the annulus
// {r in [r_min, r_max], angle uniform} centered at the origin of the
// unstandardized frame. Replaced points are flagged.
PairBatch inject_outliers(const PairBatch& batch, const OutlierSpec& spec, uint64_t seed);

// Per-coordinate mean/std over non-flagged rows.
StandardizeStats fit_stats_clean(const PairBatch& batch);
void standardize(PairBatch& batch, const StandardizeStats& s);
void unstandardize(PairBatch& batch, const StandardizeStats& s);

void write_csv(const std::string& path, const PairBatch& batch);
PairBatch read_csv(const std::string& path);

}  // namespace cuot::data
