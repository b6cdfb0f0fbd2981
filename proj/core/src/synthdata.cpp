#include "cuot/synthdata.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cuot/rng.hpp"

namespace cuot::data {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::Moons: return "moons";
    case DatasetKind::Circles: return "circles";
    case DatasetKind::Swissroll: return "swissroll";
    case DatasetKind::Checkerboard: return "checkerboard";
  }
  return "?";
}

DatasetKind dataset_kind_from_string(std::string_view s) {
  if (s == "moons") return DatasetKind::Moons;
  if (s == "circles") return DatasetKind::Circles;
  if (s == "swissroll") return DatasetKind::Swissroll;
  if (s == "checkerboard") return DatasetKind::Checkerboard;
  throw std::invalid_argument("unknown dataset kind '" + std::string(s) + "'");
}

size_t PairBatch::outlier_count() const {
  size_t c = 0;
  for (auto f : is_outlier) c += f != 0;
  return c;
}

void OutlierSpec::validate() const {
  if (fraction < 0.0 || fraction >= 1.0)
    throw std::invalid_argument("outlier fraction must be in [0,1)");
  if (enabled() && !(0.0 < r_min && r_min < r_max))
    throw std::invalid_argument("outlier annulus requires 0 < r_min < r_max");
}

PairBatch sample_target(DatasetKind kind, int64_t n, double noise, uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("sample_target: n must be > 0");
  Rng rng = Rng(seed).split(to_string(kind));
  PairBatch b;
  b.kind = kind;
  b.y.resize(static_cast<size_t>(n));
  b.x.resize(static_cast<size_t>(n));
  b.is_outlier.assign(static_cast<size_t>(n), 0);

  switch (kind) {
    case DatasetKind::Moons: {
      // Two interleaved half-circles of radius 1; the second is reflected and
      // offset by (1, 0.5).
      const int64_t n_outer = n - n / 2;
      for (int64_t i = 0; i < n; ++i) {
        const double t = rng.uniform(0.0, kPi);
        double px, py;
        if (i < n_outer) {
          px = std::cos(t);
          py = std::sin(t);
        } else {
          px = 1.0 - std::cos(t);
          py = 0.5 - std::sin(t);
        }
        b.y[i] = px + noise * rng.normal();
        b.x[i] = py + noise * rng.normal();
      }
      break;
    }
    case DatasetKind::Circles: {
      // Concentric circles of radius 1.0 and 0.5.
      const int64_t n_outer = n - n / 2;
      for (int64_t i = 0; i < n; ++i) {
        const double t = rng.uniform(0.0, 2.0 * kPi);
        const double r = i < n_outer ? 1.0 : 0.5;
        b.y[i] = r * std::cos(t) + noise * rng.normal();
        b.x[i] = r * std::sin(t) + noise * rng.normal();
      }
      break;
    }
    case DatasetKind::Swissroll: {
      // 2D projection (t cos t, t sin t)/10 with t in [1.5pi, 4.5pi].
      for (int64_t i = 0; i < n; ++i) {
        const double t = 1.5 * kPi * (1.0 + 2.0 * rng.uniform());
        b.y[i] = t * std::cos(t) / 10.0 + noise * rng.normal();
        b.x[i] = t * std::sin(t) / 10.0 + noise * rng.normal();
      }
      break;
    }
    case DatasetKind::Checkerboard: {
      // Uniform over the 8 "on" cells of a 4x4 alternating lattice on
      // [-4,4]^2; noise is not used.
      for (int64_t i = 0; i < n; ++i) {
        const int64_t cell = rng.uniform_int(8);
        int64_t seen = 0;
        int ci = 0, cj = 0;
        for (int a = 0; a < 4 && seen <= cell; ++a)
          for (int bcol = 0; bcol < 4 && seen <= cell; ++bcol)
            if ((a + bcol) % 2 == 0) {
              ci = a;
              cj = bcol;
              ++seen;
            }
        b.y[i] = -4.0 + 2.0 * ci + rng.uniform(0.0, 2.0);
        b.x[i] = -4.0 + 2.0 * cj + rng.uniform(0.0, 2.0);
      }
      break;
    }
  }
  return b;
}

PairBatch make_source(const std::vector<double>& target_y, uint64_t seed) {
  if (target_y.empty()) throw std::invalid_argument("make_source: empty condition array");
  Rng rng = Rng(seed).split("source");
  PairBatch b;
  b.y = target_y;
  b.x.resize(target_y.size());
  b.is_outlier.assign(target_y.size(), 0);
  for (auto& v : b.x) v = rng.normal();
  return b;
}

PairBatch inject_outliers(const PairBatch& batch, const OutlierSpec& spec, uint64_t seed) {
  spec.validate();
  PairBatch out = batch;
  const int64_t n = static_cast<int64_t>(batch.size());
  const int64_t k = static_cast<int64_t>(std::ceil(spec.fraction * static_cast<double>(n)));
  if (k == 0) {
    out.outlier_warning = spec.fraction > 0.0;
    return out;
  }
  Rng rng = Rng(seed).split("outliers");
  auto idx = rng.sample_indices(n, k);
  for (auto i : idx) {
    const double r = rng.uniform(spec.r_min, spec.r_max);
    const double t = rng.uniform(0.0, 2.0 * kPi);
    out.y[i] = r * std::cos(t);
    out.x[i] = r * std::sin(t);
    out.is_outlier[i] = 1;
  }
  return out;
}

StandardizeStats fit_stats_clean(const PairBatch& batch) {
  double sy = 0, sx = 0;
  size_t n = 0;
  for (size_t i = 0; i < batch.size(); ++i) {
    if (batch.is_outlier[i]) continue;
    sy += batch.y[i];
    sx += batch.x[i];
    ++n;
  }
  if (n < 2) throw std::invalid_argument("fit_stats_clean: too few clean rows");
  StandardizeStats s;
  s.mean_y = sy / n;
  s.mean_x = sx / n;
  double vy = 0, vx = 0;
  for (size_t i = 0; i < batch.size(); ++i) {
    if (batch.is_outlier[i]) continue;
    vy += (batch.y[i] - s.mean_y) * (batch.y[i] - s.mean_y);
    vx += (batch.x[i] - s.mean_x) * (batch.x[i] - s.mean_x);
  }
  s.std_y = std::sqrt(vy / (n - 1));
  s.std_x = std::sqrt(vx / (n - 1));
  if (s.std_y <= 0 || s.std_x <= 0)
    throw std::invalid_argument("fit_stats_clean: degenerate coordinate variance");
  return s;
}

void standardize(PairBatch& batch, const StandardizeStats& s) {
  for (auto& v : batch.y) v = (v - s.mean_y) / s.std_y;
  for (auto& v : batch.x) v = (v - s.mean_x) / s.std_x;
}

void unstandardize(PairBatch& batch, const StandardizeStats& s) {
  for (auto& v : batch.y) v = v * s.std_y + s.mean_y;
  for (auto& v : batch.x) v = v * s.std_x + s.mean_x;
}

void write_csv(const std::string& path, const PairBatch& batch) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << "y,x,is_outlier\n";
  char buf[80];
  for (size_t i = 0; i < batch.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n", batch.y[i], batch.x[i],
                  batch.is_outlier[i] ? 1 : 0);
    os << buf;
  }
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

PairBatch read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || line.rfind("y,x,is_outlier", 0) != 0)
    throw std::runtime_error("'" + path + "' is not a y,x,is_outlier CSV");
  PairBatch b;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    double y, x;
    int flag;
    if (!std::getline(ls, field, ',')) break;
    y = std::stod(field);
    if (!std::getline(ls, field, ',')) throw std::runtime_error("malformed row in " + path);
    x = std::stod(field);
    if (!std::getline(ls, field, ',')) throw std::runtime_error("malformed row in " + path);
    flag = std::stoi(field);
    b.y.push_back(y);
    b.x.push_back(x);
    b.is_outlier.push_back(flag ? 1 : 0);
  }
  return b;
}

}  // namespace cuot::data
