#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cuot {

// xoshiro256++ seeded through splitmix64. Child streams are derived by
// hashing a tag into the parent seed, so every module can own an
// independent, reproducible stream from one experiment seed.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer in [0, n). Requires n > 0.
  int64_t uniform_int(int64_t n);

  // Standard normal via Box-Muller (two uniforms per draw, no cached spare,
  // so the stream position is a pure function of the number of calls).
  double normal();
  double normal(double mean, double stddev);

  void fill_normal(std::vector<double>& out);

  // Independent child stream identified by a tag.
  Rng split(uint64_t tag) const;
  Rng split(std::string_view tag) const;

  // Partial Fisher-Yates: k distinct indices drawn from [0, n).
  std::vector<int64_t> sample_indices(int64_t n, int64_t k);
  void shuffle(std::vector<int64_t>& v);

  std::array<uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<uint64_t, 4>& s) { s_ = s; }
  std::string serialize() const;
  static Rng deserialize(const std::string& text);

 private:
  std::array<uint64_t, 4> s_{};
  uint64_t seed_ = 0;
};

uint64_t splitmix64(uint64_t& state);

// FNV-1a, used for stream tags and config fingerprints.
uint64_t fnv1a(std::string_view bytes, uint64_t basis = 1469598103934665603ull);

}  // namespace cuot
