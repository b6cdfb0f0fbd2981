#include "cuot/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace cuot::nets {

uint64_t ArchConfig::hash() const {
  std::string desc = "cuot-mlp-v1:embed=" + std::to_string(embed_dim) +
                     ":gy=" + std::to_string(kGenYBlocks) +
                     ":gv=" + std::to_string(kGenVBlocks) +
                     ":out=" + std::to_string(kOutBlocks) +
                     ":py=" + std::to_string(kPotBlocks) +
                     ":head=" + std::to_string(kHeadBlocks);
  return fnv1a(desc);
}

namespace {

// Kaiming fan-in scaled normal, truncated at 3 sigma; biases zero.
void fill_kaiming(ParamTensor& t, int64_t fan_in, Rng& rng) {
  const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& w : *t.data) {
    double draw;
    do {
      draw = rng.normal();
    } while (std::abs(draw) >= 3.0);
    w = scale * draw;
  }
}

void add_linear(ParamSet& set, const std::string& name, int64_t in, int64_t out, Rng& rng) {
  auto& w = set.add(name + ".w", {in, out});
  fill_kaiming(w, in, rng);
  set.add(name + ".b", {1, out});  // zeros
}

void add_block(ParamSet& set, const std::string& name, int64_t dim, Rng& rng) {
  add_linear(set, name + ".l1", dim, dim, rng);
  add_linear(set, name + ".l2", dim, dim, rng);
}

// Embedding module: scalar lift to `dim`, then `blocks` residual blocks.
void add_embed(ParamSet& set, const std::string& name, int64_t dim, int64_t blocks, Rng& rng) {
  add_linear(set, name + ".lift", 1, dim, rng);
  for (int64_t b = 0; b < blocks; ++b) add_block(set, name + ".block" + std::to_string(b), dim, rng);
}

int64_t linear_size(int64_t in, int64_t out) { return in * out + out; }
int64_t block_size(int64_t dim) { return 2 * linear_size(dim, dim); }
int64_t embed_size(int64_t dim, int64_t blocks) {
  return linear_size(1, dim) + blocks * block_size(dim);
}

struct Cursor {
  const AttachedParams* p;
  size_t i = 0;
  const ad::Tensor& next() {
    if (i >= p->leaves.size()) throw std::logic_error("parameter cursor overrun");
    return p->leaves[i++];
  }
};

ad::Tensor apply_linear(ad::Graph& g, Cursor& c, const ad::Tensor& h) {
  const ad::Tensor& w = c.next();
  const ad::Tensor& b = c.next();
  return ad::add(g, ad::matmul(g, h, w), b);
}

// Linear -> SiLU -> Linear with an identity skip.
ad::Tensor apply_block(ad::Graph& g, Cursor& c, const ad::Tensor& h) {
  ad::Tensor t = ad::silu(g, apply_linear(g, c, h));
  t = apply_linear(g, c, t);
  return ad::add(g, h, t);
}

ad::Tensor apply_embed(ad::Graph& g, Cursor& c, const ad::Tensor& in, int64_t blocks) {
  ad::Tensor h = apply_linear(g, c, in);
  for (int64_t b = 0; b < blocks; ++b) h = apply_block(g, c, h);
  return h;
}

void check_column(const ad::Tensor& t, const char* what) {
  if (t.shape.size() != 2 || t.shape[1] != 1)
    throw ad::ShapeError(std::string(what) + " must be [M,1], got " + ad::shape_str(t.shape));
}

}  // namespace

GeneratorParams init_generator(const ArchConfig& arch, uint64_t seed) {
  GeneratorParams gp;
  gp.arch = arch;
  Rng rng = Rng(seed).split("generator-init");
  const int64_t e = arch.embed_dim;
  add_embed(gp.params, "gen.y", e, ArchConfig::kGenYBlocks, rng);
  add_embed(gp.params, "gen.v", e, ArchConfig::kGenVBlocks, rng);
  for (int64_t b = 0; b < ArchConfig::kOutBlocks; ++b)
    add_block(gp.params, "gen.out.block" + std::to_string(b), 2 * e, rng);
  add_linear(gp.params, "gen.out.final", 2 * e, 1, rng);
  return gp;
}

PotentialParams init_potential(const ArchConfig& arch, uint64_t seed) {
  PotentialParams pp;
  pp.arch = arch;
  Rng rng = Rng(seed).split("potential-init");
  const int64_t e = arch.embed_dim;
  add_embed(pp.params, "pot.y", e, ArchConfig::kPotBlocks, rng);
  add_embed(pp.params, "pot.x", e, ArchConfig::kPotBlocks, rng);
  for (int64_t b = 0; b < ArchConfig::kHeadBlocks; ++b)
    add_block(pp.params, "pot.head.block" + std::to_string(b), 2 * e, rng);
  add_linear(pp.params, "pot.head.final", 2 * e, 1, rng);
  return pp;
}

int64_t generator_param_count(const ArchConfig& arch) {
  const int64_t e = arch.embed_dim;
  return embed_size(e, ArchConfig::kGenYBlocks) + embed_size(e, ArchConfig::kGenVBlocks) +
         ArchConfig::kOutBlocks * block_size(2 * e) + linear_size(2 * e, 1);
}

int64_t potential_param_count(const ArchConfig& arch) {
  const int64_t e = arch.embed_dim;
  return 2 * embed_size(e, ArchConfig::kPotBlocks) +
         ArchConfig::kHeadBlocks * block_size(2 * e) + linear_size(2 * e, 1);
}

AttachedParams AttachedParams::attach(ad::Graph& g, const ParamSet& set) {
  AttachedParams a;
  a.leaves.reserve(set.tensors.size());
  for (const auto& t : set.tensors) a.leaves.push_back(g.leaf(t.shape, t.data));
  return a;
}

std::vector<int64_t> AttachedParams::node_ids() const {
  std::vector<int64_t> ids;
  ids.reserve(leaves.size());
  for (const auto& l : leaves) ids.push_back(l.node);
  return ids;
}

ad::Tensor generator_forward(ad::Graph& g, const ArchConfig& arch,
                             const AttachedParams& p, const ad::Tensor& y,
                             const ad::Tensor& v, const ad::Tensor& z) {
  check_column(y, "generator y");
  check_column(v, "generator v");
  if (y.shape[0] != v.shape[0])
    throw ad::ShapeError("generator y/v batch mismatch");
  if (z.shape.size() != 2 || z.shape[0] != y.shape[0] || z.shape[1] != arch.z_dim())
    throw ad::ShapeError("generator z must be [M," + std::to_string(arch.z_dim()) +
                         "], got " + ad::shape_str(z.shape));
  Cursor c{&p};
  ad::Tensor ey = apply_embed(g, c, y, ArchConfig::kGenYBlocks);
  ad::Tensor ev = apply_embed(g, c, v, ArchConfig::kGenVBlocks);
  ad::Tensor h = ad::add(g, ad::concat_cols(g, ey, ev), z);
  for (int64_t b = 0; b < ArchConfig::kOutBlocks; ++b) h = apply_block(g, c, h);
  return apply_linear(g, c, h);
}

ad::Tensor potential_forward(ad::Graph& g, const ArchConfig& arch,
                             const AttachedParams& p, const ad::Tensor& y,
                             const ad::Tensor& u) {
  (void)arch;
  check_column(y, "potential y");
  check_column(u, "potential u");
  if (y.shape[0] != u.shape[0])
    throw ad::ShapeError("potential y/u batch mismatch");
  Cursor c{&p};
  ad::Tensor ey = apply_embed(g, c, y, ArchConfig::kPotBlocks);
  ad::Tensor ex = apply_embed(g, c, u, ArchConfig::kPotBlocks);
  ad::Tensor h = ad::concat_cols(g, ey, ex);
  for (int64_t b = 0; b < ArchConfig::kHeadBlocks; ++b) h = apply_block(g, c, h);
  return apply_linear(g, c, h);
}

namespace {
ad::Tensor column(ad::Graph& g, std::span<const double> v) {
  return g.ensure(ad::Tensor({static_cast<int64_t>(v.size()), 1},
                             std::vector<double>(v.begin(), v.end())));
}
}  // namespace

std::vector<double> generator_eval(const GeneratorParams& gp, std::span<const double> y,
                                   std::span<const double> v, std::span<const double> z) {
  ad::Graph g;
  auto attached = AttachedParams::attach(g, gp.params);
  const int64_t m = static_cast<int64_t>(y.size());
  ad::Tensor zt = g.ensure(ad::Tensor({m, gp.arch.z_dim()},
                                      std::vector<double>(z.begin(), z.end())));
  ad::Tensor out = generator_forward(g, gp.arch, attached, column(g, y), column(g, v), zt);
  return *out.data;
}

std::vector<double> potential_eval(const PotentialParams& pp, std::span<const double> y,
                                   std::span<const double> u) {
  ad::Graph g;
  auto attached = AttachedParams::attach(g, pp.params);
  ad::Tensor out = potential_forward(g, pp.arch, attached, column(g, y), column(g, u));
  return *out.data;
}

}  // namespace cuot::nets
