#include "cuot/entropy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cuot {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

inline double xlogx(double t) { return t > 0 ? t * std::log(t) : 0.0; }

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
}  // namespace

std::string to_string(EntropyKind k) {
  switch (k) {
    case EntropyKind::KL: return "kl";
    case EntropyKind::ChiSquared: return "chi2";
    case EntropyKind::Softplus: return "softplus";
    case EntropyKind::Identity: return "identity";
  }
  return "?";
}

EntropyKind entropy_kind_from_string(std::string_view s) {
  if (s == "kl") return EntropyKind::KL;
  if (s == "chi2") return EntropyKind::ChiSquared;
  if (s == "softplus") return EntropyKind::Softplus;
  if (s == "identity") return EntropyKind::Identity;
  throw std::invalid_argument("unknown entropy kind '" + std::string(s) + "'");
}

double EntropyFunction::psi(double t) const {
  if (t < 0) throw std::invalid_argument("psi: t must be >= 0");
  switch (kind) {
    case EntropyKind::KL:
      return alpha * (xlogx(t) - t + 1.0);
    case EntropyKind::ChiSquared:
      return alpha * (t - 1.0) * (t - 1.0);
    case EntropyKind::Softplus:
      if (t > 1.0) return kInf;
      return alpha * (xlogx(t) + xlogx(1.0 - t));
    case EntropyKind::Identity:
      return t == 1.0 ? 0.0 : kInf;
  }
  return kInf;
}

double EntropyFunction::psi_deriv(double t) const {
  switch (kind) {
    case EntropyKind::KL:
      return alpha * std::log(t);
    case EntropyKind::ChiSquared:
      return alpha * 2.0 * (t - 1.0);
    case EntropyKind::Softplus:
      return alpha * (std::log(t) - std::log(1.0 - t));
    case EntropyKind::Identity:
      throw std::domain_error("psi_deriv undefined for identity kind");
  }
  return 0.0;
}

double EntropyFunction::conj(double x) const {
  const double z = x / alpha;
  switch (kind) {
    case EntropyKind::KL:
      return alpha * std::expm1(z);
    case EntropyKind::ChiSquared:
      return z >= -2.0 ? alpha * (0.25 * z * z + z) : -alpha;
    case EntropyKind::Softplus:
      return alpha * (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)));
    case EntropyKind::Identity:
      return x;
  }
  return 0.0;
}

double EntropyFunction::conj_deriv(double x) const {
  const double z = x / alpha;
  switch (kind) {
    case EntropyKind::KL:
      return std::exp(z);
    case EntropyKind::ChiSquared:
      return z >= -2.0 ? 0.5 * z + 1.0 : 0.0;
    case EntropyKind::Softplus:
      return sigmoid(z);
    case EntropyKind::Identity:
      return 1.0;
  }
  return 0.0;
}

double EntropyFunction::fenchel_gap(double t, double x) const {
  const double p = psi(t);
  if (!std::isfinite(p)) throw std::domain_error("fenchel_gap: t outside entropy domain");
  return p + conj(x) - t * x;
}

ad::Tensor EntropyFunction::conj_node(ad::Graph& g, const ad::Tensor& x) const {
  using namespace ad;
  switch (kind) {
    case EntropyKind::KL: {
      Tensor e = exp(g, smul(g, x, 1.0 / alpha));
      return smul(g, add_scalar(g, e, -1.0), alpha);
    }
    case EntropyKind::ChiSquared: {
      Tensor r = relu(g, add_scalar(g, smul(g, x, 1.0 / alpha), 2.0));
      return smul(g, add_scalar(g, smul(g, square(g, r), 0.25), -1.0), alpha);
    }
    case EntropyKind::Softplus:
      return smul(g, softplus(g, smul(g, x, 1.0 / alpha)), alpha);
    case EntropyKind::Identity:
      return smul(g, x, 1.0);
  }
  throw std::logic_error("conj_node: unhandled kind");
}

}  // namespace cuot
