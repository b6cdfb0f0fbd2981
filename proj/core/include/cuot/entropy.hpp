#pragma once

#include <string>
#include <string_view>

#include "cuot/tensor.hpp"

namespace cuot {

enum class EntropyKind { KL, ChiSquared, Softplus, Identity };

std::string to_string(EntropyKind k);
EntropyKind entropy_kind_from_string(std::string_view s);

// A Csiszar entropy Psi with its convex conjugate and the alpha-scaling rule
// (alpha*Psi)^*(x) = alpha * Psi^*(x / alpha). The Identity kind realizes the
// plain conditional OT baseline (Psi^*(x) = x) and is exempt from the entropy
// invariants.
struct EntropyFunction {
  EntropyKind kind = EntropyKind::KL;
  double alpha = 1.0;

  // alpha * Psi(t). Returns +inf outside the domain; throws for t < 0.
  double psi(double t) const;

  // Derivative of alpha * Psi at an interior point of the domain.
  double psi_deriv(double t) const;

  // Conjugate of the alpha-scaled entropy, alpha * Psi^*(x / alpha).
  double conj(double x) const;

  // Derivative of the alpha-scaled conjugate, Psi^*'(x / alpha).
  double conj_deriv(double x) const;

  // Fenchel-Young gap psi(t) + conj(x) - t*x (>= 0). Throws if psi(t) = +inf.
  double fenchel_gap(double t, double x) const;

  // Graph-recorded conjugate, for use inside differentiable losses.
  ad::Tensor conj_node(ad::Graph& g, const ad::Tensor& x) const;

  bool strictly_convex() const {
    return kind == EntropyKind::KL || kind == EntropyKind::ChiSquared ||
           kind == EntropyKind::Softplus;
  }
};

}  // namespace cuot
