#pragma once

#include <vector>

#include "fdm/equilibrium.hpp"
#include "fdm/goals.hpp"

namespace fdm {

/// Gradient of the loss with respect to each block of Theta.
struct ThetaGradient {
  std::vector<double> q;
  DenseMatrix loads;        // n x 3
  DenseMatrix support_xyz;  // n_s x 3

  /// q, then loads, then support_xyz, row-major.
  std::vector<double> flatten() const;
};

/// Exact gradient of the loss with respect to theta, given the cotangent of the
/// equilibrium state. Pulls the state cotangent back through the edge lengths,
/// member forces and reactions in closed form, then through the linear solve
/// for the free coordinates with one adjoint solve that reuses `fact`.
///
/// `state` must come from solving `theta` and `fact` must factorize the same
/// coefficient matrix. Throws ZeroLengthEdge if a length-dependent cotangent is
/// nonzero on an edge of zero length.
ThetaGradient backward(const Connectivity& conn, const Theta& theta, const EquilibriumState& state,
                       const StateGradient& sgrad, const Factorization& fact);

struct LossAndGradient {
  double loss = 0.0;
  EquilibriumState state;
  ThetaGradient gradient;
};

/// Forward solve, loss and backward pass in one call.
LossAndGradient value_and_grad(EquilibriumModel& model, const Theta& theta, const LossSpec& spec);

/// Central differences of the loss over every entry of theta. The step for
/// entry j is h * max(1, |theta_j|).
ThetaGradient finite_difference_gradient(const FdmNetwork& network, const Theta& theta, const LossSpec& spec,
                                         double h = 1e-6);

struct GradientComparison {
  double max_relative_error = 0.0;  // over components outside the absolute floor
  double max_absolute_error = 0.0;
  std::size_t worst_component = 0;
  std::size_t failures = 0;

  bool passed() const noexcept { return failures == 0; }
};

/// Component passes if |a - b| <= abs_tol or |a - b| / max(|a|, |b|) <= rel_tol.
GradientComparison compare_gradients(const ThetaGradient& analytic, const ThetaGradient& reference,
                                     double rel_tol = 1e-5, double abs_tol = 1e-8);

}  // namespace fdm
