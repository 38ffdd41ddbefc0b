#include "fdm/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fdm/error.hpp"

namespace fdm {

std::vector<double> ThetaGradient::flatten() const {
  std::vector<double> flat(q);
  flat.insert(flat.end(), loads.values().begin(), loads.values().end());
  flat.insert(flat.end(), support_xyz.values().begin(), support_xyz.values().end());
  return flat;
}

ThetaGradient backward(const Connectivity& conn, const Theta& theta, const EquilibriumState& state,
                       const StateGradient& sgrad, const Factorization& fact) {
  const std::size_t m = conn.edge_count();
  const DenseMatrix& vectors = state.edge_vectors;

  ThetaGradient grad{std::vector<double>(m, 0.0), DenseMatrix(conn.vertex_count(), 3),
                     DenseMatrix(conn.support_count(), 3)};
  DenseMatrix vector_grad(m, 3);

  // t = q * l and l = |C X| rows.
  for (std::size_t i = 0; i < m; ++i) {
    const double dt = sgrad.forces[i];
    const double dl = sgrad.lengths[i];
    grad.q[i] += dt * state.lengths[i];
    const double through_force = dt * theta.q[i];
    if (dl == 0.0 && through_force == 0.0) continue;
    if (state.lengths[i] == 0.0)
      throw Error(ErrorCode::ZeroLengthEdge,
                  "edge " + std::to_string(i) + " has zero length but the loss depends on its length");
    const double scale = (dl + through_force) / state.lengths[i];
    for (std::size_t c = 0; c < 3; ++c) vector_grad(i, c) += scale * vectors(i, c);
  }

  // R_s = P_s - C_s^T Q C X.
  if (!sgrad.reactions.empty() && sgrad.reactions.max_abs() != 0.0) {
    const DenseMatrix spread = conn.c_support.multiply(sgrad.reactions);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < 3; ++c) {
        grad.q[i] -= spread(i, c) * vectors(i, c);
        vector_grad(i, c) -= theta.q[i] * spread(i, c);
      }
    for (std::size_t k = 0; k < conn.support_count(); ++k)
      for (std::size_t c = 0; c < 3; ++c)
        grad.loads(static_cast<std::size_t>(conn.support_vertices[k]), c) += sgrad.reactions(k, c);
  }

  DenseMatrix xyz_grad = conn.c.multiply_transposed(vector_grad);
  for (std::size_t i = 0; i < xyz_grad.size(); ++i) xyz_grad.values()[i] += sgrad.xyz.values()[i];

  for (std::size_t k = 0; k < conn.support_count(); ++k)
    for (std::size_t c = 0; c < 3; ++c)
      grad.support_xyz(k, c) = xyz_grad(static_cast<std::size_t>(conn.support_vertices[k]), c);

  if (conn.free_count() == 0) return grad;

  // Adjoint solve: A lambda = dL/dX_u, A symmetric.
  const DenseMatrix lambda = fact.solve(free_rows(conn, xyz_grad));
  DenseMatrix spread = conn.c_free.multiply(lambda);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t c = 0; c < 3; ++c) grad.q[i] -= spread(i, c) * vectors(i, c);

  for (std::size_t k = 0; k < conn.free_count(); ++k)
    for (std::size_t c = 0; c < 3; ++c) grad.loads(static_cast<std::size_t>(conn.free_vertices[k]), c) += lambda(k, c);

  for (std::size_t i = 0; i < m; ++i)
    for (double& v : spread.row(i)) v *= theta.q[i];
  const DenseMatrix support_pull = conn.c_support.multiply_transposed(spread);
  for (std::size_t i = 0; i < support_pull.size(); ++i) grad.support_xyz.values()[i] -= support_pull.values()[i];
  return grad;
}

LossAndGradient value_and_grad(EquilibriumModel& model, const Theta& theta, const LossSpec& spec) {
  LossAndGradient out;
  out.state = model.solve(theta);
  out.loss = eval_loss(spec, out.state);
  const StateGradient sgrad = loss_state_gradient(spec, out.state);
  out.gradient = backward(model.connectivity(), theta, out.state, sgrad, model.factorization());
  return out;
}

ThetaGradient finite_difference_gradient(const FdmNetwork& network, const Theta& theta, const LossSpec& spec,
                                         double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  EquilibriumModel model(network);
  const auto& conn = model.connectivity();
  validate_theta(conn, theta);
  validate_loss(spec, conn.vertex_count(), conn.edge_count());

  Theta probe = theta;
  const auto central = [&](double& entry) {
    const double original = entry;
    const double step = h * std::max(1.0, std::fabs(original));
    entry = original + step;
    const double up = eval_loss(spec, model.solve(probe));
    entry = original - step;
    const double down = eval_loss(spec, model.solve(probe));
    entry = original;
    return (up - down) / (2.0 * step);
  };

  ThetaGradient grad{std::vector<double>(theta.q.size()), DenseMatrix(theta.loads.rows(), 3),
                     DenseMatrix(theta.support_xyz.rows(), 3)};
  for (std::size_t i = 0; i < probe.q.size(); ++i) grad.q[i] = central(probe.q[i]);
  for (std::size_t i = 0; i < probe.loads.size(); ++i) grad.loads.values()[i] = central(probe.loads.values()[i]);
  for (std::size_t i = 0; i < probe.support_xyz.size(); ++i)
    grad.support_xyz.values()[i] = central(probe.support_xyz.values()[i]);
  return grad;
}

GradientComparison compare_gradients(const ThetaGradient& analytic, const ThetaGradient& reference, double rel_tol,
                                     double abs_tol) {
  const auto a = analytic.flatten();
  const auto b = reference.flatten();
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "gradients differ in size");
  GradientComparison result;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = std::fabs(a[k] - b[k]);
    result.max_absolute_error = std::max(result.max_absolute_error, diff);
    if (diff <= abs_tol) continue;
    const double rel = diff / std::max(std::fabs(a[k]), std::fabs(b[k]));
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_component = k;
    }
    if (!(rel <= rel_tol)) ++result.failures;
  }
  return result;
}

}  // namespace fdm
