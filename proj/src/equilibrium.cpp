#include "fdm/equilibrium.hpp"

#include <cmath>
#include <string>

#include "fdm/error.hpp"
#include "fdm/kernels.hpp"

namespace fdm {
namespace {

bool all_finite(std::span<const double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

void scale_rows(DenseMatrix& m, std::span<const double> factors) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (double& v : m.row(i)) v *= factors[i];
}

DenseMatrix edge_vectors(const Connectivity& conn, const DenseMatrix& xyz, std::vector<double>& lengths) {
  DenseMatrix vectors(conn.edge_count(), 3);
  lengths.assign(conn.edge_count(), 0.0);
  kernels::edge_geometry(xyz.values(), conn.edge_start, conn.edge_end, vectors.values(), lengths);
  return vectors;
}

DenseMatrix reactions_from_vectors(const Connectivity& conn, std::span<const double> q, DenseMatrix forces_xyz,
                                   const DenseMatrix& support_loads) {
  scale_rows(forces_xyz, q);
  DenseMatrix r = conn.c_support.multiply_transposed(forces_xyz);
  for (std::size_t i = 0; i < r.size(); ++i) r.values()[i] = support_loads.values()[i] - r.values()[i];
  return r;
}

DenseMatrix select_rows(const DenseMatrix& m, std::span<const Index> rows) {
  DenseMatrix out(rows.size(), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t c = 0; c < m.cols(); ++c) out(k, c) = m(static_cast<std::size_t>(rows[k]), c);
  return out;
}

}  // namespace

Theta make_theta(const FdmNetwork& network, std::vector<double> q) {
  Theta theta{std::move(q), network.loads(), DenseMatrix(network.support_count(), 3)};
  for (std::size_t k = 0; k < network.support_count(); ++k)
    for (std::size_t c = 0; c < 3; ++c)
      theta.support_xyz(k, c) = network.coordinates()(static_cast<std::size_t>(network.supports()[k]), c);
  return theta;
}

void validate_theta(const Connectivity& conn, const Theta& theta) {
  if (theta.q.size() != conn.edge_count())
    throw Error(ErrorCode::DimensionMismatch, "theta has " + std::to_string(theta.q.size()) +
                                                  " force densities for " + std::to_string(conn.edge_count()) +
                                                  " edges");
  if (theta.loads.rows() != conn.vertex_count() || theta.loads.cols() != 3)
    throw Error(ErrorCode::DimensionMismatch, "theta loads must be " + std::to_string(conn.vertex_count()) + " x 3");
  if (theta.support_xyz.rows() != conn.support_count() || theta.support_xyz.cols() != 3)
    throw Error(ErrorCode::DimensionMismatch,
                "theta support coordinates must be " + std::to_string(conn.support_count()) + " x 3");
  if (!all_finite(theta.q) || !all_finite(theta.loads.values()) || !all_finite(theta.support_xyz.values()))
    throw Error(ErrorCode::InvalidArgument, "theta contains non-finite entries");
}

EquilibriumModel::EquilibriumModel(const FdmNetwork& network)
    : conn_(fdm::connectivity(network)), plan_(plan_assembly(conn_)) {}

EquilibriumState EquilibriumModel::solve(const Theta& theta) {
  validate_theta(conn_, theta);
  const std::size_t n = conn_.vertex_count();
  EquilibriumState state;

  if (conn_.free_count() > 0) {
    matrix_ = assemble(plan_, theta.q);
    factorization_ = solver_.factorize(matrix_);

    // b = P_u - C_u^T Q C_s X_s
    DenseMatrix support_part = conn_.c_support.multiply(theta.support_xyz);
    scale_rows(support_part, theta.q);
    DenseMatrix rhs = free_rows(conn_, theta.loads);
    const DenseMatrix coupling = conn_.c_free.multiply_transposed(support_part);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs.values()[i] -= coupling.values()[i];
    state.free_xyz = factorization_.solve(rhs);
  } else {
    matrix_ = plan_.pattern;
    factorization_ = Factorization{};
    state.free_xyz = DenseMatrix(0, 3);
  }

  state.xyz = DenseMatrix(n, 3);
  for (std::size_t k = 0; k < conn_.free_count(); ++k)
    for (std::size_t c = 0; c < 3; ++c)
      state.xyz(static_cast<std::size_t>(conn_.free_vertices[k]), c) = state.free_xyz(k, c);
  for (std::size_t k = 0; k < conn_.support_count(); ++k)
    for (std::size_t c = 0; c < 3; ++c)
      state.xyz(static_cast<std::size_t>(conn_.support_vertices[k]), c) = theta.support_xyz(k, c);

  state.edge_vectors = edge_vectors(conn_, state.xyz, state.lengths);
  state.reactions = reactions_from_vectors(conn_, theta.q, state.edge_vectors, support_rows(conn_, theta.loads));
  state.forces = member_forces(theta.q, state.lengths);
  return state;
}

EquilibriumState fdm_solve(const FdmNetwork& network, const Theta& theta) {
  EquilibriumModel model(network);
  return model.solve(theta);
}

std::vector<double> edge_lengths(const Connectivity& conn, const DenseMatrix& xyz) {
  if (xyz.rows() != conn.vertex_count() || xyz.cols() != 3)
    throw Error(ErrorCode::DimensionMismatch, "edge_lengths: coordinates must be " +
                                                  std::to_string(conn.vertex_count()) + " x 3");
  std::vector<double> lengths;
  edge_vectors(conn, xyz, lengths);
  return lengths;
}

DenseMatrix reactions(const Connectivity& conn, std::span<const double> q, const DenseMatrix& xyz,
                      const DenseMatrix& support_loads) {
  if (q.size() != conn.edge_count() || support_loads.rows() != conn.support_count())
    throw Error(ErrorCode::DimensionMismatch, "reactions: argument sizes do not match the network");
  return reactions_from_vectors(conn, q, conn.c.multiply(xyz), support_loads);
}

std::vector<double> member_forces(std::span<const double> q, std::span<const double> lengths) {
  if (q.size() != lengths.size())
    throw Error(ErrorCode::DimensionMismatch, "member_forces: q and lengths differ in size");
  std::vector<double> t(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) t[i] = q[i] * lengths[i];
  return t;
}

DenseMatrix free_rows(const Connectivity& conn, const DenseMatrix& loads) {
  return select_rows(loads, conn.free_vertices);
}

DenseMatrix support_rows(const Connectivity& conn, const DenseMatrix& loads) {
  return select_rows(loads, conn.support_vertices);
}

double free_residual(const Connectivity& conn, std::span<const double> q, const DenseMatrix& xyz,
                     const DenseMatrix& loads) {
  DenseMatrix cx = conn.c.multiply(xyz);
  scale_rows(cx, q);
  const DenseMatrix internal = conn.c_free.multiply_transposed(cx);
  const DenseMatrix external = free_rows(conn, loads);
  double worst = 0.0;
  for (std::size_t i = 0; i < internal.size(); ++i)
    worst = std::fmax(worst, std::fabs(internal.values()[i] - external.values()[i]));
  return worst;
}

}  // namespace fdm
