#pragma once

#include <span>
#include <vector>

#include "fdm/matrix.hpp"
#include "fdm/network.hpp"
#include "fdm/sparse.hpp"

namespace fdm {

/// Design parameters: force densities per edge, loads on every vertex (n x 3)
/// and support coordinates (n_s x 3, rows in ascending support id order).
struct Theta {
  std::vector<double> q;
  DenseMatrix loads;
  DenseMatrix support_xyz;

  friend bool operator==(const Theta&, const Theta&) = default;
};

/// Theta with the network's own loads and support coordinates.
Theta make_theta(const FdmNetwork& network, std::vector<double> q);
/// Throws DimensionMismatch or InvalidArgument (non-finite entries).
void validate_theta(const Connectivity& conn, const Theta& theta);

struct EquilibriumState {
  DenseMatrix free_xyz;      // n_u x 3, ascending free id order
  DenseMatrix xyz;           // n x 3, global vertex order
  DenseMatrix reactions;     // n_s x 3, ascending support id order
  std::vector<double> forces;
  std::vector<double> lengths;
  DenseMatrix edge_vectors;  // C X, m x 3
};

/// Forward solver bound to one network. Keeps the assembly plan and the
/// symbolic factorization alive so repeated solves only refactorize numerically.
class EquilibriumModel {
 public:
  explicit EquilibriumModel(const FdmNetwork& network);

  const Connectivity& connectivity() const noexcept { return conn_; }
  const AssemblyPlan& plan() const noexcept { return plan_; }

  /// Throws SingularMatrix when C_u^T Q C_u cannot be factorized.
  EquilibriumState solve(const Theta& theta);

  /// Coefficient matrix and factorization of the most recent solve.
  const SparseMatrix& coefficient_matrix() const noexcept { return matrix_; }
  const Factorization& factorization() const noexcept { return factorization_; }
  std::size_t symbolic_analyses() const noexcept { return solver_.symbolic_analyses(); }

 private:
  Connectivity conn_;
  AssemblyPlan plan_;
  SparseLdlt solver_;
  SparseMatrix matrix_;
  Factorization factorization_;
};

EquilibriumState fdm_solve(const FdmNetwork& network, const Theta& theta);

std::vector<double> edge_lengths(const Connectivity& conn, const DenseMatrix& xyz);

/// R_s = P_s - C_s^T Q C X.
DenseMatrix reactions(const Connectivity& conn, std::span<const double> q, const DenseMatrix& xyz,
                      const DenseMatrix& support_loads);

std::vector<double> member_forces(std::span<const double> q, std::span<const double> lengths);

/// Rows of `loads` (n x 3) belonging to free or supported vertices.
DenseMatrix free_rows(const Connectivity& conn, const DenseMatrix& loads);
DenseMatrix support_rows(const Connectivity& conn, const DenseMatrix& loads);

/// ||C_u^T Q C X - P_u||_inf, the out-of-balance force at free vertices.
double free_residual(const Connectivity& conn, std::span<const double> q, const DenseMatrix& xyz,
                     const DenseMatrix& loads);

}  // namespace fdm
