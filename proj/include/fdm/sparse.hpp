#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "fdm/matrix.hpp"

namespace fdm {

struct Connectivity;

/// Compressed sparse row matrix. Column indices are strictly increasing per row.
struct SparseMatrix {
  Index rows = 0;
  Index cols = 0;
  std::vector<Index> row_offsets{0};
  std::vector<Index> col_indices;
  std::vector<double> values;

  std::size_t nonzeros() const noexcept { return col_indices.size(); }
  bool same_pattern(const SparseMatrix& other) const noexcept;
  /// Stored value at (r, c), or 0 when (r, c) is outside the pattern.
  double at(Index r, Index c) const;
  DenseMatrix to_dense() const;
  /// Returns this * x for a dense x with `cols` rows.
  DenseMatrix multiply(const DenseMatrix& x) const;
  /// Returns this^T * x for a dense x with `rows` rows.
  DenseMatrix multiply_transposed(const DenseMatrix& x) const;
  /// Max absolute row sum.
  double norm_inf() const noexcept;
};

/// Fixed pattern of A = C_u^T Q C_u plus, for every stored entry, the signed
/// edge contributions that make up its value. Depends on connectivity only.
struct AssemblyPlan {
  SparseMatrix pattern;                 // values all zero
  std::vector<Index> entry_offsets;     // per stored entry, into entry_edges
  std::vector<Index> entry_edges;
  std::vector<signed char> entry_signs;
  std::size_t edge_count = 0;
};

AssemblyPlan plan_assembly(const Connectivity& conn);

/// Values of A for force densities q, on the plan's pattern.
SparseMatrix assemble(const AssemblyPlan& plan, std::span<const double> q);

class SymbolicLdlt;
class NumericLdlt;

/// Numeric factorization of a symmetric matrix; cheap to copy, immutable.
class Factorization {
 public:
  Factorization() = default;

  std::size_t size() const noexcept { return size_; }
  /// Solves A X = B for all columns of B.
  DenseMatrix solve(const DenseMatrix& rhs) const;
  /// True when the factorization fell back to pivoted sparse LU.
  bool used_lu_fallback() const noexcept { return lu_ != nullptr; }
  /// Stored off-diagonal entries of L (0 after an LU fallback).
  std::size_t factor_nonzeros() const noexcept;

 private:
  friend class SparseLdlt;
  struct LuImpl;

  std::size_t size_ = 0;
  std::shared_ptr<const SymbolicLdlt> symbolic_;
  std::shared_ptr<const NumericLdlt> numeric_;
  std::shared_ptr<const LuImpl> lu_;
};

/// Sparse LDL^T with a fill-reducing ordering that is computed once per pattern
/// and reused by every later factorization of a matrix with the same pattern.
/// If a pivot vanishes under the static ordering, the matrix is refactorized by
/// pivoted sparse LU; only when that also fails is SingularMatrix raised.
class SparseLdlt {
 public:
  Factorization factorize(const SparseMatrix& a);

  /// Number of times the ordering and elimination tree were computed.
  std::size_t symbolic_analyses() const noexcept { return symbolic_analyses_; }

 private:
  std::shared_ptr<const SymbolicLdlt> symbolic_;
  SparseMatrix cached_pattern_;
  std::size_t symbolic_analyses_ = 0;
};

/// One-shot factorization without pattern caching.
Factorization factorize(const SparseMatrix& a);

/// Throws DimensionMismatch if B's row count differs from the factorized size.
DenseMatrix solve(const Factorization& fact, const DenseMatrix& rhs);

}  // namespace fdm
