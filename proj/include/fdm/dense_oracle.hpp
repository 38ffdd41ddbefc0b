#pragma once

#include "fdm/matrix.hpp"

namespace fdm {

/// Reference solve of A X = B by dense Gaussian elimination with partial
/// pivoting. O(n^3); for cross-checking the sparse path in tests.
/// Throws SingularMatrix or DimensionMismatch.
DenseMatrix dense_solve_oracle(DenseMatrix a, DenseMatrix b);

}  // namespace fdm
