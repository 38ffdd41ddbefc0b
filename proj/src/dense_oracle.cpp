#include "fdm/dense_oracle.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "fdm/error.hpp"

namespace fdm {

DenseMatrix dense_solve_oracle(DenseMatrix a, DenseMatrix b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n)
    throw Error(ErrorCode::DimensionMismatch, "dense_solve_oracle: expected square A and matching B");
  const std::size_t k = b.cols();
  const double scale = a.max_abs();

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
    if (!(std::fabs(a(pivot, col)) > 1e-14 * scale))
      throw Error(ErrorCode::SingularMatrix, "dense_solve_oracle: zero pivot in column " + std::to_string(col));
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      for (std::size_t c = 0; c < k; ++c) std::swap(b(col, c), b(pivot, c));
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a(r, col) / a(col, col);
      for (std::size_t c = col; c < n; ++c) a(r, c) -= factor * a(col, c);
      for (std::size_t c = 0; c < k; ++c) b(r, c) -= factor * b(col, c);
    }
  }
  for (std::size_t row = n; row-- > 0;) {
    for (std::size_t c = 0; c < k; ++c) {
      double sum = b(row, c);
      for (std::size_t j = row + 1; j < n; ++j) sum -= a(row, j) * b(j, c);
      b(row, c) = sum / a(row, row);
    }
  }
  return b;
}

}  // namespace fdm
