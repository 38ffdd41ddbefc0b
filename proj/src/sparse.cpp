#include "fdm/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "fdm/error.hpp"
#include "fdm/network.hpp"

namespace fdm {

// ---------------------------------------------------------------------------
// SparseMatrix

bool SparseMatrix::same_pattern(const SparseMatrix& other) const noexcept {
  return rows == other.rows && cols == other.cols && row_offsets == other.row_offsets &&
         col_indices == other.col_indices;
}

double SparseMatrix::at(Index r, Index c) const {
  const auto first = col_indices.begin() + row_offsets[static_cast<std::size_t>(r)];
  const auto last = col_indices.begin() + row_offsets[static_cast<std::size_t>(r) + 1];
  const auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return 0.0;
  return values[static_cast<std::size_t>(it - col_indices.begin())];
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (Index r = 0; r < rows; ++r)
    for (Index p = row_offsets[r]; p < row_offsets[r + 1]; ++p) d(r, col_indices[p]) += values[p];
  return d;
}

DenseMatrix SparseMatrix::multiply(const DenseMatrix& x) const {
  if (x.rows() != static_cast<std::size_t>(cols))
    throw Error(ErrorCode::DimensionMismatch, "multiply: operand has " + std::to_string(x.rows()) + " rows, expected " +
                                                  std::to_string(cols));
  DenseMatrix y(static_cast<std::size_t>(rows), x.cols());
  for (Index r = 0; r < rows; ++r)
    for (Index p = row_offsets[r]; p < row_offsets[r + 1]; ++p)
      for (std::size_t k = 0; k < x.cols(); ++k) y(r, k) += values[p] * x(col_indices[p], k);
  return y;
}

DenseMatrix SparseMatrix::multiply_transposed(const DenseMatrix& x) const {
  if (x.rows() != static_cast<std::size_t>(rows))
    throw Error(ErrorCode::DimensionMismatch, "multiply_transposed: operand has " + std::to_string(x.rows()) +
                                                  " rows, expected " + std::to_string(rows));
  DenseMatrix y(static_cast<std::size_t>(cols), x.cols());
  for (Index r = 0; r < rows; ++r)
    for (Index p = row_offsets[r]; p < row_offsets[r + 1]; ++p)
      for (std::size_t k = 0; k < x.cols(); ++k) y(col_indices[p], k) += values[p] * x(r, k);
  return y;
}

double SparseMatrix::norm_inf() const noexcept {
  double norm = 0.0;
  for (Index r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (Index p = row_offsets[r]; p < row_offsets[r + 1]; ++p) sum += std::fabs(values[p]);
    norm = std::max(norm, sum);
  }
  return norm;
}

// ---------------------------------------------------------------------------
// Assembly

AssemblyPlan plan_assembly(const Connectivity& conn) {
  struct Contribution {
    Index row, col, edge;
    signed char sign;
  };
  std::vector<Contribution> contributions;
  contributions.reserve(4 * conn.edge_count());
  for (std::size_t i = 0; i < conn.edge_count(); ++i) {
    const auto e = static_cast<Index>(i);
    const auto a = static_cast<std::size_t>(conn.edge_start[i]);
    const auto b = static_cast<std::size_t>(conn.edge_end[i]);
    const bool a_free = !conn.is_support[a];
    const bool b_free = !conn.is_support[b];
    const Index ja = conn.block_position[a];
    const Index jb = conn.block_position[b];
    if (a_free) contributions.push_back({ja, ja, e, +1});
    if (b_free) contributions.push_back({jb, jb, e, +1});
    if (a_free && b_free) {
      contributions.push_back({ja, jb, e, -1});
      contributions.push_back({jb, ja, e, -1});
    }
  }
  std::sort(contributions.begin(), contributions.end(), [](const Contribution& x, const Contribution& y) {
    return std::tie(x.row, x.col, x.edge) < std::tie(y.row, y.col, y.edge);
  });

  AssemblyPlan plan;
  plan.edge_count = conn.edge_count();
  const auto n = static_cast<Index>(conn.free_count());
  plan.pattern.rows = n;
  plan.pattern.cols = n;
  plan.pattern.row_offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  plan.entry_offsets.push_back(0);
  for (std::size_t k = 0; k < contributions.size(); ++k) {
    const auto& c = contributions[k];
    const bool new_entry =
        k == 0 || c.row != contributions[k - 1].row || c.col != contributions[k - 1].col;
    if (new_entry) {
      if (k != 0) plan.entry_offsets.push_back(static_cast<Index>(plan.entry_edges.size()));
      plan.pattern.col_indices.push_back(c.col);
      ++plan.pattern.row_offsets[static_cast<std::size_t>(c.row) + 1];
    }
    plan.entry_edges.push_back(c.edge);
    plan.entry_signs.push_back(c.sign);
  }
  if (!contributions.empty()) plan.entry_offsets.push_back(static_cast<Index>(plan.entry_edges.size()));
  for (std::size_t r = 0; r < static_cast<std::size_t>(n); ++r)
    plan.pattern.row_offsets[r + 1] += plan.pattern.row_offsets[r];
  plan.pattern.values.assign(plan.pattern.col_indices.size(), 0.0);
  return plan;
}

SparseMatrix assemble(const AssemblyPlan& plan, std::span<const double> q) {
  if (q.size() != plan.edge_count)
    throw Error(ErrorCode::DimensionMismatch, "assemble: expected " + std::to_string(plan.edge_count) +
                                                  " force densities, got " + std::to_string(q.size()));
  SparseMatrix a = plan.pattern;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    double sum = 0.0;
    for (Index p = plan.entry_offsets[k]; p < plan.entry_offsets[k + 1]; ++p)
      sum += plan.entry_signs[p] * q[static_cast<std::size_t>(plan.entry_edges[p])];
    a.values[k] = sum;
  }
  return a;
}

// ---------------------------------------------------------------------------
// LDL^T

class SymbolicLdlt {
 public:
  std::size_t n = 0;
  std::vector<Index> perm;      // new index -> original index
  std::vector<Index> inv_perm;  // original index -> new index
  std::vector<Index> parent;    // elimination tree
  std::vector<Index> col_offsets;
};

class NumericLdlt {
 public:
  std::vector<Index> row_indices;
  std::vector<double> lower;
  std::vector<double> diagonal;
};

struct Factorization::LuImpl {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

namespace {

Eigen::SparseMatrix<double> to_eigen(const SparseMatrix& a) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(a.nonzeros());
  for (Index r = 0; r < a.rows; ++r)
    for (Index p = a.row_offsets[r]; p < a.row_offsets[r + 1]; ++p)
      triplets.emplace_back(r, a.col_indices[p], a.values.empty() ? 1.0 : a.values[p]);
  Eigen::SparseMatrix<double> m(a.rows, a.cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

std::shared_ptr<const SymbolicLdlt> analyze(const SparseMatrix& a) {
  auto s = std::make_shared<SymbolicLdlt>();
  const auto n = static_cast<std::size_t>(a.rows);
  s->n = n;
  s->col_offsets.assign(n + 1, 0);
  if (n == 0) return s;

  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> ordering;
  Eigen::AMDOrdering<int> amd;
  amd(to_eigen(a), ordering);
  // Eigen returns the new->old map (SimplicialLDLT inverts it before use).
  s->perm.assign(ordering.indices().data(), ordering.indices().data() + n);
  s->inv_perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) s->inv_perm[static_cast<std::size_t>(s->perm[i])] = static_cast<Index>(i);

  s->parent.assign(n, -1);
  std::vector<Index> flag(n), counts(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    flag[k] = static_cast<Index>(k);
    const Index kk = s->perm[k];
    for (Index p = a.row_offsets[kk]; p < a.row_offsets[kk + 1]; ++p) {
      auto i = s->inv_perm[static_cast<std::size_t>(a.col_indices[p])];
      if (static_cast<std::size_t>(i) >= k) continue;
      for (; flag[i] != static_cast<Index>(k); i = s->parent[i]) {
        if (s->parent[i] == -1) s->parent[i] = static_cast<Index>(k);
        ++counts[i];
        flag[i] = static_cast<Index>(k);
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) s->col_offsets[k + 1] = s->col_offsets[k] + counts[k];
  return s;
}

// Up-looking numeric factorization. Returns nullptr on a vanishing pivot.
std::shared_ptr<const NumericLdlt> factor_numeric(const SymbolicLdlt& s, const SparseMatrix& a) {
  const std::size_t n = s.n;
  auto f = std::make_shared<NumericLdlt>();
  f->row_indices.resize(static_cast<std::size_t>(s.col_offsets[n]));
  f->lower.resize(f->row_indices.size());
  f->diagonal.resize(n);

  const double tolerance = 1e-14 * a.norm_inf();
  std::vector<double> y(n, 0.0);
  std::vector<Index> pattern(n), flag(n), filled(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t top = n;
    flag[k] = static_cast<Index>(k);
    const Index kk = s.perm[k];
    for (Index p = a.row_offsets[kk]; p < a.row_offsets[kk + 1]; ++p) {
      auto i = s.inv_perm[static_cast<std::size_t>(a.col_indices[p])];
      if (static_cast<std::size_t>(i) > k) continue;
      y[i] += a.values[p];
      std::size_t len = 0;
      for (; flag[i] != static_cast<Index>(k); i = s.parent[i]) {
        pattern[len++] = i;
        flag[i] = static_cast<Index>(k);
      }
      while (len > 0) pattern[--top] = pattern[--len];
    }
    double d = y[k];
    y[k] = 0.0;
    for (; top < n; ++top) {
      const auto i = static_cast<std::size_t>(pattern[top]);
      const double yi = y[i];
      y[i] = 0.0;
      const auto first = static_cast<std::size_t>(s.col_offsets[i]);
      const auto last = first + static_cast<std::size_t>(filled[i]);
      for (std::size_t p = first; p < last; ++p) y[static_cast<std::size_t>(f->row_indices[p])] -= f->lower[p] * yi;
      const double lki = yi / f->diagonal[i];
      d -= lki * yi;
      f->row_indices[last] = static_cast<Index>(k);
      f->lower[last] = lki;
      ++filled[i];
    }
    if (!std::isfinite(d) || std::fabs(d) <= tolerance) return nullptr;
    f->diagonal[k] = d;
  }
  return f;
}

}  // namespace

Factorization SparseLdlt::factorize(const SparseMatrix& a) {
  if (a.rows != a.cols)
    throw Error(ErrorCode::DimensionMismatch, "factorize: matrix is " + std::to_string(a.rows) + " x " +
                                                  std::to_string(a.cols));
  if (!symbolic_ || !a.same_pattern(cached_pattern_)) {
    symbolic_ = analyze(a);
    cached_pattern_ = a;
    cached_pattern_.values.clear();
    ++symbolic_analyses_;
  }

  Factorization fact;
  fact.size_ = static_cast<std::size_t>(a.rows);
  fact.symbolic_ = symbolic_;
  fact.numeric_ = factor_numeric(*symbolic_, a);
  if (fact.numeric_) return fact;

  // Static pivoting broke down: the matrix is singular or indefinite with an
  // unlucky ordering. Pivoted LU tells the two apart.
  auto lu = std::make_shared<Factorization::LuImpl>();
  const auto eigen_a = to_eigen(a);
  lu->lu.analyzePattern(eigen_a);
  lu->lu.factorize(eigen_a);
  bool ok = lu->lu.info() == Eigen::Success;
  if (ok) ok = std::isfinite(lu->lu.logAbsDeterminant());
  if (!ok)
    throw Error(ErrorCode::SingularMatrix, "coefficient matrix C_u^T Q C_u of size " + std::to_string(a.rows) +
                                               " is singular for the given force densities");
  fact.numeric_.reset();
  fact.lu_ = std::move(lu);
  return fact;
}

std::size_t Factorization::factor_nonzeros() const noexcept {
  return numeric_ ? numeric_->lower.size() : 0;
}

Factorization factorize(const SparseMatrix& a) {
  SparseLdlt solver;
  return solver.factorize(a);
}

DenseMatrix Factorization::solve(const DenseMatrix& rhs) const {
  if (rhs.rows() != size_)
    throw Error(ErrorCode::DimensionMismatch, "solve: right-hand side has " + std::to_string(rhs.rows()) +
                                                  " rows, factorization has " + std::to_string(size_));
  DenseMatrix x(size_, rhs.cols());
  if (size_ == 0) return x;

  if (lu_) {
    Eigen::VectorXd b(static_cast<Eigen::Index>(size_));
    for (std::size_t c = 0; c < rhs.cols(); ++c) {
      for (std::size_t i = 0; i < size_; ++i) b[static_cast<Eigen::Index>(i)] = rhs(i, c);
      const Eigen::VectorXd sol = lu_->lu.solve(b);
      for (std::size_t i = 0; i < size_; ++i) x(i, c) = sol[static_cast<Eigen::Index>(i)];
    }
    return x;
  }

  const SymbolicLdlt& s = *symbolic_;
  const NumericLdlt& f = *numeric_;
  const std::size_t k = rhs.cols();
  // Work on all columns at once; w is row-major n x k in permuted order.
  std::vector<double> w(size_ * k);
  for (std::size_t i = 0; i < size_; ++i)
    for (std::size_t c = 0; c < k; ++c) w[i * k + c] = rhs(static_cast<std::size_t>(s.perm[i]), c);

  for (std::size_t j = 0; j < size_; ++j)
    for (auto p = static_cast<std::size_t>(s.col_offsets[j]); p < static_cast<std::size_t>(s.col_offsets[j + 1]); ++p) {
      const auto r = static_cast<std::size_t>(f.row_indices[p]);
      for (std::size_t c = 0; c < k; ++c) w[r * k + c] -= f.lower[p] * w[j * k + c];
    }
  for (std::size_t j = 0; j < size_; ++j)
    for (std::size_t c = 0; c < k; ++c) w[j * k + c] /= f.diagonal[j];
  for (std::size_t j = size_; j-- > 0;)
    for (auto p = static_cast<std::size_t>(s.col_offsets[j]); p < static_cast<std::size_t>(s.col_offsets[j + 1]); ++p) {
      const auto r = static_cast<std::size_t>(f.row_indices[p]);
      for (std::size_t c = 0; c < k; ++c) w[j * k + c] -= f.lower[p] * w[r * k + c];
    }

  for (std::size_t i = 0; i < size_; ++i)
    for (std::size_t c = 0; c < k; ++c) x(static_cast<std::size_t>(s.perm[i]), c) = w[i * k + c];
  return x;
}

DenseMatrix solve(const Factorization& fact, const DenseMatrix& rhs) { return fact.solve(rhs); }

}  // namespace fdm
