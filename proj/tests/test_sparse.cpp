#include <doctest.h>

#include <cmath>
#include <random>

#include "fdm/dense_oracle.hpp"
#include "fdm/error.hpp"
#include "fdm/network.hpp"
#include "fdm/sparse.hpp"
#include "support/networks.hpp"

using namespace fdm;

namespace {

SparseMatrix from_dense(const DenseMatrix& d) {
  SparseMatrix s;
  s.rows = static_cast<Index>(d.rows());
  s.cols = static_cast<Index>(d.cols());
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < d.cols(); ++c)
      if (d(r, c) != 0.0 || r == c) {
        s.col_indices.push_back(static_cast<Index>(c));
        s.values.push_back(d(r, c));
      }
    s.row_offsets.push_back(static_cast<Index>(s.col_indices.size()));
  }
  return s;
}

DenseMatrix column(std::initializer_list<double> values) {
  DenseMatrix m(values.size(), 1);
  std::size_t i = 0;
  for (double v : values) m(i++, 0) = v;
  return m;
}

}  // namespace

TEST_CASE("plan and assemble the chain") {
  const auto conn = connectivity(testing::chain_network());
  const auto plan = plan_assembly(conn);
  REQUIRE(plan.pattern.rows == 1);
  REQUIRE(plan.pattern.nonzeros() == 1);

  const std::vector<double> q_pos{1.0, 1.0}, q_neg{-1.0, -1.0}, q_mixed{0.25, 3.0}, q_zero{0.0, 0.0};
  CHECK(assemble(plan, q_pos).values[0] == 2.0);
  CHECK(assemble(plan, q_neg).values[0] == -2.0);
  CHECK(assemble(plan, q_mixed).values[0] == 3.25);
  CHECK(assemble(plan, q_zero).values[0] == 0.0);
  CHECK_THROWS_AS(assemble(plan, std::vector<double>{1.0}), Error);
}

TEST_CASE("3x3 grid with supported boundary has one interior unknown") {
  const auto net = testing::grid_network({3, 3, 1.0, false});
  const auto conn = connectivity(net);
  const auto plan = plan_assembly(conn);
  REQUIRE(plan.pattern.rows == 1);
  std::vector<double> q(net.edge_count());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = 1.0 + 0.5 * static_cast<double>(i);
  double incident = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (net.edges()[i].start == 4 || net.edges()[i].end == 4) incident += q[i];
  CHECK(assemble(plan, q).values[0] == doctest::Approx(incident).epsilon(1e-15));
}

TEST_CASE("assembled matrix equals C_u^T Q C_u and keeps its pattern") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto net = testing::random_network(rng, 30 + trial, 25, 4);
    const auto conn = connectivity(net);
    const auto plan = plan_assembly(conn);
    CHECK(plan_assembly(conn).pattern.same_pattern(plan.pattern));

    const auto q1 = testing::uniform(rng, net.edge_count(), -2.0, 2.0);
    const auto q2 = testing::uniform(rng, net.edge_count(), -2.0, 2.0);
    const auto a1 = assemble(plan, q1);
    const auto a2 = assemble(plan, q2);
    CHECK(a1.same_pattern(a2));
    CHECK(a1.same_pattern(plan.pattern));

    // Dense reference C_u^T Q C_u.
    const auto cu = conn.c_free.to_dense();
    const auto dense = a1.to_dense();
    for (std::size_t j = 0; j < cu.cols(); ++j)
      for (std::size_t k = 0; k < cu.cols(); ++k) {
        double ref = 0.0;
        for (std::size_t i = 0; i < cu.rows(); ++i) ref += cu(i, j) * q1[i] * cu(i, k);
        CHECK(dense(j, k) == doctest::Approx(ref).epsilon(1e-14));
        CHECK(dense(j, k) == dense(k, j));
      }

    // Linearity in q.
    std::vector<double> mix(q1.size());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 0.5 * q1[i] - 3.0 * q2[i];
    const auto am = assemble(plan, mix);
    for (std::size_t k = 0; k < am.values.size(); ++k)
      CHECK(am.values[k] == doctest::Approx(0.5 * a1.values[k] - 3.0 * a2.values[k]).epsilon(1e-12));
  }
}

TEST_CASE("factorize and solve small systems") {
  DenseMatrix one(1, 1);
  one(0, 0) = 2.0;
  CHECK(solve(factorize(from_dense(one)), column({1.0}))(0, 0) == 0.5);

  DenseMatrix two(2, 2);
  two(0, 0) = 2.0;
  two(0, 1) = -1.0;
  two(1, 0) = -1.0;
  two(1, 1) = 2.0;
  const auto x = solve(factorize(from_dense(two)), column({1.0, 0.0}));
  CHECK(x(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(x(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  DenseMatrix diag(4, 4);
  for (std::size_t i = 0; i < 4; ++i) diag(i, i) = static_cast<double>(i + 1) * (i % 2 ? -1.0 : 1.0);
  DenseMatrix b(4, 3);
  for (std::size_t i = 0; i < b.size(); ++i) b.values()[i] = static_cast<double>(i) - 5.0;
  const auto y = solve(factorize(from_dense(diag)), b);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 3; ++c) CHECK(y(i, c) == doctest::Approx(b(i, c) / diag(i, i)).epsilon(1e-15));

  CHECK_THROWS_AS(solve(factorize(from_dense(two)), column({1.0})), Error);
}

TEST_CASE("q summing to zero on the chain is singular") {
  const auto plan = plan_assembly(connectivity(testing::chain_network()));
  const auto a = assemble(plan, std::vector<double>{1.0, -1.0});
  try {
    factorize(a);
    FAIL("expected SingularMatrix");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularMatrix);
  }
}

TEST_CASE("indefinite matrix with a zero leading pivot falls back to pivoted LU") {
  DenseMatrix swap(2, 2);
  swap(0, 1) = 1.0;
  swap(1, 0) = 1.0;
  const auto fact = factorize(from_dense(swap));
  CHECK(fact.used_lu_fallback());
  const auto x = fact.solve(column({1.0, 2.0}));
  CHECK(x(0, 0) == doctest::Approx(2.0));
  CHECK(x(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("symbolic analysis runs once per pattern") {
  std::mt19937_64 rng(8);
  const auto net = testing::random_network(rng, 60, 40, 3);
  const auto plan = plan_assembly(connectivity(net));
  SparseLdlt solver;
  for (int k = 0; k < 5; ++k) solver.factorize(assemble(plan, testing::uniform(rng, net.edge_count(), 0.5, 2.0)));
  CHECK(solver.symbolic_analyses() == 1);

  DenseMatrix one(1, 1);
  one(0, 0) = 3.0;
  solver.factorize(from_dense(one));
  CHECK(solver.symbolic_analyses() == 2);
}

TEST_CASE("sparse solve matches the dense oracle on random SPD systems") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10 + 9 * trial;  // up to 181 vertices
    const auto net = testing::random_network(rng, n, n / 2, 6);
    if (net.free_count() == 0) continue;
    const auto plan = plan_assembly(connectivity(net));
    const auto a = assemble(plan, testing::uniform(rng, net.edge_count(), 0.5, 2.0));
    const auto b = testing::uniform_matrix(rng, static_cast<std::size_t>(a.rows), 3, -1.0, 1.0);
    const auto x = solve(factorize(a), b);
    const auto ref = dense_solve_oracle(a.to_dense(), b);
    CHECK(testing::relative_error(x, ref) < 1e-10);

    // Residual bound.
    const auto ax = a.multiply(x);
    double residual = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) residual = std::fmax(residual, std::fabs(ax.values()[i] - b.values()[i]));
    CHECK(residual <= 1e-10 * (a.norm_inf() * x.max_abs() + b.max_abs()));
  }
}

TEST_CASE("dense oracle") {
  DenseMatrix one(1, 1);
  one(0, 0) = 2.0;
  CHECK(dense_solve_oracle(one, column({1.0}))(0, 0) == 0.5);

  DenseMatrix two(2, 2);
  two(0, 0) = 2.0;
  two(0, 1) = -1.0;
  two(1, 0) = -1.0;
  two(1, 1) = 2.0;
  const auto x = dense_solve_oracle(two, column({1.0, 0.0}));
  CHECK(x(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(x(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  DenseMatrix hilbert(3, 3), identity(3, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    identity(i, i) = 1.0;
    for (std::size_t j = 0; j < 3; ++j) hilbert(i, j) = 1.0 / static_cast<double>(i + j + 1);
  }
  const double inverse[3][3] = {{9, -36, 30}, {-36, 192, -180}, {30, -180, 180}};
  DenseMatrix expected(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) expected(i, j) = inverse[i][j];
  CHECK(testing::relative_error(dense_solve_oracle(hilbert, identity), expected) < 1e-10);

  DenseMatrix singular(2, 2, 1.0);
  CHECK_THROWS_AS(dense_solve_oracle(singular, column({1.0, 1.0})), Error);
}

TEST_CASE("chain right-hand side solves to the free vertex") {
  const auto plan = plan_assembly(connectivity(testing::chain_network()));
  DenseMatrix b(1, 3);
  b(0, 0) = 2.0;
  b(0, 2) = -1.0;
  const auto x = solve(factorize(assemble(plan, std::vector<double>{1.0, 1.0})), b);
  CHECK(x(0, 0) == 1.0);
  CHECK(x(0, 1) == 0.0);
  CHECK(x(0, 2) == -0.5);
}
