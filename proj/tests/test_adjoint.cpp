#include <doctest.h>

#include <cmath>
#include <random>

#include "fdm/adjoint.hpp"
#include "fdm/error.hpp"
#include "support/networks.hpp"

using namespace fdm;

namespace {

StateGradient zero_cotangent(const FdmNetwork& net) {
  return {DenseMatrix(net.vertex_count(), 3), std::vector<double>(net.edge_count()),
          std::vector<double>(net.edge_count()), DenseMatrix(net.support_count(), 3)};
}

// Goals of all three types over a subset of vertices and edges, with targets
// scattered around the solved state so the loss stays O(1). Large losses let
// solve round-off swamp the finite-difference oracle.
LossSpec mixed_spec(std::mt19937_64& rng, const FdmNetwork& net, const Theta& theta) {
  const auto s = fdm_solve(net, theta);
  std::uniform_real_distribution<> jitter(-0.2, 0.2);
  std::vector<Index> vertices, edges;
  std::vector<double> xyz, lengths, forces;
  for (Index v = 0; v < static_cast<Index>(net.vertex_count()); v += 2) {
    vertices.push_back(v);
    for (std::size_t c = 0; c < 3; ++c) xyz.push_back(s.xyz(static_cast<std::size_t>(v), c) + jitter(rng));
  }
  for (Index e = 0; e < static_cast<Index>(net.edge_count()); e += 3) {
    edges.push_back(e);
    lengths.push_back(s.lengths[static_cast<std::size_t>(e)] * (1.0 + jitter(rng)));
    forces.push_back(s.forces[static_cast<std::size_t>(e)] * (1.0 + jitter(rng)));
  }
  return {{Goal::node_point(vertices, xyz, 0.8), Goal::edge_length(edges, lengths, 1.5),
           Goal::edge_force(edges, forces, 0.6)}};
}

}  // namespace

TEST_CASE("chain z-coordinate sensitivities") {
  const auto net = testing::chain_network();
  EquilibriumModel model(net);
  const auto theta = make_theta(net, {1.0, 1.0});
  const auto state = model.solve(theta);
  auto sgrad = zero_cotangent(net);
  sgrad.xyz(1, 2) = 1.0;
  const auto g = backward(model.connectivity(), theta, state, sgrad, model.factorization());
  CHECK(g.q[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(g.q[1] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(g.loads(1, 2) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(g.loads(1, 0) == 0.0);
  CHECK(g.loads(0, 2) == 0.0);
  // z = -(P + q1 z0 + q2 z2)/(q1+q2) in support heights: dz/dz_s = q_s/(q1+q2).
  CHECK(g.support_xyz(0, 2) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(g.support_xyz(1, 2) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("finite differences on the chain") {
  const auto net = testing::chain_network();
  const auto theta = make_theta(net, {1.0, 1.0});
  // (z + 1)^2 has slope 1 in z at z = -0.5, so dL/dq1 = dz/dq1 = 0.25.
  const LossSpec spec{{Goal::node_point({1}, {1.0, 0.0, -1.0})}};
  const auto fd = finite_difference_gradient(net, theta, spec, 1e-6);
  CHECK(std::fabs(fd.q[0] - 0.25) < 1e-8);
  CHECK(std::fabs(fd.q[1] - 0.25) < 1e-8);

  EquilibriumModel model(net);
  const auto lg = value_and_grad(model, theta, spec);
  CHECK(lg.loss == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(compare_gradients(lg.gradient, fd).passed());
}

TEST_CASE("goal at its target gives an identically zero gradient") {
  const auto net = testing::chain_network();
  EquilibriumModel model(net);
  const auto lg = value_and_grad(model, make_theta(net, {1.0, 1.0}), {{Goal::node_point({1}, {1.0, 0.0, -0.5})}});
  CHECK(lg.loss == 0.0);
  for (double v : lg.gradient.flatten()) CHECK(v == 0.0);

  const auto fd = finite_difference_gradient(net, make_theta(net, {2.0, 0.5}),
                                             {{Goal::node_point({0}, {0.0, 0.0, 0.0})}});
  for (std::size_t i = 0; i < fd.flatten().size(); ++i)
    if (i != 2 + 3 * 3 + 0 && i != 2 + 3 * 3 + 1 && i != 2 + 3 * 3 + 2) CHECK(fd.flatten()[i] == 0.0);
}

TEST_CASE("grid network gradient matches finite differences") {
  std::mt19937_64 rng(61);
  auto net = testing::grid_network({6, 5, 1.0, false});
  net = testing::with_loads(net, testing::uniform_matrix(rng, net.vertex_count(), 3, -0.5, 0.5));
  const auto theta = make_theta(net, testing::uniform(rng, net.edge_count(), 0.5, 2.0));
  std::vector<Index> free(net.free_vertices().begin(), net.free_vertices().end());
  std::vector<Index> edges;
  for (Index e = 0; e < static_cast<Index>(net.edge_count()); ++e) edges.push_back(e);
  const LossSpec spec{{Goal::node_point(free, testing::uniform(rng, free.size() * 3, -1.0, 1.0)),
                       Goal::edge_length(edges, std::vector<double>(edges.size(), 0.8))}};
  EquilibriumModel model(net);
  const auto lg = value_and_grad(model, theta, spec);
  const auto cmp = compare_gradients(lg.gradient, finite_difference_gradient(net, theta, spec), 1e-5, 1e-8);
  CHECK(cmp.passed());
  CHECK(cmp.max_relative_error < 1e-5);
}

TEST_CASE("random networks with positive and negative force densities") {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 16; ++trial) {
    const bool negative = trial % 2 == 1;
    const auto net = testing::random_network(rng, 6 + 3 * trial, trial, 4);
    auto q = testing::uniform(rng, net.edge_count(), 0.5, 2.0);
    if (negative)
      for (double& v : q) v = -v;
    const auto theta = make_theta(net, q);
    const auto spec = mixed_spec(rng, net, theta);
    EquilibriumModel model(net);
    const auto lg = value_and_grad(model, theta, spec);
    const auto fd = finite_difference_gradient(net, theta, spec);
    const auto cmp = compare_gradients(lg.gradient, fd, 1e-5, 1e-8);
    INFO("trial " << trial << " worst component " << cmp.worst_component << " analytic "
                  << lg.gradient.flatten()[cmp.worst_component] << " numeric " << fd.flatten()[cmp.worst_component]
                  << " rel " << cmp.max_relative_error << " m " << net.edge_count());
    CHECK(cmp.passed());
  }
}

TEST_CASE("per-edge mixed signs") {
  // Mixed signs make A indefinite and often poorly conditioned, so no single
  // finite-difference step is accurate for every component: round-off wins at
  // small h, truncation at large h. Each component must agree with central
  // differences at one of several steps.
  std::mt19937_64 rng(79);
  int checked = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const auto net = testing::random_network(rng, 10 + 2 * trial, 4 + trial, 4);
    auto q = testing::uniform(rng, net.edge_count(), 0.5, 2.0);
    for (std::size_t i = 0; i < q.size(); i += 3) q[i] = -q[i];
    const auto theta = make_theta(net, q);
    EquilibriumModel model(net);
    try {
      model.solve(theta);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SingularMatrix);
      continue;
    }
    const auto spec = mixed_spec(rng, net, theta);
    const auto analytic = value_and_grad(model, theta, spec).gradient.flatten();
    std::vector<std::vector<double>> references;
    for (double h : {1e-4, 1e-5, 1e-6, 1e-7})
      references.push_back(finite_difference_gradient(net, theta, spec, h).flatten());
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      bool matched = false;
      for (const auto& ref : references) {
        const double diff = std::fabs(analytic[k] - ref[k]);
        matched = matched || diff <= 1e-8 || diff <= 1e-5 * std::fmax(std::fabs(analytic[k]), std::fabs(ref[k]));
      }
      INFO("trial " << trial << " component " << k << " analytic " << analytic[k]);
      CHECK(matched);
    }
    ++checked;
  }
  CHECK(checked >= 8);
}

TEST_CASE("directional derivative along joint scaling") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 5; ++trial) {
    const auto net = testing::random_network(rng, 20, 8, 4);
    const auto theta = make_theta(net, testing::uniform(rng, net.edge_count(), 0.5, 2.0));
    const auto spec = mixed_spec(rng, net, theta);
    EquilibriumModel model(net);
    const auto g = value_and_grad(model, theta, spec).gradient;
    double directional = 0.0;
    for (std::size_t i = 0; i < theta.q.size(); ++i) directional += theta.q[i] * g.q[i];
    for (std::size_t i = 0; i < theta.loads.size(); ++i) directional += theta.loads.values()[i] * g.loads.values()[i];

    auto loss_at = [&](double c) {
      Theta t = theta;
      for (double& v : t.q) v *= c;
      for (double& v : t.loads.values()) v *= c;
      return eval_loss(spec, fdm_solve(net, t));
    };
    const double h = 1e-6;
    const double numeric = (loss_at(1 + h) - loss_at(1 - h)) / (2 * h);
    CHECK(directional == doctest::Approx(numeric).epsilon(1e-6).scale(1e-8));
  }
}

TEST_CASE("forward and adjoint solves share one symbolic analysis") {
  std::mt19937_64 rng(73);
  const auto net = testing::grid_network({7, 7, 1.0, false});
  EquilibriumModel model(net);
  std::vector<Index> free(net.free_vertices().begin(), net.free_vertices().end());
  const LossSpec spec{{Goal::node_point(free, std::vector<double>(free.size() * 3, 0.25))}};
  for (int k = 0; k < 5; ++k)
    value_and_grad(model, make_theta(net, testing::uniform(rng, net.edge_count(), 0.5, 2.0)), spec);
  CHECK(model.symbolic_analyses() == 1);
}

TEST_CASE("zero-length edges with a length cotangent are rejected") {
  DenseMatrix xyz(2, 3);
  const auto net = build_network(xyz, {{0, 1}}, {0, 1}, DenseMatrix(2, 3));
  EquilibriumModel model(net);
  auto expect_zero_length = [&](const LossSpec& spec) {
    try {
      value_and_grad(model, make_theta(net, {1.0}), spec);
      FAIL("expected ZeroLengthEdge");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ZeroLengthEdge);
    }
  };
  expect_zero_length({{Goal::edge_length({0}, {1.0})}});
  expect_zero_length({{Goal::edge_force({0}, {1.0})}});
  // Length already on target: the cotangent vanishes and the gradient is defined.
  const auto lg = value_and_grad(model, make_theta(net, {1.0}), {{Goal::edge_length({0}, {0.0})}});
  for (double v : lg.gradient.flatten()) CHECK(v == 0.0);
}

TEST_CASE("gradient comparison tolerances") {
  ThetaGradient a{{1.0, 0.0}, DenseMatrix(1, 3), DenseMatrix(0, 3)};
  ThetaGradient b = a;
  b.q[0] = 1.0 + 5e-6;
  b.q[1] = 5e-9;
  CHECK(compare_gradients(a, b).passed());
  b.q[0] = 1.0 + 5e-5;
  const auto cmp = compare_gradients(a, b);
  CHECK_FALSE(cmp.passed());
  CHECK(cmp.worst_component == 0);
}
