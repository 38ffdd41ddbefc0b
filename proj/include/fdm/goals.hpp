#pragma once

#include <string_view>
#include <vector>

#include "fdm/equilibrium.hpp"
#include "fdm/matrix.hpp"

namespace fdm {

enum class GoalType { NodePoint, EdgeLength, EdgeForce };

std::string_view to_string(GoalType type) noexcept;

/// One squared-distance goal over a set of vertices or edges.
///   NodePoint:  sum_v |X_v - target_v|^2   (targets: 3 per element)
///   EdgeLength: sum_i (l_i - target_i)^2   (targets: 1 per element)
///   EdgeForce:  sum_i (t_i - target_i)^2   (targets: 1 per element)
struct Goal {
  GoalType type = GoalType::NodePoint;
  std::vector<Index> elements;
  std::vector<double> targets;
  double weight = 1.0;

  static Goal node_point(std::vector<Index> vertices, std::vector<double> xyz_targets, double weight = 1.0);
  static Goal edge_length(std::vector<Index> edges, std::vector<double> targets, double weight = 1.0);
  static Goal edge_force(std::vector<Index> edges, std::vector<double> targets, double weight = 1.0);

  std::size_t target_stride() const noexcept { return type == GoalType::NodePoint ? 3 : 1; }
};

/// Weighted sum of goals.
struct LossSpec {
  std::vector<Goal> goals;
};

/// Cotangent of the loss with respect to each component of the equilibrium state.
struct StateGradient {
  DenseMatrix xyz;        // n x 3
  std::vector<double> forces;
  std::vector<double> lengths;
  DenseMatrix reactions;  // n_s x 3
};

/// Throws IndexOutOfRange, InvalidArgument (weight, target count) for a goal
/// that does not fit a network of the given size.
void validate_goal(const Goal& goal, std::size_t vertex_count, std::size_t edge_count);
void validate_loss(const LossSpec& spec, std::size_t vertex_count, std::size_t edge_count);

double eval_goal(const Goal& goal, const EquilibriumState& state);
/// Throws EmptyLossSpec for a spec without goals.
double eval_loss(const LossSpec& spec, const EquilibriumState& state);
StateGradient loss_state_gradient(const LossSpec& spec, const EquilibriumState& state);

}  // namespace fdm
