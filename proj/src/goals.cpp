#include "fdm/goals.hpp"

#include <cmath>
#include <string>

#include "fdm/error.hpp"

namespace fdm {
namespace {

std::size_t element_limit(const Goal& goal, std::size_t vertex_count, std::size_t edge_count) {
  return goal.type == GoalType::NodePoint ? vertex_count : edge_count;
}

void check_goal_for_state(const Goal& goal, const EquilibriumState& state) {
  validate_goal(goal, state.xyz.rows(), state.lengths.size());
}

}  // namespace

std::string_view to_string(GoalType type) noexcept {
  switch (type) {
    case GoalType::NodePoint: return "node_point";
    case GoalType::EdgeLength: return "edge_length";
    case GoalType::EdgeForce: return "edge_force";
  }
  return "unknown";
}

Goal Goal::node_point(std::vector<Index> vertices, std::vector<double> xyz_targets, double weight) {
  return {GoalType::NodePoint, std::move(vertices), std::move(xyz_targets), weight};
}

Goal Goal::edge_length(std::vector<Index> edges, std::vector<double> targets, double weight) {
  return {GoalType::EdgeLength, std::move(edges), std::move(targets), weight};
}

Goal Goal::edge_force(std::vector<Index> edges, std::vector<double> targets, double weight) {
  return {GoalType::EdgeForce, std::move(edges), std::move(targets), weight};
}

void validate_goal(const Goal& goal, std::size_t vertex_count, std::size_t edge_count) {
  if (!(std::isfinite(goal.weight) && goal.weight > 0.0))
    throw Error(ErrorCode::InvalidArgument, std::string(to_string(goal.type)) + " goal weight must be finite and positive");
  if (goal.targets.size() != goal.elements.size() * goal.target_stride())
    throw Error(ErrorCode::InvalidArgument, std::string(to_string(goal.type)) + " goal has " +
                                                std::to_string(goal.targets.size()) + " target values for " +
                                                std::to_string(goal.elements.size()) + " elements");
  for (double t : goal.targets)
    if (!std::isfinite(t))
      throw Error(ErrorCode::InvalidArgument, std::string(to_string(goal.type)) + " goal has a non-finite target");
  const std::size_t limit = element_limit(goal, vertex_count, edge_count);
  for (Index e : goal.elements)
    if (e < 0 || static_cast<std::size_t>(e) >= limit)
      throw Error(ErrorCode::IndexOutOfRange, std::string(to_string(goal.type)) + " goal references element " +
                                                  std::to_string(e) + " outside [0, " + std::to_string(limit) + ")");
}

void validate_loss(const LossSpec& spec, std::size_t vertex_count, std::size_t edge_count) {
  if (spec.goals.empty()) throw Error(ErrorCode::EmptyLossSpec, "loss has no goals");
  for (const auto& goal : spec.goals) validate_goal(goal, vertex_count, edge_count);
}

double eval_goal(const Goal& goal, const EquilibriumState& state) {
  check_goal_for_state(goal, state);
  double sum = 0.0;
  for (std::size_t k = 0; k < goal.elements.size(); ++k) {
    const auto e = static_cast<std::size_t>(goal.elements[k]);
    switch (goal.type) {
      case GoalType::NodePoint:
        for (std::size_t c = 0; c < 3; ++c) {
          const double d = state.xyz(e, c) - goal.targets[3 * k + c];
          sum += d * d;
        }
        break;
      case GoalType::EdgeLength: {
        const double d = state.lengths[e] - goal.targets[k];
        sum += d * d;
        break;
      }
      case GoalType::EdgeForce: {
        const double d = state.forces[e] - goal.targets[k];
        sum += d * d;
        break;
      }
    }
  }
  return sum;
}

double eval_loss(const LossSpec& spec, const EquilibriumState& state) {
  if (spec.goals.empty()) throw Error(ErrorCode::EmptyLossSpec, "loss has no goals");
  double loss = 0.0;
  for (const auto& goal : spec.goals) loss += goal.weight * eval_goal(goal, state);
  return loss;
}

StateGradient loss_state_gradient(const LossSpec& spec, const EquilibriumState& state) {
  if (spec.goals.empty()) throw Error(ErrorCode::EmptyLossSpec, "loss has no goals");
  StateGradient g{DenseMatrix(state.xyz.rows(), 3), std::vector<double>(state.forces.size(), 0.0),
                  std::vector<double>(state.lengths.size(), 0.0), DenseMatrix(state.reactions.rows(), 3)};
  for (const auto& goal : spec.goals) {
    check_goal_for_state(goal, state);
    const double scale = 2.0 * goal.weight;
    for (std::size_t k = 0; k < goal.elements.size(); ++k) {
      const auto e = static_cast<std::size_t>(goal.elements[k]);
      switch (goal.type) {
        case GoalType::NodePoint:
          for (std::size_t c = 0; c < 3; ++c) g.xyz(e, c) += scale * (state.xyz(e, c) - goal.targets[3 * k + c]);
          break;
        case GoalType::EdgeLength:
          g.lengths[e] += scale * (state.lengths[e] - goal.targets[k]);
          break;
        case GoalType::EdgeForce:
          g.forces[e] += scale * (state.forces[e] - goal.targets[k]);
          break;
      }
    }
  }
  return g;
}

}  // namespace fdm
