#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fdm/adjoint.hpp"
#include "fdm/equilibrium.hpp"
#include "fdm/goals.hpp"

namespace fdm {

enum class Method { Sgd, Adam };

std::string_view to_string(Method method) noexcept;

struct Trainable {
  bool q = true;
  bool loads = false;
  bool support_xyz = false;

  bool any() const noexcept { return q || loads || support_xyz; }
  friend bool operator==(const Trainable&, const Trainable&) = default;
};

struct OptimizerConfig {
  Method method = Method::Adam;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_iterations = 5000;
  double grad_tol = 1e-9;
  Trainable trainable;

  /// Throws InvalidArgument on out-of-range settings.
  void validate() const;

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// Adam moments for each theta block; empty blocks are not trainable.
struct OptimizerState {
  int step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
};

/// One update of the trainable blocks of theta. Frozen blocks are copied
/// untouched. Throws NonFiniteGradient.
std::pair<Theta, OptimizerState> step(const Theta& theta, const ThetaGradient& grad, const OptimizerState& state,
                                      const OptimizerConfig& config);

enum class Termination { MaxIterations, GradientTolerance, SingularMatrix, NonFiniteLoss, NonFiniteGradient };

std::string_view to_string(Termination reason) noexcept;

struct OptimizationTrace {
  std::vector<double> loss_history;
  std::vector<double> grad_norm_history;  // inf-norm over trainable blocks
  std::vector<double> wall_time;          // seconds since start, per iteration

  Theta best_theta;
  EquilibriumState best_state;
  double best_loss = 0.0;
  std::size_t best_iteration = 0;

  Termination termination = Termination::MaxIterations;
  std::string diagnostic;
  std::size_t symbolic_analyses = 0;
  /// Edges whose force density changed sign between theta0 and best_theta.
  std::vector<Index> sign_flips;

  std::size_t iterations() const noexcept { return loss_history.size(); }
  bool failed() const noexcept {
    return termination != Termination::MaxIterations && termination != Termination::GradientTolerance;
  }
};

struct IterationInfo {
  std::size_t iteration;
  double loss;
  double grad_norm;
  const SparseMatrix& matrix;
  std::size_t symbolic_analyses;
};

using IterationCallback = std::function<void(const IterationInfo&)>;

/// Minimizes the loss over the trainable blocks of theta. Runs until
/// max_iterations updates have been taken, the gradient inf-norm drops below
/// grad_tol, or the solve breaks down; returns the lowest-loss theta seen.
/// Throws if theta0 itself cannot be solved or evaluated.
OptimizationTrace optimize(const FdmNetwork& network, const Theta& theta0, const LossSpec& spec,
                           const OptimizerConfig& config, const IterationCallback& on_iteration = {});

}  // namespace fdm
