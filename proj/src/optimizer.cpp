#include "fdm/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "fdm/error.hpp"
#include "fdm/kernels.hpp"

namespace fdm {
namespace {

// Trainable blocks in q, loads, support_xyz order.
std::vector<std::span<double>> trainable_blocks(Theta& theta, const Trainable& trainable) {
  std::vector<std::span<double>> blocks;
  if (trainable.q) blocks.emplace_back(theta.q);
  if (trainable.loads) blocks.push_back(theta.loads.values());
  if (trainable.support_xyz) blocks.push_back(theta.support_xyz.values());
  return blocks;
}

std::vector<std::span<const double>> trainable_blocks(const ThetaGradient& grad, const Trainable& trainable) {
  std::vector<std::span<const double>> blocks;
  if (trainable.q) blocks.emplace_back(grad.q);
  if (trainable.loads) blocks.push_back(grad.loads.values());
  if (trainable.support_xyz) blocks.push_back(grad.support_xyz.values());
  return blocks;
}

double trainable_norm(const ThetaGradient& grad, const Trainable& trainable) {
  double norm = 0.0;
  for (auto block : trainable_blocks(grad, trainable))
    for (double g : block) {
      if (!std::isfinite(g)) return std::numeric_limits<double>::quiet_NaN();
      norm = std::fmax(norm, std::fabs(g));
    }
  return norm;
}

}  // namespace

std::string_view to_string(Method method) noexcept { return method == Method::Adam ? "adam" : "sgd"; }

std::string_view to_string(Termination reason) noexcept {
  switch (reason) {
    case Termination::MaxIterations: return "max_iterations";
    case Termination::GradientTolerance: return "grad_tol";
    case Termination::SingularMatrix: return "SingularMatrix";
    case Termination::NonFiniteLoss: return "NonFiniteLoss";
    case Termination::NonFiniteGradient: return "NonFiniteGradient";
  }
  return "unknown";
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw Error(ErrorCode::InvalidArgument, "learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw Error(ErrorCode::InvalidArgument, "adam betas must lie in (0, 1)");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be nonnegative");
  if (max_iterations < 0) throw Error(ErrorCode::InvalidArgument, "max_iterations must be nonnegative");
  if (!(grad_tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "grad_tol must be nonnegative");
  if (!trainable.any()) throw Error(ErrorCode::InvalidArgument, "at least one theta block must be trainable");
}

std::pair<Theta, OptimizerState> step(const Theta& theta, const ThetaGradient& grad, const OptimizerState& state,
                                      const OptimizerConfig& config) {
  if (grad.q.size() != theta.q.size() || grad.loads.size() != theta.loads.size() ||
      grad.support_xyz.size() != theta.support_xyz.size())
    throw Error(ErrorCode::DimensionMismatch, "gradient does not match theta");
  if (!std::isfinite(trainable_norm(grad, config.trainable)))
    throw Error(ErrorCode::NonFiniteGradient, "gradient has non-finite entries");

  Theta next = theta;
  OptimizerState next_state = state;
  auto params = trainable_blocks(next, config.trainable);
  const auto grads = trainable_blocks(grad, config.trainable);

  if (config.method == Method::Sgd) {
    for (std::size_t b = 0; b < params.size(); ++b) kernels::sgd_update(params[b], grads[b], config.learning_rate);
    ++next_state.step;
    return {std::move(next), std::move(next_state)};
  }

  std::size_t total = 0;
  for (auto block : params) total += block.size();
  if (next_state.first_moment.size() != total) {
    next_state.first_moment.assign(total, 0.0);
    next_state.second_moment.assign(total, 0.0);
    next_state.step = 0;
  }
  ++next_state.step;
  const auto coeffs = kernels::AdamCoefficients::at_step(config.learning_rate, config.beta1, config.beta2,
                                                         config.epsilon, next_state.step);
  std::size_t offset = 0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    const std::size_t len = params[b].size();
    kernels::adam_update(params[b], grads[b], std::span(next_state.first_moment).subspan(offset, len),
                         std::span(next_state.second_moment).subspan(offset, len), coeffs);
    offset += len;
  }
  return {std::move(next), std::move(next_state)};
}

OptimizationTrace optimize(const FdmNetwork& network, const Theta& theta0, const LossSpec& spec,
                           const OptimizerConfig& config, const IterationCallback& on_iteration) {
  config.validate();
  EquilibriumModel model(network);
  validate_theta(model.connectivity(), theta0);
  validate_loss(spec, network.vertex_count(), network.edge_count());

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  OptimizationTrace trace;
  trace.best_loss = std::numeric_limits<double>::infinity();
  Theta theta = theta0;
  OptimizerState opt_state;

  for (std::size_t it = 0;; ++it) {
    LossAndGradient lg;
    try {
      lg = value_and_grad(model, theta, spec);
    } catch (const Error& e) {
      if (it == 0 || !is_numerical(e.code())) throw;
      trace.termination =
          e.code() == ErrorCode::SingularMatrix ? Termination::SingularMatrix : Termination::NonFiniteGradient;
      trace.diagnostic = "iteration " + std::to_string(it) + ": " + e.what();
      break;
    }
    if (!std::isfinite(lg.loss)) {
      if (it == 0) throw Error(ErrorCode::NonFiniteLoss, "loss is not finite at the initial parameters");
      trace.termination = Termination::NonFiniteLoss;
      trace.diagnostic = "iteration " + std::to_string(it) + ": loss is not finite";
      break;
    }

    const double grad_norm = trainable_norm(lg.gradient, config.trainable);
    trace.loss_history.push_back(lg.loss);
    trace.grad_norm_history.push_back(grad_norm);
    trace.wall_time.push_back(std::chrono::duration<double>(Clock::now() - start).count());
    if (lg.loss < trace.best_loss) {
      trace.best_loss = lg.loss;
      trace.best_iteration = it;
      trace.best_theta = theta;
      trace.best_state = lg.state;
    }
    if (on_iteration) on_iteration({it, lg.loss, grad_norm, model.coefficient_matrix(), model.symbolic_analyses()});

    if (!std::isfinite(grad_norm)) {
      trace.termination = Termination::NonFiniteGradient;
      trace.diagnostic = "iteration " + std::to_string(it) + ": gradient is not finite";
      break;
    }
    if (grad_norm < config.grad_tol) {
      trace.termination = Termination::GradientTolerance;
      break;
    }
    if (it == static_cast<std::size_t>(config.max_iterations)) {
      trace.termination = Termination::MaxIterations;
      break;
    }
    std::tie(theta, opt_state) = step(theta, lg.gradient, opt_state, config);
  }

  trace.symbolic_analyses = model.symbolic_analyses();
  for (std::size_t i = 0; i < theta0.q.size(); ++i)
    if (theta0.q[i] * trace.best_theta.q[i] < 0.0) trace.sign_flips.push_back(static_cast<Index>(i));
  return trace;
}

}  // namespace fdm
