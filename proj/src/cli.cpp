#include "fdm/cli.hpp"

#include <chrono>
#include <cstdio>
#include <optional>

#include <CLI11.hpp>

#include "fdm/adjoint.hpp"
#include "fdm/error.hpp"
#include "fdm/io.hpp"
#include "fdm/optimizer.hpp"

namespace fdm::cli {
namespace {

struct Options {
  std::string input;
  std::string out;
  std::string obj;
  std::optional<int> max_iter;
  std::optional<double> lr;
  std::optional<std::string> method;
  bool verbose = false;
  double h = 1e-6;
};

void report(std::ostream& err, std::string_view code, const std::string& message) {
  err << "error: code=" << code << " message=" << message << "\n";
}

void emit_results(const Options& opt, const io::NetworkDocument& doc, const Theta& theta,
                  const EquilibriumState& state, const OptimizationTrace* trace, std::ostream& out) {
  if (opt.out.empty())
    out << io::format_json(io::results_to_json(doc, theta, state, trace)) << "\n";
  else
    io::save_results(opt.out, doc, theta, state, trace);
  if (!opt.obj.empty()) io::export_obj(opt.obj, doc.network, state);
}

int run_solve(const Options& opt, std::ostream& out) {
  const auto doc = io::load_network(opt.input);
  const auto state = fdm_solve(doc.network, doc.theta);
  emit_results(opt, doc, doc.theta, state, nullptr, out);
  return kExitOk;
}

int run_optimize(const Options& opt, std::ostream& out, std::ostream& err) {
  auto job = io::load_job(opt.input);
  io::ConfigOverrides overrides;
  overrides.max_iterations = opt.max_iter;
  overrides.learning_rate = opt.lr;
  if (opt.method) overrides.method = *opt.method == "sgd" ? Method::Sgd : Method::Adam;
  io::apply_overrides(job.config, overrides);
  job.config.validate();

  IterationCallback progress;
  if (opt.verbose)
    progress = [&err](const IterationInfo& info) {
      if (info.iteration % 100 != 0) return;
      char line[128];
      std::snprintf(line, sizeof line, "iter %6zu  loss %.6e  |grad| %.3e\n", info.iteration, info.loss,
                    info.grad_norm);
      err << line;
    };

  const auto trace = optimize(job.network.network, job.network.theta, job.loss, job.config, progress);
  if (opt.verbose) {
    char line[160];
    std::snprintf(line, sizeof line, "done: %zu iterations, loss %.6e -> %.6e (%s), %.3f s\n", trace.iterations(),
                  trace.loss_history.front(), trace.best_loss, std::string(to_string(trace.termination)).c_str(),
                  trace.wall_time.back());
    err << line;
  }
  emit_results(opt, job.network, trace.best_theta, trace.best_state, &trace, out);
  if (trace.failed()) {
    report(err, to_string(trace.termination), trace.diagnostic + " (best parameters were written)");
    return kExitNumerical;
  }
  return kExitOk;
}

int run_gradcheck(const Options& opt, std::ostream& out) {
  const auto job = io::load_job(opt.input);
  EquilibriumModel model(job.network.network);
  validate_loss(job.loss, job.network.network.vertex_count(), job.network.network.edge_count());
  const auto analytic = value_and_grad(model, job.network.theta, job.loss);
  const auto reference = finite_difference_gradient(job.network.network, job.network.theta, job.loss, opt.h);
  const auto cmp = compare_gradients(analytic.gradient, reference, 1e-5, 1e-8);

  char line[256];
  std::snprintf(line, sizeof line, "loss=%.17g components=%zu max_relative_error=%.3e max_absolute_error=%.3e\n",
                analytic.loss, reference.flatten().size(), cmp.max_relative_error, cmp.max_absolute_error);
  out << line;
  return cmp.passed() ? kExitOk : kExitNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Force density form finding and inverse design", "fdm"};
  app.require_subcommand(1);
  Options opt;

  auto* solve = app.add_subcommand("solve", "Solve the equilibrium of a network file");
  solve->add_option("network", opt.input, "Network JSON file")->required();
  solve->add_option("--out", opt.out, "Results JSON file (default: stdout)");
  solve->add_option("--obj", opt.obj, "Wavefront OBJ output");

  auto* optimize_cmd = app.add_subcommand("optimize", "Minimize a job's loss over its trainable parameters");
  optimize_cmd->add_option("job", opt.input, "Job JSON file")->required();
  optimize_cmd->add_option("--out", opt.out, "Results JSON file (default: stdout)");
  optimize_cmd->add_option("--obj", opt.obj, "Wavefront OBJ output");
  optimize_cmd->add_option("--max-iter", opt.max_iter, "Maximum optimizer updates")->check(CLI::NonNegativeNumber);
  optimize_cmd->add_option("--lr", opt.lr, "Learning rate")->check(CLI::PositiveNumber);
  optimize_cmd->add_option("--method", opt.method, "Optimizer")->check(CLI::IsMember({"sgd", "adam"}));
  optimize_cmd->add_flag("--verbose", opt.verbose, "Report progress on stderr");

  auto* gradcheck = app.add_subcommand("gradcheck", "Compare adjoint gradients with finite differences");
  gradcheck->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  gradcheck->add_option("job", opt.input, "Job JSON file")->required();
  gradcheck->add_option("--h", opt.h, "Relative finite-difference step")->check(CLI::PositiveNumber);

  std::vector<char*> argv;
  std::vector<std::string> storage(args);
  for (auto& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*solve) return run_solve(opt, out);
    if (*optimize_cmd) return run_optimize(opt, out, err);
    return run_gradcheck(opt, out);
  } catch (const Error& e) {
    report(err, to_string(e.code()), e.detail());
    return is_numerical(e.code()) ? kExitNumerical : kExitInput;
  } catch (const std::exception& e) {
    report(err, "InternalError", e.what());
    return kExitInput;
  }
}

}  // namespace fdm::cli
