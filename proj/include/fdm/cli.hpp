#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fdm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNumerical = 2;

/// Runs the `fdm` command line. args[0] is the program name.
///   solve <network.json> [--out results.json] [--obj out.obj]
///   optimize <job.json> [--out results.json] [--obj out.obj] [--max-iter N] [--lr X]
///            [--method sgd|adam] [--verbose]
///   gradcheck <job.json> [--h 1e-6]
/// Errors go to `err`, one `error: code=<Code> message=<text>` line each.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fdm::cli
