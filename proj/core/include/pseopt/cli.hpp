#pragma once

#include <string>
#include <vector>

namespace pseopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitBlowup = 3;

/// Entry point behind the `pseopt` binary. Subcommands:
///   simulate  physics-only settling run
///   optimize  pse | gd | alternate | ppps optimization
///   metrics   report on a PLY (+ optional SDF / target image)
///   gradcheck finite-difference validation of the analytic gradients
///   demo      build the bundled two-object scene, then run optimize
/// Returns the process exit code instead of calling exit(), so tests can
/// drive it in-process.
int run(const std::vector<std::string>& args);

}  // namespace pseopt::cli
