#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace latentprobe::cli {

enum ExitCode : int { kSuccess = 0, kValidationFailure = 1, kIoFailure = 2 };

/// Runs the command line `args` (args[0] is the program name) and returns the
/// process exit code. Subcommands: derive, mask, probe, concept, pca, report.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace latentprobe::cli
