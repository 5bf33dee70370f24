#pragma once

#include <string>
#include <vector>

namespace cargoflow {

/// Runs one CLI invocation (args exclude the program name). Returns the
/// process exit code; errors are reported as a single line on stderr.
int dispatch(const std::vector<std::string>& args);

}  // namespace cargoflow
