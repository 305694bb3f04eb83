#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace webgraph::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kInvariant = 3 };

/// Runs one `webgraph_lab` invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace webgraph::cli
