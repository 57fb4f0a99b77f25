#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace detrank {

enum class OutputFormat { csv, markdown, json_lines };

/// Runs the command line. `args` excludes the program name. Returns the
/// process exit code (0 ok, 1 usage, 2 I/O or format, 3 not applicable,
/// 4 numerical failure).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace detrank
