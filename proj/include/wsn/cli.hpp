#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wsn {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitInternal = 3;

/// Dispatch one command line (without argv[0]); results go to `out`,
/// diagnostics to `err`. Returns the process exit code.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wsn
