#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace polefit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

// Runs one `polefit` command line (without the program name). Normal output
// goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace polefit
