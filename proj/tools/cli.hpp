#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mdids::cli {

enum ExitCode : int { ok = 0, usage = 1, data = 2, numeric = 3, integrity = 4 };

/// Runs one command. `args` excludes the program name. Reports and summaries
/// go to `out`, diagnostics to `err`; `in` backs `-` as an input path.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in);

}  // namespace mdids::cli
