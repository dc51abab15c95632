#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace weylscope::cli {

/// Runs one command line (args excludes the program name). Results go to
/// `out` or to --out; errors are a single "error: <code>: <message>" line on
/// `err`. Returns the process exit code: 0 ok, 2 usage, 3 invalid model,
/// 4 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Angle expression: sums and products of numbers and "pi", e.g. "-pi/2",
/// "3pi/4", "0.25*pi+0.1". Throws UsageError on anything else.
double parse_angle(const std::string& text);

}  // namespace weylscope::cli
