#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ssde::cli {

/// Exit codes of the ssde tool.
enum ExitCode : int {
    kOk = 0,
    kConfig = 2,
    kDivergence = 3,
    kStatistics = 4,
};

/// Parses an eps argument: a number ("0.03125"), a power of two ("2^-5"),
/// a comma list of either, or an inclusive power-of-two range ("2^-4..2^-7").
std::vector<double> parse_eps_list(const std::string& text);

/// Entry point shared by main() and the tests. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ssde::cli
