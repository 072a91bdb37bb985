#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xenopower::cli {

enum ExitCode : int {
    kOk = 0,
    kUsageError = 2,
    kDataError = 3,
    kEngineError = 4,
};

/// Parses "A:B" (inclusive), "a,b,c" or a single integer into an ascending list.
std::vector<int> parse_int_list(const std::string& text);

/// Entry point shared by the executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace xenopower::cli
