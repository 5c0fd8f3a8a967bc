#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace actrack::cli {

/// Command-line entry point; `args` excludes the program name.
///
/// Subcommands: simulate, detect, link, evaluate, froc. Each accepts
/// `--config FILE` with plain key=value lines; explicit flags override the
/// file. Exit codes: 0 success, 1 usage error (bad flags or parameter
/// values), 2 data error (unreadable or malformed inputs, partial results),
/// 3 internal invariant violation.
int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

}  // namespace actrack::cli
