#pragma once

#include <ostream>

namespace dtest::cli {

/// Parses the command line and runs one subcommand. JSON results go to
/// `out`; logs and the single-line JSON error object go to `err`.
/// Returns 0 on success, 1 for validation errors (bad flags, missing or
/// malformed files, invalid configs) and 2 for computation errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dtest::cli
