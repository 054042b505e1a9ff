#pragma once

#include <iosfwd>

namespace gridstab::cli {

/// Parses argv and runs one subcommand. Results go to `out`; a failure
/// writes one JSON line to `err`. Returns 0 on success, 1 for data or
/// validation errors, 2 for usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gridstab::cli
