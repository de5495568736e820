#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ftp::cli {

/// Runs one `ftp` invocation. argv[0] is the program name.
///
/// Returns 0 on success, 2 on a usage error (unknown subcommand or flag,
/// bad value) and 1 when a stage fails. Reports and diagnostics go to
/// `out` / `err`; the resolved configuration is logged to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ftp::cli
