#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seqtrans {

/// Runs the `seqtrans` command line. Errors are reported on `err` as a single
/// `seqtrans: error: <category>: <message>` line; the return value is the
/// process exit code (0 success, 2 usage or config errors, 1 otherwise).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with the arguments after the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace seqtrans
