#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qsgauc::cli {

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out`; failures print one line "error code=<CODE> message=<text>" to
/// `err`. Returns the process exit status: 0 on success, 1 on a runtime
/// error, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace qsgauc::cli
