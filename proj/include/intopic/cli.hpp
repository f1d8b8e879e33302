#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace intopic {

/// Runs one CLI invocation; `args` excludes the program name. Returns the
/// process exit status and writes failures to `err`.
int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err);

}  // namespace intopic
