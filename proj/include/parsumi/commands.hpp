#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace parsumi {

/// Command-line front end. `args` excludes the program name. Returns the
/// process exit code: 0 success, 1 usage or input error, 2 when `complete`
/// stops without converging.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace parsumi
