#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace phenocast::cli {

/// Runs the command line (without the program name). Returns the exit
/// status: 0 on success, 1 on a computational or input error, 2 on a usage
/// error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phenocast::cli
