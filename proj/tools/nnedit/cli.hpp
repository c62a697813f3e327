#pragma once

#include <iosfwd>

namespace nnedit::cli {

/// Entry point of the `nnedit` tool with injectable stdio. Returns the exit
/// code: 0 success, 1 domain error, 2 usage error.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace nnedit::cli
