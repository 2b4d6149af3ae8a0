#pragma once

#include <iosfwd>

namespace rainstore {

// Entry point of the rainstore executable. Returns the process exit code:
// 0 on success, 1 on a runtime error (one "error: <code>: <message>" line on
// err), 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rainstore
