#pragma once

#include <iosfwd>

namespace reload {

// Entry point of the reload command. Returns the process exit status.
// 0 success, 1 run failure, 2 invalid usage or configuration.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace reload
