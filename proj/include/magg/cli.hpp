#pragma once

#include <iosfwd>

namespace magg {

/// Entry point of the magg command line. Returns 0 on success, 1 on a
/// validation error (bad arguments, config or files) and 2 on a solver error.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, const char* const* argv);

}  // namespace magg
