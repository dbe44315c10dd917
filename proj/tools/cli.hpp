#pragma once

#include <ostream>

namespace blie {

/// Runs the command line: describe | verify | reduce | flow | bracket-table.
/// Returns 0 on success, 1 when verification fails, 2 on a config or usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace blie
