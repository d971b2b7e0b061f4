#pragma once

#include <ostream>

namespace exmig {

/// Exit status: 0 when every migrated version succeeded, 1 on a migration failure,
/// 2 on usage or configuration errors (including per-version error verdicts).
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace exmig
