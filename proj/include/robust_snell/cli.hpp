#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace robust_snell {

enum ExitCode : int {
    kExitOk = 0,
    kExitInvalidConfig = 2,
    kExitSizeGuard = 3,
    kExitUnattained = 4,
};

/**
 * Entry point shared by the executable and the tests. args excludes the
 * program name: `<solve|oracle|decompose|price> --config FILE [--out DIR]`.
 * Writes DIR/summary.json and DIR/nodes.csv.
 */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace robust_snell
