#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace decoy::cli {

/// Process exit codes. A pure function of input validity, the verification
/// outcome and the tolerance check.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitInvalidInput = 2,
  kExitVerificationFailed = 3,
  kExitToleranceExceeded = 4,
};

/// Entry point behind the `decoy-rate` binary. `args` excludes the program
/// name. Reports go to `out`; diagnostics and logs go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace decoy::cli
