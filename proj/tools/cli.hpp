// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "earthforge/config.hpp"

namespace earthforge::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

/// Exit code for a library error: transport and file-system failures are 2,
/// everything else is a validation failure (1).
int exit_code_for(ErrorKind kind) noexcept;

/// Runs the `earthforge` command line. `args` excludes the program name.
/// Results go to `out` only when a subcommand writes to standard output;
/// progress and the one-line JSON error go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const EnvLookup& env = process_env());

}  // namespace earthforge::cli
