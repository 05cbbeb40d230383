// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONCATENET_CLI_HPP_
#define CONCATENET_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace concatenet {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Subcommands: train, separate, evaluate, mix, info. `args` excludes the
/// program name. Returns 0 on success, 2 on usage errors, 1 on runtime
/// failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace concatenet

#endif  // CONCATENET_CLI_HPP_
