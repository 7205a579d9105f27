// Copyright 2026 The Wishart DP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The `wdp` command line: one subcommand per accountant, simulator, or
// attack. Dispatch() is the whole program; main() only binds it to the
// process streams so tests can drive it in-process.

#ifndef WISHART_DP_TOOLS_WDP_CLI_H_
#define WISHART_DP_TOOLS_WDP_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace wishart_dp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
// Domain, precondition, or regime violation; the message names it.
inline constexpr int kExitDomain = 3;
// Iterative numerics did not converge, or a self-check failed.
inline constexpr int kExitConvergence = 4;

int Dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

// argv-style entry point; argv[0] is skipped.
int Dispatch(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err);

}  // namespace wishart_dp::cli

#endif  // WISHART_DP_TOOLS_WDP_CLI_H_
