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

#ifndef WISHART_DP_TOOLS_SELFTEST_H_
#define WISHART_DP_TOOLS_SELFTEST_H_

#include <string>
#include <vector>

#include "absl/status/status.h"
#include "wishart_dp/specialfn.h"

namespace wishart_dp::cli {

struct SelfCheck {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  absl::Status status;  // non-OK when the kernel itself failed
};

// Evaluates the special-function example table and a few accountant
// invariants. `quantile` is threaded into every quantile call so a harness
// can corrupt it.
std::vector<SelfCheck> RunSelfChecks(const QuantileOptions& quantile);

}  // namespace wishart_dp::cli

#endif  // WISHART_DP_TOOLS_SELFTEST_H_
