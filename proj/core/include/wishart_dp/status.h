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

#ifndef WISHART_DP_STATUS_H_
#define WISHART_DP_STATUS_H_

#include <optional>
#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace wishart_dp {

// Error taxonomy used across the library. Each kind maps onto one absl status
// code so callers that only look at the code still get a sensible answer; the
// precise kind travels as a payload.
enum class ErrorKind {
  kNone,
  kDomain,                 // invalid argument or violated precondition
  kDegenerateInput,        // e.g. all-zero matrix where a direction is needed
  kConfig,                 // contradictory configuration
  kInadmissibleAlignment,  // alignment too small for the vector accountant
  kRegime,                 // corollary regime conditions not met
  kConvergence,            // iterative routine ran out of iterations
};

std::string_view ErrorKindName(ErrorKind kind);

absl::Status DomainError(std::string_view message);
absl::Status DegenerateInputError(std::string_view message);
absl::Status ConfigError(std::string_view message);
absl::Status ConvergenceError(std::string_view message);
// `threshold` is the smallest admissible alignment.
absl::Status InadmissibleAlignmentError(std::string_view message,
                                        double threshold);
// `condition` names the violated condition ("lower" or "upper"); `bound` is
// the rank that would satisfy it (minimal for "lower", maximal for "upper").
absl::Status RegimeError(std::string_view condition, std::string_view message,
                         double bound);

ErrorKind KindOf(const absl::Status& status);
std::optional<double> ThresholdOf(const absl::Status& status);
std::optional<std::string> ConditionOf(const absl::Status& status);

}  // namespace wishart_dp

#define WDP_STATUS_CONCAT_INNER_(a, b) a##b
#define WDP_STATUS_CONCAT_(a, b) WDP_STATUS_CONCAT_INNER_(a, b)

#define WDP_RETURN_IF_ERROR(expr)                 \
  do {                                            \
    const ::absl::Status wdp_status_ = (expr);    \
    if (!wdp_status_.ok()) return wdp_status_;    \
  } while (false)

#define WDP_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, expr) \
  auto tmp = (expr);                               \
  if (!tmp.ok()) return tmp.status();              \
  lhs = std::move(tmp).value()

#define WDP_ASSIGN_OR_RETURN(lhs, expr) \
  WDP_ASSIGN_OR_RETURN_IMPL_(           \
      WDP_STATUS_CONCAT_(wdp_statusor_, __LINE__), lhs, expr)

#endif  // WISHART_DP_STATUS_H_
