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

#include "wishart_dp/status.h"

#include <string>

#include "absl/strings/cord.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace wishart_dp {
namespace {

constexpr char kKindUrl[] = "wishart_dp/kind";
constexpr char kThresholdUrl[] = "wishart_dp/threshold";
constexpr char kConditionUrl[] = "wishart_dp/condition";

absl::Status WithKind(absl::Status status, ErrorKind kind) {
  status.SetPayload(kKindUrl, absl::Cord(std::string(ErrorKindName(kind))));
  return status;
}

}  // namespace

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNone:
      return "none";
    case ErrorKind::kDomain:
      return "domain";
    case ErrorKind::kDegenerateInput:
      return "degenerate-input";
    case ErrorKind::kConfig:
      return "config";
    case ErrorKind::kInadmissibleAlignment:
      return "inadmissible-alignment";
    case ErrorKind::kRegime:
      return "regime";
    case ErrorKind::kConvergence:
      return "convergence";
  }
  return "unknown";
}

absl::Status DomainError(std::string_view message) {
  return WithKind(absl::InvalidArgumentError(std::string(message)), ErrorKind::kDomain);
}

absl::Status DegenerateInputError(std::string_view message) {
  return WithKind(absl::InvalidArgumentError(std::string(message)),
                  ErrorKind::kDegenerateInput);
}

absl::Status ConfigError(std::string_view message) {
  return WithKind(absl::InvalidArgumentError(std::string(message)), ErrorKind::kConfig);
}

absl::Status ConvergenceError(std::string_view message) {
  return WithKind(absl::AbortedError(std::string(message)), ErrorKind::kConvergence);
}

absl::Status InadmissibleAlignmentError(std::string_view message,
                                        double threshold) {
  absl::Status status = WithKind(
      absl::FailedPreconditionError(
          absl::StrCat(std::string(message), " (admissibility threshold ",
                       threshold, ")")),
      ErrorKind::kInadmissibleAlignment);
  status.SetPayload(kThresholdUrl,
                    absl::Cord(absl::StrFormat("%.17g", threshold)));
  return status;
}

absl::Status RegimeError(std::string_view condition, std::string_view message,
                         double bound) {
  absl::Status status =
      WithKind(absl::FailedPreconditionError(absl::StrCat(
                   std::string(condition), " condition violated: ",
                   std::string(message))),
               ErrorKind::kRegime);
  status.SetPayload(kConditionUrl, absl::Cord(std::string(condition)));
  status.SetPayload(kThresholdUrl, absl::Cord(absl::StrFormat("%.17g", bound)));
  return status;
}

ErrorKind KindOf(const absl::Status& status) {
  if (status.ok()) return ErrorKind::kNone;
  auto payload = status.GetPayload(kKindUrl);
  if (!payload.has_value()) {
    return status.code() == absl::StatusCode::kAborted ? ErrorKind::kConvergence
                                                       : ErrorKind::kDomain;
  }
  const std::string name(*payload);
  for (ErrorKind kind :
       {ErrorKind::kDomain, ErrorKind::kDegenerateInput, ErrorKind::kConfig,
        ErrorKind::kInadmissibleAlignment, ErrorKind::kRegime,
        ErrorKind::kConvergence}) {
    if (name == ErrorKindName(kind)) return kind;
  }
  return ErrorKind::kDomain;
}

std::optional<double> ThresholdOf(const absl::Status& status) {
  auto payload = status.GetPayload(kThresholdUrl);
  if (!payload.has_value()) return std::nullopt;
  double value = 0.0;
  if (!absl::SimpleAtod(std::string(*payload), &value)) return std::nullopt;
  return value;
}

std::optional<std::string> ConditionOf(const absl::Status& status) {
  auto payload = status.GetPayload(kConditionUrl);
  if (!payload.has_value()) return std::nullopt;
  return std::string(*payload);
}

}  // namespace wishart_dp
