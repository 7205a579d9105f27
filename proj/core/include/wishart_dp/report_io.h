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

// Stable serialization of reports. Accounting reports share the top-level
// layout {"kind", "inputs", "intermediates", "epsilon", "delta"}. Non-finite
// numbers are written as the strings "inf", "-inf" and "nan".

#ifndef WISHART_DP_REPORT_IO_H_
#define WISHART_DP_REPORT_IO_H_

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "nlohmann/json.hpp"
#include "wishart_dp/accountants.h"
#include "wishart_dp/attacks.h"
#include "wishart_dp/profiler.h"
#include "wishart_dp/random.h"
#include "wishart_dp/trainer.h"

namespace wishart_dp {

using Json = nlohmann::ordered_json;

std::string_view ToolVersion();

Json JsonNumber(double x);
Json SeedJson(const Seed& seed);

Json ToJson(const VecAccountReport& report);
Json ToJson(const SmallRReport& report);
Json ToJson(const ChooseAlphaResult& result);
Json ToJson(const LargeRReport& report);
Json ToJson(const PrivacyProfile& profile);
Json ToJson(const MiaResult& result);
Json ToJson(const SeparationResult& result);

// eps,delta_hat,stderr,n,rho,d,r,seed
void WriteProfileCsv(std::ostream& out, const PrivacyProfile& profile);
void WriteProfileCsvHeader(std::ostream& out);
void WriteProfileCsvRows(std::ostream& out, const PrivacyProfile& profile);

// label,score with label "in" or "out".
void WriteMiaCsv(std::ostream& out, const MiaResult& result);

// step,loss,grad_norm,eps_spent,delta_spent
void WriteTrajectoryCsv(std::ostream& out,
                        const std::vector<TrajectoryRow>& trajectory);

struct RunManifest {
  std::string subcommand;
  std::map<std::string, std::string> params;
  Seed seed;
  bool has_seed = false;
  std::string tool_version{ToolVersion()};
  std::vector<std::string> outputs;
};

Json ToJson(const RunManifest& manifest);
absl::Status WriteManifest(const std::string& path, const RunManifest& manifest);

}  // namespace wishart_dp

#endif  // WISHART_DP_REPORT_IO_H_
