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

#include "wishart_dp/report_io.h"

#include <cmath>
#include <fstream>
#include <ostream>

#include "absl/strings/str_format.h"
#include "wishart_dp/status.h"

#ifndef WISHART_DP_VERSION
#define WISHART_DP_VERSION "0.0.0"
#endif

namespace wishart_dp {
namespace {

std::string CsvNumber(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return absl::StrFormat("%.17g", x);
}

Json EstimateJson(const Estimate& e) {
  return Json{{"value", JsonNumber(e.value)}, {"stderr", JsonNumber(e.std_error)}};
}

}  // namespace

std::string_view ToolVersion() { return WISHART_DP_VERSION; }

Json JsonNumber(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

Json SeedJson(const Seed& seed) {
  return Json{{"master", seed.master}, {"stream", seed.stream}};
}

Json ToJson(const VecAccountReport& r) {
  Json j;
  j["kind"] = "account_vec";
  j["inputs"] = Json{{"rho", JsonNumber(r.spec.rho)},
                     {"d", r.spec.d},
                     {"r", r.spec.r},
                     {"delta_prime", JsonNumber(r.delta_prime)}};
  j["intermediates"] =
      Json{{"t_quantile", JsonNumber(r.t_quantile)},
           {"K", JsonNumber(r.K)},
           {"a_minus", JsonNumber(r.a_minus)},
           {"a_plus", JsonNumber(r.a_plus)},
           {"b", JsonNumber(r.b)},
           {"admissibility_threshold", JsonNumber(r.admissibility_threshold)},
           {"delta_support", EstimateJson(r.delta_support)},
           {"delta_rho_unclamped", JsonNumber(r.delta_rho_unclamped)}};
  j["epsilon"] = JsonNumber(r.eps_rho);
  j["delta"] = JsonNumber(r.delta_rho);
  return j;
}

Json ToJson(const SmallRReport& r) {
  Json j;
  j["kind"] = "account_small_r";
  j["inputs"] = Json{{"eps", JsonNumber(r.eps)},
                     {"sens_frob", JsonNumber(r.sens_frob)},
                     {"s", r.s},
                     {"d", r.d},
                     {"r", r.r},
                     {"sigma", JsonNumber(r.sigma)},
                     {"alpha", JsonNumber(r.alpha)}};
  j["intermediates"] =
      Json{{"mu_bar", JsonNumber(r.mu_bar)},
           {"delta_E", JsonNumber(r.delta_E)},
           {"monotonicity_safeguard_used", r.monotonicity_safeguard_used},
           {"delta_M", JsonNumber(r.delta_M)},
           {"delta_M_unclamped", JsonNumber(r.delta_M_unclamped)},
           {"delta_total_unclamped", JsonNumber(r.delta_total_unclamped)}};
  j["epsilon"] = JsonNumber(r.eps);
  j["delta"] = JsonNumber(r.delta_total);
  return j;
}

Json ToJson(const ChooseAlphaResult& result) {
  Json j = ToJson(result.report);
  j["kind"] = "choose_alpha";
  j["intermediates"]["alpha0"] = JsonNumber(result.alpha0);
  j["intermediates"]["delta_gauss"] = JsonNumber(result.delta_gauss);
  j["intermediates"]["tail_term"] = JsonNumber(result.tail_term);
  j["intermediates"]["chosen_alpha"] = JsonNumber(result.alpha);
  return j;
}

Json ToJson(const LargeRReport& r) {
  const LargeRInputs& in = r.inputs;
  Json j;
  j["kind"] = "account_large_r";
  j["inputs"] = Json{{"d", in.d},
                     {"r", in.r},
                     {"s", in.s},
                     {"p", in.p},
                     {"delta_v", JsonNumber(in.delta_v)},
                     {"sigma_G", JsonNumber(in.sigma_G)},
                     {"sigma_M", JsonNumber(in.sigma_M)},
                     {"beta", JsonNumber(in.beta)},
                     {"delta_par", JsonNumber(in.delta_par)},
                     {"rho_perp", JsonNumber(in.rho_perp)},
                     {"delta_prime_perp", JsonNumber(in.delta_prime_perp)}};
  j["intermediates"] = Json{{"g_beta", JsonNumber(r.g_beta)},
                            {"Gamma_beta", JsonNumber(r.Gamma_beta)},
                            {"eps_par", JsonNumber(r.eps_par)},
                            {"eps_perp", JsonNumber(r.eps_perp)},
                            {"delta_perp", JsonNumber(r.delta_perp)},
                            {"delta_total_unclamped",
                             JsonNumber(r.delta_total_unclamped)},
                            {"residual", ToJson(r.residual)}};
  j["epsilon"] = JsonNumber(r.eps_total);
  j["delta"] = JsonNumber(r.delta_total);
  return j;
}

Json ToJson(const PrivacyProfile& p) {
  Json grid = Json::array();
  for (const ProfilePoint& pt : p.grid) {
    grid.push_back(Json{{"eps", JsonNumber(pt.eps)},
                        {"delta_hat", JsonNumber(pt.delta_hat)},
                        {"delta_hat_raw", JsonNumber(pt.delta_hat_raw)},
                        {"stderr", JsonNumber(pt.std_error)}});
  }
  Json j;
  j["kind"] = "privacy_profile";
  j["inputs"] = Json{{"rho", JsonNumber(p.rho)},
                     {"d", p.d},
                     {"r", p.r},
                     {"n", p.n_samples},
                     {"seed", SeedJson(p.seed)}};
  j["delta_support"] = EstimateJson(p.delta_support);
  j["grid"] = std::move(grid);
  return j;
}

Json ToJson(const MiaResult& m) {
  Json j;
  j["kind"] = "mia";
  j["auc"] = JsonNumber(m.auc);
  j["auc_stderr"] = JsonNumber(m.auc_std_error);
  j["balanced_acc"] = JsonNumber(m.balanced_acc);
  j["threshold"] = JsonNumber(m.threshold);
  j["scores_in"] = m.scores_in;
  j["scores_out"] = m.scores_out;
  return j;
}

Json ToJson(const SeparationResult& s) {
  return Json{{"kind", "separation"},
              {"n_trials", s.n_trials},
              {"n_equal", s.n_equal},
              {"max_residual", JsonNumber(s.max_residual)},
              {"min_relative_residual", JsonNumber(s.min_relative_residual)},
              {"tolerance", kSeparationTolerance}};
}

void WriteProfileCsvHeader(std::ostream& out) {
  out << "eps,delta_hat,stderr,n,rho,d,r,seed\n";
}

void WriteProfileCsvRows(std::ostream& out, const PrivacyProfile& p) {
  for (const ProfilePoint& pt : p.grid) {
    out << CsvNumber(pt.eps) << ',' << CsvNumber(pt.delta_hat) << ','
        << CsvNumber(pt.std_error) << ',' << p.n_samples << ','
        << CsvNumber(p.rho) << ',' << p.d << ',' << p.r << ','
        << ToString(p.seed) << '\n';
  }
}

void WriteProfileCsv(std::ostream& out, const PrivacyProfile& profile) {
  WriteProfileCsvHeader(out);
  WriteProfileCsvRows(out, profile);
}

void WriteMiaCsv(std::ostream& out, const MiaResult& result) {
  out << "label,score\n";
  for (double s : result.scores_in) out << "in," << CsvNumber(s) << '\n';
  for (double s : result.scores_out) out << "out," << CsvNumber(s) << '\n';
}

void WriteTrajectoryCsv(std::ostream& out,
                        const std::vector<TrajectoryRow>& trajectory) {
  out << "step,loss,grad_norm,eps_spent,delta_spent\n";
  for (const TrajectoryRow& row : trajectory) {
    out << row.step << ',' << CsvNumber(row.loss) << ','
        << CsvNumber(row.grad_norm) << ',' << CsvNumber(row.eps_spent) << ','
        << CsvNumber(row.delta_spent) << '\n';
  }
}

Json ToJson(const RunManifest& m) {
  Json params = Json::object();
  for (const auto& [k, v] : m.params) params[k] = v;
  Json j;
  j["subcommand"] = m.subcommand;
  j["params"] = std::move(params);
  j["seed"] = m.has_seed ? SeedJson(m.seed) : Json(nullptr);
  j["tool_version"] = m.tool_version;
  j["outputs"] = m.outputs;
  return j;
}

absl::Status WriteManifest(const std::string& path, const RunManifest& manifest) {
  std::ofstream out(path);
  if (!out) {
    return DomainError(absl::StrFormat("cannot write manifest '%s'", path));
  }
  out << ToJson(manifest).dump(2) << '\n';
  return out ? absl::OkStatus()
             : DomainError(absl::StrFormat("error writing manifest '%s'", path));
}

}  // namespace wishart_dp
