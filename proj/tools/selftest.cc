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

#include "selftest.h"

#include <cmath>
#include <functional>

#include "absl/status/statusor.h"
#include "absl/strings/str_format.h"
#include "wishart_dp/accountants.h"

namespace wishart_dp::cli {
namespace {

class Table {
 public:
  // |value - expected| <= tol.
  void Near(const std::string& name, const absl::StatusOr<double>& value,
            double expected, double tol) {
    Add(name, value, expected, tol, [&](double v) {
      return std::fabs(v - expected) <= tol;
    });
  }

  // |value - expected| <= tol * |expected|.
  void Rel(const std::string& name, const absl::StatusOr<double>& value,
           double expected, double tol) {
    Add(name, value, expected, tol, [&](double v) {
      return std::fabs(v - expected) <= tol * std::fabs(expected);
    });
  }

  // lo < value < hi; `expected` records the midpoint.
  void Inside(const std::string& name, const absl::StatusOr<double>& value,
              double lo, double hi) {
    Add(name, value, 0.5 * (lo + hi), 0.5 * (hi - lo),
        [&](double v) { return v > lo && v < hi; });
  }

  std::vector<SelfCheck> Take() { return std::move(checks_); }

 private:
  void Add(const std::string& name, const absl::StatusOr<double>& value,
           double expected, double tol, const std::function<bool(double)>& ok) {
    SelfCheck c;
    c.name = name;
    c.expected = expected;
    c.tolerance = tol;
    if (value.ok()) {
      c.value = *value;
      c.pass = ok(*value);
    } else {
      c.value = std::nan("");
      c.status = value.status();
    }
    checks_.push_back(std::move(c));
  }

  std::vector<SelfCheck> checks_;
};

}  // namespace

std::vector<SelfCheck> RunSelfChecks(const QuantileOptions& q) {
  Table t;
  t.Near("normal_cdf(0)", NormalCdf(0.0), 0.5, 0.0);
  t.Near("normal_cdf(40)", NormalCdf(40.0), 1.0, 1e-15);
  t.Near("normal_cdf(1.959964)", NormalCdf(1.959964), 0.975, 1e-6);

  t.Near("student_t_quantile(5, 0.5)", StudentTQuantile(5, 0.5, q), 0.0, 0.0);
  t.Near("student_t_quantile(1, 0.975)", StudentTQuantile(1, 0.975, q), 12.7062, 1e-3);
  t.Rel("student_t_quantile(1, 0.975) vs tan", StudentTQuantile(1, 0.975, q),
        std::tan(M_PI * 0.475), 1e-12);
  t.Near("student_t_quantile(2, 0.95)", StudentTQuantile(2, 0.95, q), 2.9200, 1e-3);
  t.Rel("student_t_quantile(2, 0.95) vs closed form", StudentTQuantile(2, 0.95, q),
        std::sqrt(2.0 / (4 * 0.95 * 0.05) - 2.0), 1e-12);

  t.Rel("chi2_quantile(2, 0.95)", ChiSquareQuantile(2, 0.95, q), -2 * std::log(0.05),
        1e-12);
  t.Near("chi2_quantile(1, 0.6826894921)", ChiSquareQuantile(1, 0.6826894921, q), 1.0,
         1e-6);
  t.Inside("chi2_quantile(10, 1e-12)", ChiSquareQuantile(10, 1e-12, q), 0.0, 0.1);

  t.Near("reg_inc_beta(1, 2.5, 7)", RegIncBeta(1.0, 2.5, 7.0), 1.0, 0.0);
  t.Near("reg_inc_beta(0.5, 1, 1)", RegIncBeta(0.5, 1.0, 1.0), 0.5, 1e-15);
  t.Near("reg_inc_beta(0.25, 2, 3)", RegIncBeta(0.25, 2.0, 3.0), 0.2617, 1e-4);
  const double x = 0.25;
  t.Rel("reg_inc_beta(0.25, 2, 3) vs polynomial", RegIncBeta(x, 2.0, 3.0),
        6 * x * x - 8 * x * x * x + 3 * x * x * x * x, 1e-13);

  t.Near("log_gamma(1)", LogGamma(1.0), 0.0, 0.0);
  t.Rel("log_gamma(0.5)", LogGamma(0.5), 0.5 * std::log(M_PI), 1e-12);
  t.Rel("log_gamma(5)", LogGamma(5.0), std::log(24.0), 1e-12);

  for (double nu : {1.0, 2.0, 5.0, 50.0, 500.0}) {
    for (double p : {1e-6, 0.01, 0.5, 0.99, 1 - 1e-6}) {
      absl::StatusOr<double> tq = StudentTQuantile(nu, p, q);
      t.Near(absl::StrFormat("student_t_cdf(%g, quantile(%g))", nu, p),
             tq.ok() ? StudentTCdf(nu, *tq) : tq, p, 1e-9);
      absl::StatusOr<double> cq = ChiSquareQuantile(nu, p, q);
      t.Near(absl::StrFormat("chi2_cdf(%g, quantile(%g))", nu, p),
             cq.ok() ? ChiSquareCdf(nu, *cq) : cq, p, 1e-9);
    }
  }

  t.Near("gaussian_tradeoff(1, 0)", GaussianTradeoff(1.0, 0.0), 0.0, 0.0);
  absl::StatusOr<ChooseAlphaResult> alpha = ChooseAlpha(1.0, 4.0, 1, 2048, 64, 0.5);
  t.Near("choose_alpha(1, 4, 1, 2048, 64, 0.5).alpha",
         alpha.ok() ? absl::StatusOr<double>(alpha->alpha) : alpha.status(), 0.046875,
         0.0);
  if (alpha.ok()) {
    t.Inside("choose_alpha delta_total / delta_gauss",
             alpha->report.delta_total / alpha->delta_gauss, 0.0, 1.0);
  }
  absl::StatusOr<double> threshold = AdmissibleAlignmentThreshold(16, 0.01, q);
  absl::StatusOr<double> t16 = StudentTQuantile(16, 0.99, q);
  if (t16.ok()) {
    t.Rel("admissibility threshold(16, 0.01)", threshold,
          *t16 / std::sqrt(16 + *t16 * *t16), 1e-15);
  } else {
    t.Near("admissibility threshold(16, 0.01)", t16, 0.0, 0.0);
  }
  return t.Take();
}

}  // namespace wishart_dp::cli
