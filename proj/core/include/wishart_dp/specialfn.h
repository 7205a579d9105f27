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

// Scalar special functions used by the privacy accountants. All functions are
// pure and reentrant.
//
// Quantiles are found by a geometric bracket search followed by safeguarded
// Newton iteration on the CDF (or on the upper tail when p > 1/2, which keeps
// relative accuracy in the far right tail). The Student-t CDF goes through the
// regularized incomplete beta function and the chi-square CDF through the
// regularized incomplete gamma function.

#ifndef WISHART_DP_SPECIALFN_H_
#define WISHART_DP_SPECIALFN_H_

#include "absl/status/statusor.h"

namespace wishart_dp {

struct QuantileOptions {
  // Newton stops once a step is below rel_tol * |x|.
  double rel_tol = 1e-14;
  int max_iterations = 200;
};

// Lower and upper tail of a distribution evaluated at the same point. Each is
// computed directly so that neither suffers from cancellation in 1 - p.
struct TailPair {
  double lower = 0.0;
  double upper = 0.0;
};

absl::StatusOr<double> NormalCdf(double x);
absl::StatusOr<double> NormalQuantile(double p);

absl::StatusOr<double> LogGamma(double z);
absl::StatusOr<double> LogBeta(double a, double b);

// Regularized incomplete beta I_x(a, b), the Beta(a, b) CDF at x.
absl::StatusOr<double> RegIncBeta(double x, double a, double b);
// Both I_x(a, b) and 1 - I_x(a, b).
absl::StatusOr<TailPair> RegIncBetaTails(double x, double a, double b);

// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
absl::StatusOr<TailPair> RegIncGammaTails(double a, double x);

absl::StatusOr<double> StudentTCdf(double dof, double t);
absl::StatusOr<TailPair> StudentTTails(double dof, double t);
absl::StatusOr<double> StudentTQuantile(double dof, double p,
                                        const QuantileOptions& options = {});

absl::StatusOr<double> ChiSquareCdf(double dof, double x);
absl::StatusOr<TailPair> ChiSquareTails(double dof, double x);
absl::StatusOr<double> ChiSquareQuantile(double dof, double p,
                                         const QuantileOptions& options = {});

namespace internal {

// Unchecked standard normal CDF for hot loops. x may be +-infinity.
double StandardNormalCdf(double x);

}  // namespace internal
}  // namespace wishart_dp

#endif  // WISHART_DP_SPECIALFN_H_
