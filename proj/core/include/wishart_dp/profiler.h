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

// Monte Carlo estimation of the exact privacy profile of the vector projection
// mechanism. For neighbouring unit vectors v, v' with v^T v' = rho and y = Mv,
// the ratios A = v'^T y / v^T y and B = r ||y||^2 / v^T y have the joint law
//
//   A = rho + sqrt(1 - rho^2) K2 / sqrt(K1),   B = K1 + K2^2 + K3,
//   K1 ~ chi2_r, K2 ~ N(0, 1), K3 ~ chi2_{d-2},
//
// and the privacy loss is L = ((d - r + 1)/2) ln A + (B/2)(1/A - 1), with
// L = +inf when A <= 0 (y leaves the support of the neighbouring law). The
// profile estimates delta(eps) = P(L > eps) + delta_support, where
// delta_support = E_{X ~ chi2_r}[Phi(-rho sqrt(X) / sqrt(1 - rho^2))].
//
// The estimator is one-sided (y drawn from the law of Mv); it is not
// symmetrized over the neighbour pair.

#ifndef WISHART_DP_PROFILER_H_
#define WISHART_DP_PROFILER_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/statusor.h"
#include "wishart_dp/random.h"

namespace wishart_dp {

struct RatioSample {
  double A = 1.0;
  double B = 0.0;
};

struct MonteCarloOptions {
  // 0 selects DefaultThreadCount().
  int threads = 0;
  // Samples per chunk. Each chunk draws from seed.Child(chunk index), so
  // results depend on the chunk size but never on the thread count.
  int64_t chunk_size = 1 << 16;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

absl::StatusOr<std::vector<RatioSample>> SampleRatioStats(
    double rho, int d, int r, int64_t n, const Seed& seed,
    const MonteCarloOptions& options = {});

// +infinity when sample.A <= 0.
double PrivacyLoss(const RatioSample& sample, int d, int r);

absl::StatusOr<Estimate> DeltaSupport(double rho, int r, int64_t n,
                                      const Seed& seed,
                                      const MonteCarloOptions& options = {});

struct ProfilePoint {
  double eps = 0.0;
  double delta_hat = 0.0;      // after isotonic correction
  double delta_hat_raw = 0.0;  // before isotonic correction
  double std_error = 0.0;
};

struct PrivacyProfile {
  double rho = 1.0;
  int d = 0;
  int r = 0;
  std::vector<ProfilePoint> grid;
  int64_t n_samples = 0;
  Seed seed;
  Estimate delta_support;
  // Sorted privacy-loss samples (ascending, +inf last). Kept so eps can be
  // read off at any delta, not just on the grid.
  std::vector<double> sorted_losses;

  // Smallest grid eps whose delta_hat is <= target_delta.
  std::optional<double> InvertForEpsilon(double target_delta) const;

  // Empirical eps(delta): the smallest eps with
  // P_hat(L > eps) + delta_support <= target_delta. The std_error is half the
  // width of the eps range obtained by moving the tail level by +-1 binomial
  // standard error. Empty when target_delta <= delta_support or when the
  // required tail level is below the sample resolution.
  std::optional<Estimate> EpsilonAtDelta(double target_delta) const;

  // delta_hat and its std_error at an arbitrary eps (no isotonic correction is
  // needed: the empirical tail is monotone by construction).
  Estimate DeltaAt(double eps) const;
};

// Draws the ratio samples from seed.Child(0) and the support term from
// seed.Child(1), each with n samples.
absl::StatusOr<PrivacyProfile> McPrivacyProfile(
    double rho, int d, int r, const std::vector<double>& eps_grid, int64_t n,
    const Seed& seed, const MonteCarloOptions& options = {});

// ln p(y) for y = Mv, M = Z Z^T, Z d x r with i.i.d. N(0, sigma2) entries and
// unit v; supported on the half-space v^T y > 0:
//
//   p(y) = (v^T y)^{(r-d-1)/2} exp(-||y||^2 / (2 sigma2 v^T y))
//          / (2^{r/2} Gamma(r/2) sigma^{r+d-1} (2 pi)^{(d-1)/2}).
absl::StatusOr<double> LogDensityMv(const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& v, int r,
                                    double sigma2);

// Pool-adjacent-violators fit of a nonincreasing sequence (equal weights).
std::vector<double> IsotonicNonincreasing(const std::vector<double>& values);

}  // namespace wishart_dp

#endif  // WISHART_DP_PROFILER_H_
