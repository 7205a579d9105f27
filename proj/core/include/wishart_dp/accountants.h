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

// Closed-form privacy accounting for the Wishart projection mechanism.
//
// Vector regime. For unit queries with minimum neighbour alignment rho, the
// noise-free mechanism v -> Mv with M ~ W_d(I/r, r) is (eps_rho, delta_rho)-DP,
//
//   K         = sqrt((1 - rho^2) / r) * t_r(1 - delta')
//   eps_rho   = ((d - r + 1)/2) ln(rho + K)
//               + (1 - rho + K) kappa_{d+r-1}(1 - delta') / (2 (rho - K))
//   delta_rho = delta_support + 3 delta'
//
// where t_r and kappa_l are Student-t and chi-square quantiles, provided
// rho > t_r(1 - delta') / sqrt(r + t_r(1 - delta')^2).
//
// Small-rank regime (M2 with sigma). Conditional on the event that col(M)
// captures at most a fraction alpha of ||dV||_F^2, the release is a Gaussian
// mechanism with privacy-loss mean mu_bar/2, mu_bar = alpha ||dV||_F^2 /
// sigma^2, giving
//
//   delta_total = T(eps; mu_bar) + s [1 - I_alpha(r/2, (d - r)/2)],
//   T(eps; mu)  = Phi((-eps - mu/2)/sqrt(mu)) + 1 - Phi((eps - mu/2)/sqrt(mu)),
//
// with s = rank(dV).
//
// Large-rank regime. The output splits into a block parallel to the
// conditioning subspace, handled as a Gaussian mechanism with operator bound
// Gamma_beta, and a residual handled by the vector accountant in dimension
// (d - s) x (r - p).
//
// Probabilities in reports are clamped to [0, 1]; the unclamped values are kept
// alongside for debugging.

#ifndef WISHART_DP_ACCOUNTANTS_H_
#define WISHART_DP_ACCOUNTANTS_H_

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/statusor.h"
#include "wishart_dp/profiler.h"
#include "wishart_dp/random.h"
#include "wishart_dp/specialfn.h"

namespace wishart_dp {

struct AlignmentSpec {
  double rho = 1.0;
  int d = 2;
  int r = 1;
};

// Minimum cosine over the declared neighbour pairs. Each vector must be unit
// to within 1e-8; it is renormalized before the inner product.
absl::StatusOr<double> MinAlignment(
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs);

// max(-1, 1 - 8 L^2 / (c0^2 n^2)) for a mean of n vectors of norm at most L
// whose average has norm at least c0.
absl::StatusOr<double> AlignmentLowerBound(double lipschitz, double c0, int n);

// Smallest alignment the vector accountant admits:
// t_r(1 - delta') / sqrt(r + t_r(1 - delta')^2).
absl::StatusOr<double> AdmissibleAlignmentThreshold(
    int r, double delta_prime, const QuantileOptions& quantile = {});

struct VecAccountOptions {
  int64_t support_samples = 1'000'000;
  Seed support_seed{0, 0};
  MonteCarloOptions monte_carlo;
  QuantileOptions quantile;
};

struct VecAccountReport {
  AlignmentSpec spec;
  double delta_prime = 0.0;
  double t_quantile = 0.0;  // t_r(1 - delta')
  double K = 0.0;
  double a_minus = 0.0;
  double a_plus = 0.0;
  double b = 0.0;  // kappa_{d+r-1}(1 - delta')
  double admissibility_threshold = 0.0;
  Estimate delta_support;
  double delta_rho = 0.0;
  double delta_rho_unclamped = 0.0;
  double eps_rho = 0.0;

  // Recomputes eps_rho from (spec, K, a_minus, a_plus, b).
  double EpsilonFromIntermediates() const;
};

absl::StatusOr<VecAccountReport> AccountVec(
    const AlignmentSpec& spec, double delta_prime,
    const VecAccountOptions& options = {});

// T(eps; mu); zero when mu == 0.
absl::StatusOr<double> GaussianTradeoff(double eps, double mu);

// min(1, s [1 - I_alpha(r/2, (d - r)/2)]) and the value before clamping.
struct BoundValue {
  double value = 0.0;
  double unclamped = 0.0;
};
absl::StatusOr<BoundValue> DeltaMBound(int64_t s, double alpha, int r, int d);

// min(1, 2 exp(-eta^2 r / 72)).
absl::StatusOr<BoundValue> BetaTailBound(double eta, int64_t r);

struct SmallRReport {
  double eps = 0.0;
  double sens_frob = 0.0;
  int64_t s = 1;
  int d = 0;
  int r = 0;
  double sigma = 0.0;
  double alpha = 0.0;
  double mu_bar = 0.0;
  double delta_E = 0.0;
  // True when T(eps; .) was found non-monotone on the grid below mu_bar and
  // delta_E was raised to the grid maximum.
  bool monotonicity_safeguard_used = false;
  double delta_M = 0.0;
  double delta_M_unclamped = 0.0;
  double delta_total = 0.0;
  double delta_total_unclamped = 0.0;
};

absl::StatusOr<SmallRReport> AccountSmallR(double eps, double sens_frob,
                                           int64_t s, int d, int r,
                                           double sigma, double alpha);

enum class TailRule {
  // s [1 - I_alpha(r/2, (d - r)/2)] <= T(eps; mu)/2, the exact Beta tail.
  kExactBeta,
  // 2 s exp(-eta^2 r / 72) <= T(eps; mu)/2, the closed-form sufficient
  // condition. Much stricter at moderate r.
  kExponential,
};

struct ChooseAlphaOptions {
  TailRule tail_rule = TailRule::kExactBeta;
  double alpha0_tolerance = 1e-10;
  int max_iterations = 200;
};

struct ChooseAlphaResult {
  double alpha = 0.0;
  double alpha0 = 0.0;       // T(eps; alpha0 mu) = T(eps; mu) / 2
  double delta_gauss = 0.0;  // T(eps; mu)
  double tail_term = 0.0;    // left-hand side of the lower condition
  SmallRReport report;       // with sens_frob = sqrt(mu), sigma = 1
};

// Picks alpha = (1 + eta) r / d and verifies both regime conditions:
//   lower: the tail term is <= delta_gauss / 2,
//   upper: alpha <= alpha0.
// On failure returns a regime error naming the condition; for "lower" the
// bound is the smallest rank that satisfies it, for "upper" the largest.
absl::StatusOr<ChooseAlphaResult> ChooseAlpha(
    double eps, double mu, int64_t s, int d, int r, double eta,
    const ChooseAlphaOptions& options = {});

// (72 / eta^2) ln(4 s / delta_gauss): the rank above which the exponential
// tail rule holds.
double ExponentialRuleMinRank(double eta, int64_t s, double delta_gauss);

struct LargeRInputs {
  int d = 0;
  int r = 0;
  int s = 0;
  int p = 0;
  double delta_v = 0.0;
  double sigma_G = 1.0;
  double sigma_M = 0.0;
  double beta = 0.0;
  double delta_par = 0.0;
  // Alignment of the residual components across neighbours. Not derivable
  // from (d, r, s, p); the caller must supply it.
  double rho_perp = 1.0;
  double delta_prime_perp = 0.0;
};

struct LargeRReport {
  LargeRInputs inputs;
  double g_beta = 0.0;
  double Gamma_beta = 0.0;
  double eps_par = 0.0;
  VecAccountReport residual;
  double eps_perp = 0.0;
  double delta_perp = 0.0;
  double eps_total = 0.0;
  double delta_total = 0.0;
  double delta_total_unclamped = 0.0;
};

absl::StatusOr<LargeRReport> AccountLargeR(
    const LargeRInputs& inputs, const VecAccountOptions& options = {});

struct Budget {
  double eps = 0.0;
  double delta = 0.0;
};

// Sum of the budgets, repeated k times when k is given.
absl::StatusOr<Budget> ComposeBasic(const std::vector<Budget>& budgets,
                                    std::optional<int64_t> k = std::nullopt);

// T(eps; sum mu_t) + T * delta_p, clamped to 1.
absl::StatusOr<double> ComposeGaussianSteps(const std::vector<double>& mus,
                                            double eps, double per_step_delta_p);

struct JlZeta {
  double zeta = 0.0;
  // zeta >= 1: the norm-distortion bound carries no information.
  bool vacuous = false;
};

// sqrt(12 ln(2n / delta_jl) / r).
absl::StatusOr<JlZeta> JlClipZeta(int64_t n, int64_t r, double delta_jl);

}  // namespace wishart_dp

#endif  // WISHART_DP_ACCOUNTANTS_H_
