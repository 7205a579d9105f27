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

#include "wishart_dp/accountants.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"
#include "wishart_dp/status.h"

namespace wishart_dp {
namespace {

absl::Status CheckOpenProbability(double p, const char* name) {
  if (!(p > 0.0 && p < 1.0)) {
    return DomainError(absl::StrFormat("%s must lie in (0, 1), got %g", name, p));
  }
  return absl::OkStatus();
}

double Tradeoff(double eps, double mu) {
  if (mu == 0.0) return 0.0;
  const double sq = std::sqrt(mu);
  const double lo = (-eps - 0.5 * mu) / sq;
  const double hi = (0.5 * mu - eps) / sq;
  if (hi <= 0.0) {
    return internal::StandardNormalCdf(lo) + internal::StandardNormalCdf(hi);
  }
  // Complement form: 1 - P(lo < Z < -hi). Both endpoints are negative, so the
  // interval mass is accurate and vanishes exactly at eps = 0.
  return 1.0 - (internal::StandardNormalCdf(-hi) - internal::StandardNormalCdf(lo));
}

// Upper Beta tail 1 - I_alpha(r/2, (d - r)/2), computed without cancellation.
absl::StatusOr<double> BetaSurvival(double alpha, int r, int d) {
  WDP_ASSIGN_OR_RETURN(const TailPair tails,
                       RegIncBetaTails(alpha, 0.5 * r, 0.5 * (d - r)));
  return tails.upper;
}

}  // namespace

absl::StatusOr<double> MinAlignment(
    const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& pairs) {
  if (pairs.empty()) return DomainError("min_alignment: no neighbour pairs");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [v, w] : pairs) {
    if (v.size() != w.size() || v.size() == 0) {
      return DomainError("min_alignment: pair dimension mismatch");
    }
    const double nv = v.norm();
    const double nw = w.norm();
    if (std::fabs(nv - 1.0) > 1e-8 || std::fabs(nw - 1.0) > 1e-8) {
      return DomainError(absl::StrFormat(
          "min_alignment: vectors must be unit (norms %.17g, %.17g)", nv, nw));
    }
    best = std::min(best, v.dot(w) / (nv * nw));
  }
  return std::clamp(best, -1.0, 1.0);
}

absl::StatusOr<double> AlignmentLowerBound(double lipschitz, double c0, int n) {
  if (!(lipschitz >= 0.0)) return DomainError("L must be nonnegative");
  if (!(c0 > 0.0)) return DomainError("c0 must be positive");
  if (n < 1) return DomainError("n must be >= 1");
  const double nn = static_cast<double>(n);
  return std::max(-1.0, 1.0 - 8.0 * lipschitz * lipschitz / (c0 * c0 * nn * nn));
}

absl::StatusOr<double> AdmissibleAlignmentThreshold(
    int r, double delta_prime, const QuantileOptions& quantile) {
  if (r < 1) return DomainError(absl::StrFormat("r must be >= 1, got %d", r));
  WDP_RETURN_IF_ERROR(CheckOpenProbability(delta_prime, "delta'"));
  WDP_ASSIGN_OR_RETURN(const double t,
                       StudentTQuantile(r, 1.0 - delta_prime, quantile));
  return t / std::sqrt(r + t * t);
}

double VecAccountReport::EpsilonFromIntermediates() const {
  return 0.5 * (spec.d - spec.r + 1) * std::log(a_plus) +
         (1.0 - spec.rho + K) * b / (2.0 * a_minus);
}

absl::StatusOr<VecAccountReport> AccountVec(const AlignmentSpec& spec,
                                            double delta_prime,
                                            const VecAccountOptions& options) {
  if (spec.d < 2) return DomainError(absl::StrFormat("d must be >= 2, got %d", spec.d));
  if (spec.r < 1) return DomainError(absl::StrFormat("r must be >= 1, got %d", spec.r));
  if (!(spec.rho > 0.0 && spec.rho <= 1.0)) {
    return DomainError(
        absl::StrFormat("alignment rho must lie in (0, 1], got %g", spec.rho));
  }
  WDP_RETURN_IF_ERROR(CheckOpenProbability(delta_prime, "delta'"));

  VecAccountReport report;
  report.spec = spec;
  report.delta_prime = delta_prime;
  WDP_ASSIGN_OR_RETURN(report.t_quantile,
                       StudentTQuantile(spec.r, 1.0 - delta_prime, options.quantile));
  const double t = report.t_quantile;
  report.admissibility_threshold = t / std::sqrt(spec.r + t * t);
  if (!(spec.rho > report.admissibility_threshold)) {
    return InadmissibleAlignmentError(
        absl::StrFormat("alignment rho=%.17g must exceed t_r(1-delta')/"
                        "sqrt(r + t^2) = %.17g (r=%d, delta'=%g)",
                        spec.rho, report.admissibility_threshold, spec.r,
                        delta_prime),
        report.admissibility_threshold);
  }
  report.K = std::sqrt((1.0 - spec.rho * spec.rho) / spec.r) * t;
  report.a_minus = spec.rho - report.K;
  report.a_plus = spec.rho + report.K;
  WDP_ASSIGN_OR_RETURN(
      report.b, ChiSquareQuantile(spec.d + spec.r - 1, 1.0 - delta_prime,
                                  options.quantile));
  report.eps_rho = report.EpsilonFromIntermediates();
  WDP_ASSIGN_OR_RETURN(
      report.delta_support,
      DeltaSupport(spec.rho, spec.r, options.support_samples,
                   options.support_seed, options.monte_carlo));
  report.delta_rho_unclamped = report.delta_support.value + 3.0 * delta_prime;
  report.delta_rho = std::clamp(report.delta_rho_unclamped, 0.0, 1.0);
  return report;
}

absl::StatusOr<double> GaussianTradeoff(double eps, double mu) {
  if (!(mu >= 0.0) || std::isinf(mu)) {
    return DomainError(absl::StrFormat("mu must be finite and >= 0, got %g", mu));
  }
  if (std::isnan(eps)) return DomainError("eps is NaN");
  return std::clamp(Tradeoff(eps, mu), 0.0, 1.0);
}

absl::StatusOr<BoundValue> DeltaMBound(int64_t s, double alpha, int r, int d) {
  if (s < 1) return DomainError("s must be >= 1");
  if (!(r >= 1 && r <= d - 1)) {
    return DomainError(
        absl::StrFormat("delta_M bound needs 1 <= r <= d - 1 (r=%d, d=%d)", r, d));
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    return DomainError(absl::StrFormat("alpha must lie in (0, 1], got %g", alpha));
  }
  WDP_ASSIGN_OR_RETURN(const double tail, BetaSurvival(alpha, r, d));
  const double raw = static_cast<double>(s) * tail;
  return BoundValue{std::min(1.0, raw), raw};
}

absl::StatusOr<BoundValue> BetaTailBound(double eta, int64_t r) {
  if (!(eta > 0.0 && eta < 1.0)) {
    return DomainError(absl::StrFormat("eta must lie in (0, 1), got %g", eta));
  }
  if (r < 1) return DomainError("r must be >= 1");
  const double raw = 2.0 * std::exp(-eta * eta * static_cast<double>(r) / 72.0);
  return BoundValue{std::min(1.0, raw), raw};
}

absl::StatusOr<SmallRReport> AccountSmallR(double eps, double sens_frob,
                                           int64_t s, int d, int r,
                                           double sigma, double alpha) {
  if (!(eps > 0.0)) return DomainError(absl::StrFormat("eps must be > 0, got %g", eps));
  if (!(sens_frob >= 0.0)) return DomainError("sensitivity must be >= 0");
  if (!(sigma > 0.0)) return DomainError(absl::StrFormat("sigma must be > 0, got %g", sigma));
  SmallRReport report;
  report.eps = eps;
  report.sens_frob = sens_frob;
  report.s = s;
  report.d = d;
  report.r = r;
  report.sigma = sigma;
  report.alpha = alpha;
  WDP_ASSIGN_OR_RETURN(const BoundValue delta_m, DeltaMBound(s, alpha, r, d));
  report.delta_M = delta_m.value;
  report.delta_M_unclamped = delta_m.unclamped;
  report.mu_bar = alpha * sens_frob * sens_frob / (sigma * sigma);
  report.delta_E = Tradeoff(eps, report.mu_bar);
  if (report.mu_bar > 0.0) {
    // The conditional argument needs T(eps; .) nondecreasing on [0, mu_bar].
    // Probe a log grid; if that fails anywhere, use the grid maximum.
    constexpr int kGrid = 64;
    const double lo = std::min(1e-6, report.mu_bar);
    const double step = std::log(report.mu_bar / lo) / (kGrid - 1);
    double grid_max = 0.0;
    for (int i = 0; i < kGrid; ++i) {
      grid_max = std::max(grid_max, Tradeoff(eps, lo * std::exp(step * i)));
    }
    if (grid_max > report.delta_E * (1.0 + 1e-12)) {
      report.delta_E = grid_max;
      report.monotonicity_safeguard_used = true;
    }
  }
  report.delta_E = std::clamp(report.delta_E, 0.0, 1.0);
  report.delta_total_unclamped = report.delta_E + report.delta_M_unclamped;
  report.delta_total = std::min(1.0, report.delta_E + report.delta_M);
  return report;
}

double ExponentialRuleMinRank(double eta, int64_t s, double delta_gauss) {
  return 72.0 / (eta * eta) * std::log(4.0 * static_cast<double>(s) / delta_gauss);
}

absl::StatusOr<ChooseAlphaResult> ChooseAlpha(
    double eps, double mu, int64_t s, int d, int r, double eta,
    const ChooseAlphaOptions& options) {
  if (!(eps > 0.0)) return DomainError("eps must be > 0");
  if (!(mu > 0.0)) return DomainError("mu must be > 0");
  if (!(eta > 0.0 && eta < 1.0)) return DomainError("eta must lie in (0, 1)");
  if (s < 1) return DomainError("s must be >= 1");
  if (!(r >= 1 && 2 * r <= d)) {
    return DomainError(
        absl::StrFormat("choose_alpha needs 1 <= r <= d/2 (r=%d, d=%d)", r, d));
  }
  ChooseAlphaResult result;
  result.delta_gauss = Tradeoff(eps, mu);
  const double half = 0.5 * result.delta_gauss;

  // Bisection for T(eps; a mu) = half on a in (0, 1).
  double lo = 0.0;
  double hi = 1.0;
  int it = 0;
  while (hi - lo > options.alpha0_tolerance) {
    if (++it > options.max_iterations) {
      return ConvergenceError(absl::StrFormat(
          "alpha0 bisection did not reach tolerance %g in %d iterations",
          options.alpha0_tolerance, options.max_iterations));
    }
    const double mid = 0.5 * (lo + hi);
    if (Tradeoff(eps, mid * mu) < half) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  result.alpha0 = 0.5 * (lo + hi);
  result.alpha = (1.0 + eta) * r / d;

  auto tail_term = [&](int rank) -> absl::StatusOr<double> {
    if (options.tail_rule == TailRule::kExponential) {
      return 2.0 * static_cast<double>(s) *
             std::exp(-eta * eta * rank / 72.0);
    }
    WDP_ASSIGN_OR_RETURN(const double tail,
                         BetaSurvival((1.0 + eta) * rank / d, rank, d));
    return static_cast<double>(s) * tail;
  };
  WDP_ASSIGN_OR_RETURN(result.tail_term, tail_term(r));

  const double closed_form = ExponentialRuleMinRank(eta, s, result.delta_gauss);
  if (!(result.tail_term <= half)) {
    double min_rank = closed_form;
    bool found = false;
    if (options.tail_rule == TailRule::kExactBeta) {
      for (int rank = r + 1; 2 * rank <= d; ++rank) {
        WDP_ASSIGN_OR_RETURN(const double term, tail_term(rank));
        if (term <= half) {
          min_rank = rank;
          found = true;
          break;
        }
      }
    } else {
      min_rank = std::ceil(closed_form);
      found = 2.0 * min_rank <= d;
    }
    return RegimeError(
        "lower",
        absl::StrFormat(
            "lower condition fails at r=%d: failure term %.6g exceeds "
            "delta_gauss/2 = %.6g; minimal r satisfying it: %s; closed-form "
            "threshold (72/eta^2) ln(4s/delta_gauss) = %.6g",
            r, result.tail_term, half,
            found ? absl::StrFormat("%d", static_cast<int>(min_rank))
                  : absl::StrFormat("none with r <= d/2 = %d", d / 2),
            closed_form),
        min_rank);
  }
  if (!(result.alpha <= result.alpha0)) {
    const double max_rank = std::floor(result.alpha0 * d / (1.0 + eta));
    return RegimeError(
        "upper",
        absl::StrFormat("upper condition fails at r=%d: alpha=(1+eta)r/d=%.6g "
                        "exceeds alpha0=%.6g; maximal r satisfying it: %d",
                        r, result.alpha, result.alpha0,
                        static_cast<int>(max_rank)),
        max_rank);
  }
  WDP_ASSIGN_OR_RETURN(result.report, AccountSmallR(eps, std::sqrt(mu), s, d, r,
                                                    1.0, result.alpha));
  if (!(result.report.delta_total < result.delta_gauss)) {
    return absl::InternalError(absl::StrFormat(
        "choose_alpha postcondition violated: delta_total=%.17g >= "
        "delta_gauss=%.17g",
        result.report.delta_total, result.delta_gauss));
  }
  return result;
}

absl::StatusOr<LargeRReport> AccountLargeR(const LargeRInputs& in,
                                           const VecAccountOptions& options) {
  if (in.d < 1 || in.r < 1 || in.s < 0 || in.p < 0) {
    return DomainError("dimensions must be positive");
  }
  if (in.p > std::min(in.s, in.r)) {
    return DomainError(absl::StrFormat("p=%d exceeds min(s, r)=%d", in.p,
                                       std::min(in.s, in.r)));
  }
  if (in.r <= in.p) {
    return DegenerateInputError(absl::StrFormat(
        "degenerate residual: r=%d <= p=%d leaves no residual rank", in.r, in.p));
  }
  if (in.d <= in.s) {
    return DomainError(absl::StrFormat("d=%d must exceed s=%d", in.d, in.s));
  }
  if (!(in.delta_v >= 0.0)) return DomainError("delta_v must be >= 0");
  if (!(in.sigma_G > 0.0)) return DomainError("sigma_G must be > 0");
  if (!(in.sigma_M > 0.0)) return DomainError("sigma_M must be > 0");
  WDP_RETURN_IF_ERROR(CheckOpenProbability(in.beta, "beta"));
  WDP_RETURN_IF_ERROR(CheckOpenProbability(in.delta_par, "delta_par"));

  LargeRReport report;
  report.inputs = in;
  const double sqrt_p = std::sqrt(static_cast<double>(in.p));
  report.g_beta = std::sqrt(2.0 * std::log(2.0 / in.beta));
  report.Gamma_beta = in.sigma_M * in.sigma_M *
                      (std::sqrt(static_cast<double>(in.d)) + sqrt_p +
                       report.g_beta) *
                      (sqrt_p + report.g_beta);
  report.eps_par = report.Gamma_beta * in.delta_v / in.sigma_G *
                   std::sqrt(2.0 * std::log(1.25 / in.delta_par));
  WDP_ASSIGN_OR_RETURN(
      report.residual,
      AccountVec(AlignmentSpec{in.rho_perp, in.d - in.s, in.r - in.p},
                 in.delta_prime_perp, options));
  report.eps_perp = report.residual.eps_rho;
  report.delta_perp = report.residual.delta_rho;
  report.eps_total = report.eps_par + report.eps_perp;
  report.delta_total_unclamped = in.delta_par + report.delta_perp + in.beta;
  report.delta_total = std::min(1.0, report.delta_total_unclamped);
  return report;
}

absl::StatusOr<Budget> ComposeBasic(const std::vector<Budget>& budgets,
                                    std::optional<int64_t> k) {
  if (budgets.empty()) return DomainError("compose_basic: no budgets");
  if (k.has_value() && *k < 1) return DomainError("compose_basic: k must be >= 1");
  Budget total;
  for (const Budget& b : budgets) {
    if (!(b.eps >= 0.0) || !(b.delta >= 0.0)) {
      return DomainError("compose_basic: budgets must be nonnegative");
    }
    total.eps += b.eps;
    total.delta += b.delta;
  }
  const double times = static_cast<double>(k.value_or(1));
  total.eps *= times;
  total.delta *= times;
  return total;
}

absl::StatusOr<double> ComposeGaussianSteps(const std::vector<double>& mus,
                                            double eps,
                                            double per_step_delta_p) {
  double total_mu = 0.0;
  for (double mu : mus) {
    if (!(mu >= 0.0)) return DomainError("every mu_t must be >= 0");
    total_mu += mu;
  }
  if (!(per_step_delta_p >= 0.0 && per_step_delta_p <= 1.0)) {
    return DomainError("per-step delta_p must lie in [0, 1]");
  }
  WDP_ASSIGN_OR_RETURN(const double base, GaussianTradeoff(eps, total_mu));
  return std::min(1.0, base + static_cast<double>(mus.size()) * per_step_delta_p);
}

absl::StatusOr<JlZeta> JlClipZeta(int64_t n, int64_t r, double delta_jl) {
  if (n < 1) return DomainError("n must be >= 1");
  if (r < 1) return DomainError("r must be >= 1");
  WDP_RETURN_IF_ERROR(CheckOpenProbability(delta_jl, "delta_JL"));
  const double arg = 2.0 * static_cast<double>(n) / delta_jl;
  const double zeta = std::sqrt(12.0 * std::log(arg) / static_cast<double>(r));
  return JlZeta{zeta, zeta >= 1.0};
}

}  // namespace wishart_dp
