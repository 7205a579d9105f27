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

#include "wishart_dp/specialfn.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "absl/strings/str_format.h"
#include "wishart_dp/status.h"

namespace wishart_dp {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kMaxFractionTerms = 100000;

absl::Status CheckProbabilityOpen(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    return DomainError(absl::StrFormat("probability must lie in (0, 1), got %g",
                                       p));
  }
  return absl::OkStatus();
}

absl::Status CheckPositive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    return DomainError(
        absl::StrFormat("%s must be positive and finite, got %g", name, v));
  }
  return absl::OkStatus();
}

double Lgamma(double z) {
  int sign = 0;
  return lgamma_r(z, &sign);
}

// lgamma(x) - [(x - 1/2) ln x - x + ln(2 pi)/2]; truncation error below 1e-16
// for x >= kStirlingMin.
constexpr double kStirlingMin = 15.0;
double StirlingCorrection(double x) {
  const double r = 1.0 / x;
  const double r2 = r * r;
  return r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 -
                                                  r2 * (1.0 / 1680 -
                                                        r2 / 1188))));
}

// ln B(a, b). Differencing lgamma values loses about |lgamma(a + b)| * eps in
// absolute terms, which is fatal for the Beta prefactor once a or b is large;
// the Stirling form below keeps only O(min(a, b) ln(a + b)) cancellation.
double Lbeta(double a, double b) {
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  if (hi < kStirlingMin) return Lgamma(a) + Lgamma(b) - Lgamma(a + b);
  const double sum = lo + hi;
  const double corr = StirlingCorrection(hi) - StirlingCorrection(sum);
  if (lo < kStirlingMin) {
    // lgamma(hi) - lgamma(lo + hi), expanded.
    return Lgamma(lo) - (hi - 0.5) * std::log1p(lo / hi) - lo * std::log(sum) +
           lo + corr;
  }
  return 0.5 * std::log(2.0 * M_PI) - 0.5 * std::log(sum) -
         (lo - 0.5) * std::log1p(hi / lo) - (hi - 0.5) * std::log1p(lo / hi) +
         StirlingCorrection(lo) + corr;
}

// Continued fraction for I_x(a, b) (modified Lentz). Converges quickly for
// x < (a + 1) / (a + b + 2).
double BetaContinuedFraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxFractionTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

// Both tails of Beta(a, b) at x, with y = 1 - x supplied separately so that
// callers holding an accurate y (e.g. the Student-t mapping) do not lose it.
TailPair BetaTails(double x, double y, double a, double b) {
  if (x <= 0.0) return {0.0, 1.0};
  if (y <= 0.0) return {1.0, 0.0};
  // Take each logarithm through log1p of the smaller argument, which is the
  // one known to full relative precision.
  const double log_x = x > 0.5 ? std::log1p(-y) : std::log(x);
  const double log_y = y > 0.5 ? std::log1p(-x) : std::log(y);
  const double log_front = a * log_x + b * log_y - Lbeta(a, b);
  const double front = std::exp(log_front);
  TailPair out;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    out.lower = front * BetaContinuedFraction(x, a, b) / a;
    out.upper = 1.0 - out.lower;
  } else {
    out.upper = front * BetaContinuedFraction(y, b, a) / b;
    out.lower = 1.0 - out.upper;
  }
  return out;
}

TailPair GammaTails(double a, double x) {
  if (x <= 0.0) return {0.0, 1.0};
  if (std::isinf(x)) return {1.0, 0.0};
  const double log_front = a * std::log(x) - x - Lgamma(a);
  TailPair out;
  if (x < a + 1.0) {
    // Series: P(a, x) = e^{-x} x^a / Gamma(a + 1) * sum x^n / (a+1)...(a+n).
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < kMaxFractionTerms; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * kEps) break;
    }
    out.lower = sum * std::exp(log_front);
    out.upper = 1.0 - out.lower;
  } else {
    // Continued fraction for Q(a, x) (modified Lentz).
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxFractionTerms; ++i) {
      const double an = -i * (i - a);
      b += 2.0;
      d = an * d + b;
      if (std::fabs(d) < kTiny) d = kTiny;
      c = b + an / c;
      if (std::fabs(c) < kTiny) c = kTiny;
      d = 1.0 / d;
      const double del = d * c;
      h *= del;
      if (std::fabs(del - 1.0) < kEps) break;
    }
    out.upper = std::exp(log_front) * h;
    out.lower = 1.0 - out.upper;
  }
  return out;
}

// Wichura's AS 241 (PPND16), relative accuracy about 1e-16.
double Ppnd16(double p) {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                 67265.770927008700853) * r + 45921.953931549871457) * r +
               13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r +
                 39307.89580009271061) * r + 21213.794301586595867) * r +
               5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                0.24178072517745061177) * r + 1.27045825245236838258) * r +
              3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                0.0151986665636164571966) * r + 0.14810397642748007459) * r +
              0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                0.0012426609473880784386) * r + 0.026532189526576123093) * r +
              0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
              0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

double TTailsUpper(double nu, double t) {
  // Upper tail for t >= 0: 0.5 * I_{nu/(nu+t^2)}(nu/2, 1/2).
  const double t2 = t * t;
  const double x = nu / (nu + t2);
  const double y = t2 / (nu + t2);
  return 0.5 * BetaTails(x, y, 0.5 * nu, 0.5).lower;
}

TailPair TTails(double nu, double t) {
  if (std::isinf(t)) return t > 0 ? TailPair{1.0, 0.0} : TailPair{0.0, 1.0};
  const double upper_abs = TTailsUpper(nu, std::fabs(t));
  if (t >= 0.0) return {1.0 - upper_abs, upper_abs};
  return {upper_abs, 1.0 - upper_abs};
}

double TPdf(double nu, double t) {
  return std::exp(Lgamma(0.5 * (nu + 1.0)) - Lgamma(0.5 * nu) -
                  0.5 * std::log(nu * M_PI) -
                  0.5 * (nu + 1.0) * std::log1p(t * t / nu));
}

double ChiSquarePdf(double k, double x) {
  if (x <= 0.0) return k == 2.0 ? 0.5 : (k < 2.0 ? INFINITY : 0.0);
  return std::exp((0.5 * k - 1.0) * std::log(x) - 0.5 * x -
                  0.5 * k * M_LN2 - Lgamma(0.5 * k));
}

// Solves F(x) = p on [lo_limit, inf) for an increasing CDF F. `tails` returns
// both tails so the residual can be taken in whichever tail p lives in.
template <typename TailsFn, typename PdfFn>
absl::StatusOr<double> SolveQuantile(double p, double q, double guess,
                                     double lo_limit, TailsFn tails, PdfFn pdf,
                                     const QuantileOptions& options,
                                     const char* what) {
  // q = 1 - p is passed separately so an upper-tail target keeps its
  // relative precision.
  const bool use_upper = p > 0.5;
  auto residual = [&](double x) {
    const TailPair tp = tails(x);
    return use_upper ? q - tp.upper : tp.lower - p;
  };
  auto fail = [&](const char* stage) {
    return ConvergenceError(absl::StrFormat(
        "%s quantile: %s did not converge within %d iterations (p=%g)", what,
        stage, options.max_iterations, p));
  };

  // Geometric bracket search around the initial guess.
  double lo = lo_limit;
  double hi = guess > lo_limit ? guess : lo_limit + 1.0;
  int it = 0;
  if (residual(hi) < 0.0) {
    lo = hi;
    double step = std::max(1.0, std::fabs(hi));
    while (residual(hi) < 0.0) {
      lo = hi;
      hi += step;
      step *= 2.0;
      if (++it > options.max_iterations || !std::isfinite(hi)) {
        return fail("bracketing");
      }
    }
  } else {
    // Shrink towards lo_limit until the residual turns negative.
    double cand = lo_limit + 0.5 * (hi - lo_limit);
    while (cand > lo_limit && residual(cand) >= 0.0) {
      hi = cand;
      cand = lo_limit + 0.5 * (cand - lo_limit);
      if (++it > 4 * options.max_iterations) break;
    }
    lo = cand > lo_limit ? cand : lo_limit;
  }

  // Safeguarded Newton: fall back to bisection whenever a step leaves the
  // current bracket.
  double x = (guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
  for (int i = 0; i < options.max_iterations; ++i) {
    const double f = residual(x);
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double density = pdf(x);
    double next = x - f / density;
    if (!(density > 0.0) || !std::isfinite(next) || next <= lo || next >= hi) {
      next = 0.5 * (lo + hi);
    }
    const double scale = std::max(std::fabs(next), 1e-300);
    if (std::fabs(next - x) <= options.rel_tol * scale ||
        (hi - lo) <= options.rel_tol * scale) {
      return next;
    }
    x = next;
  }
  return fail("refinement");
}

}  // namespace

namespace internal {

double StandardNormalCdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

}  // namespace internal

absl::StatusOr<double> NormalCdf(double x) {
  if (!std::isfinite(x)) {
    return DomainError(absl::StrFormat("normal_cdf: non-finite input %g", x));
  }
  return internal::StandardNormalCdf(x);
}

absl::StatusOr<double> NormalQuantile(double p) {
  WDP_RETURN_IF_ERROR(CheckProbabilityOpen(p));
  return Ppnd16(p);
}

absl::StatusOr<double> LogGamma(double z) {
  WDP_RETURN_IF_ERROR(CheckPositive(z, "log_gamma argument"));
  return Lgamma(z);
}

absl::StatusOr<double> LogBeta(double a, double b) {
  WDP_RETURN_IF_ERROR(CheckPositive(a, "a"));
  WDP_RETURN_IF_ERROR(CheckPositive(b, "b"));
  return Lbeta(a, b);
}

absl::StatusOr<TailPair> RegIncBetaTails(double x, double a, double b) {
  WDP_RETURN_IF_ERROR(CheckPositive(a, "a"));
  WDP_RETURN_IF_ERROR(CheckPositive(b, "b"));
  if (!(x >= 0.0 && x <= 1.0)) {
    return DomainError(absl::StrFormat("reg_inc_beta: x=%g outside [0, 1]", x));
  }
  return BetaTails(x, 1.0 - x, a, b);
}

absl::StatusOr<double> RegIncBeta(double x, double a, double b) {
  WDP_ASSIGN_OR_RETURN(const TailPair tails, RegIncBetaTails(x, a, b));
  return tails.lower;
}

absl::StatusOr<TailPair> RegIncGammaTails(double a, double x) {
  WDP_RETURN_IF_ERROR(CheckPositive(a, "a"));
  if (!(x >= 0.0) || std::isnan(x)) {
    return DomainError(absl::StrFormat("reg_inc_gamma: x=%g is negative", x));
  }
  return GammaTails(a, x);
}

absl::StatusOr<TailPair> StudentTTails(double dof, double t) {
  WDP_RETURN_IF_ERROR(CheckPositive(dof, "degrees of freedom"));
  if (std::isnan(t)) return DomainError("student_t_cdf: NaN input");
  return TTails(dof, t);
}

absl::StatusOr<double> StudentTCdf(double dof, double t) {
  WDP_ASSIGN_OR_RETURN(const TailPair tails, StudentTTails(dof, t));
  return tails.lower;
}

absl::StatusOr<double> StudentTQuantile(double dof, double p,
                                        const QuantileOptions& options) {
  WDP_RETURN_IF_ERROR(CheckPositive(dof, "degrees of freedom"));
  WDP_RETURN_IF_ERROR(CheckProbabilityOpen(p));
  if (p == 0.5) return 0.0;
  // Solve on the right half-line and reflect, which makes the odd symmetry
  // exact.
  const double tail = p > 0.5 ? 1.0 - p : p;
  const double z = -Ppnd16(tail);
  const double guess = z + (z * z * z + z) / (4.0 * dof);
  WDP_ASSIGN_OR_RETURN(
      const double t,
      SolveQuantile(
          1.0 - tail, tail, guess, 0.0, [dof](double x) { return TTails(dof, x); },
          [dof](double x) { return TPdf(dof, x); }, options, "student-t"));
  return p > 0.5 ? t : -t;
}

absl::StatusOr<TailPair> ChiSquareTails(double dof, double x) {
  WDP_RETURN_IF_ERROR(CheckPositive(dof, "degrees of freedom"));
  if (std::isnan(x)) return DomainError("chi2_cdf: NaN input");
  if (x <= 0.0) return TailPair{0.0, 1.0};
  return GammaTails(0.5 * dof, 0.5 * x);
}

absl::StatusOr<double> ChiSquareCdf(double dof, double x) {
  WDP_ASSIGN_OR_RETURN(const TailPair tails, ChiSquareTails(dof, x));
  return tails.lower;
}

absl::StatusOr<double> ChiSquareQuantile(double dof, double p,
                                         const QuantileOptions& options) {
  WDP_RETURN_IF_ERROR(CheckPositive(dof, "degrees of freedom"));
  WDP_RETURN_IF_ERROR(CheckProbabilityOpen(p));
  // Wilson-Hilferty starting point.
  const double z = Ppnd16(p);
  const double c = 2.0 / (9.0 * dof);
  const double wh = 1.0 - c + z * std::sqrt(c);
  const double guess = wh > 0.0 ? dof * wh * wh * wh : 1e-3 * dof;
  return SolveQuantile(
      p, 1.0 - p, guess, 0.0,
      [dof](double x) {
        return x <= 0.0 ? TailPair{0.0, 1.0} : GammaTails(0.5 * dof, 0.5 * x);
      },
      [dof](double x) { return ChiSquarePdf(dof, x); }, options, "chi-square");
}

}  // namespace wishart_dp
