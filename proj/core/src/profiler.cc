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

#include "wishart_dp/profiler.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "absl/strings/str_format.h"
#include "wishart_dp/specialfn.h"
#include "wishart_dp/status.h"

namespace wishart_dp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int64_t NumChunks(int64_t n, int64_t chunk_size) {
  return (n + chunk_size - 1) / chunk_size;
}

absl::Status CheckMcArgs(int64_t n, const MonteCarloOptions& options) {
  if (n < 1) return DomainError(absl::StrFormat("sample count must be >= 1, got %d", n));
  if (options.chunk_size < 1) return DomainError("chunk size must be >= 1");
  return absl::OkStatus();
}

// Fills out[begin, end) with ratio samples drawn from `rng`.
void FillRatioSamples(double rho, int d, int r, Rng& rng, RatioSample* out,
                      int64_t count) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double coef = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  for (int64_t i = 0; i < count; ++i) {
    const double k1 = SampleChiSquare(rng, r);
    const double k2 = normal(rng);
    const double k3 = SampleChiSquare(rng, d - 2);
    out[i].A = rho + coef * k2 / std::sqrt(k1);
    out[i].B = k1 + k2 * k2 + k3;
  }
}

}  // namespace

absl::StatusOr<std::vector<RatioSample>> SampleRatioStats(
    double rho, int d, int r, int64_t n, const Seed& seed,
    const MonteCarloOptions& options) {
  if (d < 3) return DomainError(absl::StrFormat("d must be >= 3, got %d", d));
  if (r < 1) return DomainError(absl::StrFormat("r must be >= 1, got %d", r));
  if (!(std::fabs(rho) <= 1.0)) {
    return DomainError(absl::StrFormat("|rho| must be <= 1, got %g", rho));
  }
  WDP_RETURN_IF_ERROR(CheckMcArgs(n, options));
  std::vector<RatioSample> out(n);
  const int64_t chunk = options.chunk_size;
  ParallelChunks(NumChunks(n, chunk), options.threads, [&](int64_t c) {
    Rng rng = MakeRng(seed.Child(c));
    const int64_t begin = c * chunk;
    FillRatioSamples(rho, d, r, rng, out.data() + begin,
                     std::min(chunk, n - begin));
  });
  return out;
}

double PrivacyLoss(const RatioSample& sample, int d, int r) {
  if (!(sample.A > 0.0)) return kInf;
  if (sample.A == 1.0) return 0.0;
  return 0.5 * (d - r + 1) * std::log(sample.A) +
         0.5 * sample.B * (1.0 / sample.A - 1.0);
}

absl::StatusOr<Estimate> DeltaSupport(double rho, int r, int64_t n,
                                      const Seed& seed,
                                      const MonteCarloOptions& options) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    return DomainError(absl::StrFormat("rho must lie in (0, 1], got %g", rho));
  }
  if (r < 1) return DomainError(absl::StrFormat("r must be >= 1, got %d", r));
  WDP_RETURN_IF_ERROR(CheckMcArgs(n, options));
  if (rho == 1.0) return Estimate{0.0, 0.0};
  const double scale = rho / std::sqrt(1.0 - rho * rho);
  const int64_t chunk = options.chunk_size;
  const int64_t num_chunks = NumChunks(n, chunk);
  std::vector<double> sums(num_chunks, 0.0);
  std::vector<double> sums_sq(num_chunks, 0.0);
  ParallelChunks(num_chunks, options.threads, [&](int64_t c) {
    Rng rng = MakeRng(seed.Child(c));
    const int64_t count = std::min(chunk, n - c * chunk);
    double s = 0.0;
    double s2 = 0.0;
    for (int64_t i = 0; i < count; ++i) {
      const double x = SampleChiSquare(rng, r);
      const double f = internal::StandardNormalCdf(-scale * std::sqrt(x));
      s += f;
      s2 += f * f;
    }
    sums[c] = s;
    sums_sq[c] = s2;
  });
  double s = 0.0;
  double s2 = 0.0;
  for (int64_t c = 0; c < num_chunks; ++c) {
    s += sums[c];
    s2 += sums_sq[c];
  }
  const double mean = s / n;
  const double var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
  return Estimate{mean, std::sqrt(var / n)};
}

std::vector<double> IsotonicNonincreasing(const std::vector<double>& values) {
  // Blocks of (mean, size); merge while a later block exceeds an earlier one.
  std::vector<double> means;
  std::vector<int64_t> sizes;
  for (double v : values) {
    means.push_back(v);
    sizes.push_back(1);
    while (means.size() > 1 && means[means.size() - 2] < means.back()) {
      const size_t k = means.size() - 1;
      const int64_t total = sizes[k - 1] + sizes[k];
      means[k - 1] = (means[k - 1] * sizes[k - 1] + means[k] * sizes[k]) / total;
      sizes[k - 1] = total;
      means.pop_back();
      sizes.pop_back();
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (size_t b = 0; b < means.size(); ++b) {
    out.insert(out.end(), sizes[b], means[b]);
  }
  return out;
}

Estimate PrivacyProfile::DeltaAt(double eps) const {
  const int64_t n = static_cast<int64_t>(sorted_losses.size());
  if (n == 0) return {delta_support.value, delta_support.std_error};
  const auto it =
      std::upper_bound(sorted_losses.begin(), sorted_losses.end(), eps);
  const double p = static_cast<double>(sorted_losses.end() - it) / n;
  const double se = std::sqrt(p * (1.0 - p) / n +
                              delta_support.std_error * delta_support.std_error);
  return {std::min(1.0, p + delta_support.value), se};
}

std::optional<double> PrivacyProfile::InvertForEpsilon(
    double target_delta) const {
  for (const ProfilePoint& point : grid) {
    if (point.delta_hat <= target_delta) return point.eps;
  }
  return std::nullopt;
}

std::optional<Estimate> PrivacyProfile::EpsilonAtDelta(
    double target_delta) const {
  const int64_t n = static_cast<int64_t>(sorted_losses.size());
  const double tail = target_delta - delta_support.value;
  if (n == 0 || !(tail > 0.0)) return std::nullopt;
  // Smallest eps with #{L > eps} <= floor(tail * n).
  auto eps_at_tail = [&](double level) -> double {
    const int64_t allowed =
        static_cast<int64_t>(std::floor(std::clamp(level, 0.0, 1.0) * n));
    if (allowed >= n) return -kInf;
    return sorted_losses[n - allowed - 1];
  };
  const double eps = eps_at_tail(tail);
  if (!std::isfinite(eps)) return std::nullopt;
  const double se_tail = std::sqrt(tail * (1.0 - tail) / n);
  const double hi = eps_at_tail(tail - se_tail);
  const double lo = eps_at_tail(tail + se_tail);
  const double half_width =
      std::isfinite(hi) && std::isfinite(lo) ? 0.5 * (hi - lo) : kInf;
  return Estimate{eps, half_width};
}

absl::StatusOr<PrivacyProfile> McPrivacyProfile(
    double rho, int d, int r, const std::vector<double>& eps_grid, int64_t n,
    const Seed& seed, const MonteCarloOptions& options) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    return DomainError(absl::StrFormat("rho must lie in (0, 1], got %g", rho));
  }
  if (eps_grid.empty()) return DomainError("eps grid is empty");
  for (size_t i = 1; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > eps_grid[i - 1])) {
      return DomainError("eps grid must be strictly increasing");
    }
  }
  WDP_ASSIGN_OR_RETURN(
      const std::vector<RatioSample> samples,
      SampleRatioStats(rho, d, r, n, seed.Child(0), options));
  PrivacyProfile profile;
  profile.rho = rho;
  profile.d = d;
  profile.r = r;
  profile.n_samples = n;
  profile.seed = seed;
  WDP_ASSIGN_OR_RETURN(profile.delta_support,
                       DeltaSupport(rho, r, n, seed.Child(1), options));
  profile.sorted_losses.resize(samples.size());
  std::transform(samples.begin(), samples.end(), profile.sorted_losses.begin(),
                 [d, r](const RatioSample& s) { return PrivacyLoss(s, d, r); });
  std::sort(profile.sorted_losses.begin(), profile.sorted_losses.end());

  std::vector<double> raw;
  raw.reserve(eps_grid.size());
  for (double eps : eps_grid) {
    const Estimate e = profile.DeltaAt(eps);
    profile.grid.push_back({eps, e.value, e.value, e.std_error});
    raw.push_back(e.value);
  }
  const std::vector<double> fitted = IsotonicNonincreasing(raw);
  for (size_t i = 0; i < fitted.size(); ++i) {
    profile.grid[i].delta_hat = std::clamp(fitted[i], 0.0, 1.0);
  }
  return profile;
}

absl::StatusOr<double> LogDensityMv(const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& v, int r,
                                    double sigma2) {
  if (y.size() != v.size() || y.size() < 2) {
    return DomainError("log_density_mv: y and v must have equal size >= 2");
  }
  if (r < 1) return DomainError("log_density_mv: r must be >= 1");
  if (!(sigma2 > 0.0)) return DomainError("log_density_mv: sigma2 must be > 0");
  if (std::fabs(v.norm() - 1.0) > 1e-8) {
    return DomainError("log_density_mv: v must be a unit vector");
  }
  const double vy = v.dot(y);
  if (!(vy > 0.0)) {
    return DomainError(absl::StrFormat(
        "log_density_mv: y is outside the support (v^T y = %g <= 0)", vy));
  }
  const double d = static_cast<double>(y.size());
  WDP_ASSIGN_OR_RETURN(const double lg, LogGamma(0.5 * r));
  const double log_norm = -0.5 * r * M_LN2 - lg -
                          0.5 * (r + d - 1.0) * std::log(sigma2) -
                          0.5 * (d - 1.0) * std::log(2.0 * M_PI);
  return log_norm + 0.5 * (r - d - 1.0) * std::log(vy) -
         y.squaredNorm() / (2.0 * sigma2 * vy);
}

}  // namespace wishart_dp
