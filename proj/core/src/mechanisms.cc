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

#include "wishart_dp/mechanisms.h"

#include <cmath>
#include <limits>
#include <random>

#include "absl/strings/str_format.h"
#include "wishart_dp/status.h"

namespace wishart_dp {

absl::StatusOr<MechanismInput> MechanismInput::Create(MatrixXd v,
                                                      bool unit_normalized) {
  if (v.size() == 0) return DomainError("mechanism input is empty");
  if (!v.allFinite()) return DomainError("mechanism input is not finite");
  if (unit_normalized && v.cols() == 1 &&
      std::fabs(v.norm() - 1.0) > 1e-10) {
    return DomainError(absl::StrFormat(
        "input flagged unit-normalized but has norm %.17g", v.norm()));
  }
  return MechanismInput{std::move(v), unit_normalized};
}

std::string_view VariantName(Variant variant) {
  switch (variant) {
    case Variant::kNoiseFree:
      return "noise_free";
    case Variant::kM1:
      return "m1";
    case Variant::kM2:
      return "m2";
  }
  return "unknown";
}

absl::StatusOr<Variant> ParseVariant(std::string_view name) {
  if (name == "noise_free" || name == "NOISE_FREE") return Variant::kNoiseFree;
  if (name == "m1" || name == "M1") return Variant::kM1;
  if (name == "m2" || name == "M2") return Variant::kM2;
  return ConfigError(absl::StrFormat("unknown mechanism variant '%s'", std::string(name)));
}

absl::Status NoisyMechParams::Validate() const {
  if (r < 1) return DomainError(absl::StrFormat("r must be >= 1, got %d", r));
  if (!(sigma_G >= 0.0) || !std::isfinite(sigma_G)) {
    return DomainError(absl::StrFormat("sigma_G must be >= 0, got %g", sigma_G));
  }
  if (variant == Variant::kNoiseFree && sigma_G > 0.0) {
    return ConfigError(
        "noise-free variant with sigma_G > 0 is ambiguous; pick m1 or m2");
  }
  if (variant != Variant::kNoiseFree && !(sigma_G > 0.0)) {
    return ConfigError(absl::StrFormat("variant %s requires sigma_G > 0",
                                       std::string(VariantName(variant))));
  }
  if (clip_beta.has_value() && !(*clip_beta >= 0.0)) {
    return DomainError(
        absl::StrFormat("clip_beta must be nonnegative, got %g", *clip_beta));
  }
  return absl::OkStatus();
}

absl::StatusOr<MatrixXd> Project(const MechanismInput& input,
                                 const WishartDraw& draw) {
  if (input.V.rows() != draw.d()) {
    return DomainError(absl::StrFormat("input has %d rows but draw has d=%d",
                                       static_cast<int>(input.V.rows()),
                                       draw.d()));
  }
  return draw.Apply(input.V);
}

MatrixXd ClipFrobenius(const MatrixXd& x, double beta) {
  const double norm = x.norm();
  if (norm <= beta || std::isinf(beta)) return x;
  if (norm == 0.0) return x;
  return x * (beta / norm);
}

absl::StatusOr<MatrixXd> ApplyNoisyMech(const MatrixXd& v,
                                        const NoisyMechParams& params,
                                        const WishartDraw& draw,
                                        const Seed& noise_seed) {
  WDP_RETURN_IF_ERROR(params.Validate());
  if (v.rows() != draw.d()) {
    return DomainError(absl::StrFormat("input has %d rows but draw has d=%d",
                                       static_cast<int>(v.rows()), draw.d()));
  }
  const MatrixXd clipped =
      params.clip_beta.has_value() ? ClipFrobenius(v, *params.clip_beta) : v;
  if (params.variant == Variant::kNoiseFree) return draw.Apply(clipped);
  Rng rng = MakeRng(noise_seed);
  MatrixXd xi(v.rows(), v.cols());
  FillGaussian(rng, params.sigma_G * params.sigma_G, xi);
  if (params.variant == Variant::kM1) return (draw.Apply(clipped) + xi).eval();
  return draw.Apply(clipped + xi);
}

absl::StatusOr<MatrixXd> NoisyMech(const MechanismInput& input,
                                   const NoisyMechParams& params,
                                   const Seed& seed) {
  WDP_RETURN_IF_ERROR(params.Validate());
  WDP_ASSIGN_OR_RETURN(
      const WishartDraw draw,
      DrawWishart(static_cast<int>(input.V.rows()), params.r,
                  params.EffectiveEntryVar(), seed.Child(0)));
  return ApplyNoisyMech(input.V, params, draw, seed.Child(1));
}

absl::StatusOr<VectorXd> GaussianMech(const VectorXd& v, double sigma,
                                      const Seed& seed) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    return DomainError(absl::StrFormat("sigma must be positive, got %g", sigma));
  }
  Rng rng = MakeRng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  VectorXd out = v;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += normal(rng);
  return out;
}

absl::StatusOr<GaussianSigmaResult> GaussianSigma(double sensitivity,
                                                  double eps, double delta,
                                                  GaussianConstant convention) {
  if (!(sensitivity > 0.0)) {
    return DomainError(
        absl::StrFormat("sensitivity must be positive, got %g", sensitivity));
  }
  if (!(eps > 0.0)) {
    return DomainError(absl::StrFormat("eps must be positive, got %g", eps));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    return DomainError(absl::StrFormat("delta must lie in (0, 1), got %g", delta));
  }
  const double log_term = std::log(1.25 / delta);
  const double factor = convention == GaussianConstant::kAlgorithm ? 2.0 : 1.0;
  return GaussianSigmaResult{
      2.0 * sensitivity * std::sqrt(factor * log_term) / eps, eps >= 1.0};
}

namespace {

absl::StatusOr<VectorXd> UnitDirection(int d, const Seed& seed) {
  Rng rng = MakeRng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd z(d);
  for (int i = 0; i < d; ++i) z(i) = normal(rng);
  const double norm = z.norm();
  if (!(norm > 0.0)) return DegenerateInputError("zero Gaussian direction");
  return (z / norm).eval();
}

absl::Status CheckUnit(const VectorXd& v) {
  if (v.size() == 0 || std::fabs(v.norm() - 1.0) > 1e-8) {
    return DomainError(absl::StrFormat(
        "amplification input must be a unit vector, norm is %.17g", v.norm()));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<VectorXd> AmplifyAlignment(const VectorXd& v,
                                          const AmplifyParams& params,
                                          const Seed& seed) {
  WDP_RETURN_IF_ERROR(CheckUnit(v));
  if (!(params.gamma >= 0.0)) return DomainError("gamma must be nonnegative");
  if (params.gamma == 0.0) return v;
  WDP_ASSIGN_OR_RETURN(const VectorXd u,
                       UnitDirection(static_cast<int>(v.size()), seed));
  return (v + params.gamma * u).eval();
}

absl::StatusOr<std::pair<VectorXd, VectorXd>> AmplifyPair(
    const VectorXd& v, const VectorXd& v_prime, const AmplifyParams& params,
    const Seed& seed) {
  WDP_RETURN_IF_ERROR(CheckUnit(v));
  WDP_RETURN_IF_ERROR(CheckUnit(v_prime));
  if (v.size() != v_prime.size()) return DomainError("pair dimension mismatch");
  if (!(params.gamma >= 0.0)) return DomainError("gamma must be nonnegative");
  WDP_ASSIGN_OR_RETURN(const VectorXd u,
                       UnitDirection(static_cast<int>(v.size()), seed));
  return std::make_pair<VectorXd, VectorXd>(v + params.gamma * u,
                                            v_prime + params.gamma * u);
}

double AmplificationThreshold(double rho, double d, double delta) {
  const double c = std::sqrt(2.0 / d * std::log(8.0 / delta));
  if (rho <= -1.0) return std::numeric_limits<double>::infinity();
  return (1.0 - rho) / (1.0 + rho) * c;
}

absl::StatusOr<double> AmplificationGain(double rho, double gamma, double d,
                                         double delta) {
  if (!(rho > -1.0 && rho <= 1.0)) {
    return DomainError(absl::StrFormat("rho must lie in (-1, 1], got %g", rho));
  }
  if (!(d >= 1.0)) return DomainError("d must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) {
    return DomainError(absl::StrFormat("delta must lie in (0, 1), got %g", delta));
  }
  const double threshold = AmplificationThreshold(rho, d, delta);
  if (!(gamma > threshold)) {
    return InadmissibleAlignmentError(
        absl::StrFormat("gamma=%g is at or below the amplification threshold "
                        "%.17g",
                        gamma, threshold),
        threshold);
  }
  const double c = std::sqrt(2.0 / d * std::log(8.0 / delta));
  const double gain = ((1.0 - rho) * gamma * gamma - 4.0 * gamma * c) /
                      (1.0 + gamma * gamma + 2.0 * gamma * c);
  if (!(gain > 0.0)) {
    // The gamma threshold alone does not make the numerator positive; the
    // numerator needs gamma > 4c / (1 - rho).
    const double needed =
        rho < 1.0 ? 4.0 * c / (1.0 - rho) : std::numeric_limits<double>::infinity();
    return InadmissibleAlignmentError(
        absl::StrFormat("amplification gain %.6g is not positive at gamma=%g; "
                        "positivity needs gamma > %.17g",
                        gain, gamma, needed),
        needed);
  }
  return gain;
}

}  // namespace wishart_dp
