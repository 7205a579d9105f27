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

// The randomized maps: noise-free projection V -> MV, the noisy variants
// M1(V) = MV + Xi and M2(V) = M(V + Xi), the Gaussian mechanism, Frobenius
// clipping and alignment amplification.

#ifndef WISHART_DP_MECHANISMS_H_
#define WISHART_DP_MECHANISMS_H_

#include <optional>
#include <string_view>
#include <utility>

#include "absl/status/statusor.h"
#include "wishart_dp/randmat.h"
#include "wishart_dp/random.h"

namespace wishart_dp {

struct MechanismInput {
  MatrixXd V;  // d x n; n = 1 for vector queries
  bool unit_normalized = false;

  // Validates the unit-norm flag (vector case) and finiteness.
  static absl::StatusOr<MechanismInput> Create(MatrixXd v,
                                               bool unit_normalized = false);
};

enum class Variant { kNoiseFree, kM1, kM2 };

std::string_view VariantName(Variant variant);
absl::StatusOr<Variant> ParseVariant(std::string_view name);

struct NoisyMechParams {
  Variant variant = Variant::kNoiseFree;
  int r = 1;
  // Variance of each entry of Z; <= 0 means the default 1/r.
  double entry_var = 0.0;
  double sigma_G = 0.0;
  std::optional<double> clip_beta;

  double EffectiveEntryVar() const { return entry_var > 0.0 ? entry_var : 1.0 / r; }
  absl::Status Validate() const;
};

// M V, computed as Z (Z^T V).
absl::StatusOr<MatrixXd> Project(const MechanismInput& input,
                                 const WishartDraw& draw);

// Draws M from seed.Child(0) and the noise Xi from seed.Child(1).
absl::StatusOr<MatrixXd> NoisyMech(const MechanismInput& input,
                                   const NoisyMechParams& params,
                                   const Seed& seed);

// Same as NoisyMech but with a caller-supplied draw; Xi comes from
// `noise_seed`. params.r and params.entry_var are ignored in favour of the
// draw.
absl::StatusOr<MatrixXd> ApplyNoisyMech(const MatrixXd& v,
                                        const NoisyMechParams& params,
                                        const WishartDraw& draw,
                                        const Seed& noise_seed);

// X * min(1, beta / ||X||_F).
MatrixXd ClipFrobenius(const MatrixXd& x, double beta);

absl::StatusOr<VectorXd> GaussianMech(const VectorXd& v, double sigma,
                                      const Seed& seed);

// Calibration constant for the Gaussian mechanism. kLemma:
// sigma = 2 Delta sqrt(ln(1.25/delta)) / eps. kAlgorithm (default, larger):
// sigma = 2 Delta sqrt(2 ln(1.25/delta)) / eps.
enum class GaussianConstant { kLemma, kAlgorithm };

struct GaussianSigmaResult {
  double sigma = 0.0;
  // Set when eps >= 1, outside the range the calibration is proved for.
  bool out_of_range = false;
};

absl::StatusOr<GaussianSigmaResult> GaussianSigma(
    double sensitivity, double eps, double delta,
    GaussianConstant convention = GaussianConstant::kAlgorithm);

struct AmplifyParams {
  double gamma = 0.0;
  double target_delta = 0.01;
};

// v + gamma * z / ||z|| for a fresh z ~ N(0, I_d). Not renormalized.
absl::StatusOr<VectorXd> AmplifyAlignment(const VectorXd& v,
                                          const AmplifyParams& params,
                                          const Seed& seed);

// Amplifies a neighbouring pair with one shared direction z.
absl::StatusOr<std::pair<VectorXd, VectorXd>> AmplifyPair(
    const VectorXd& v, const VectorXd& v_prime, const AmplifyParams& params,
    const Seed& seed);

// Smallest gamma for which the gain guarantee is stated:
// (1 - rho) / (1 + rho) * sqrt((2/d) ln(8/delta)).
double AmplificationThreshold(double rho, double d, double delta);

// Guaranteed cosine gain s such that the amplified pair has cosine >= rho + s
// with probability >= 1 - delta. Errors when gamma is at or below the
// threshold, or when the resulting s is not positive.
absl::StatusOr<double> AmplificationGain(double rho, double gamma, double d,
                                         double delta);

}  // namespace wishart_dp

#endif  // WISHART_DP_MECHANISMS_H_
