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

// Empirical falsification tools. SeparationTrial checks that the noise-free
// projection never maps two distinct inputs to the same output; the
// membership-inference routines train IN/OUT shadow models around a crafted
// canary and score membership by the canary's loss (lower loss = member).

#ifndef WISHART_DP_ATTACKS_H_
#define WISHART_DP_ATTACKS_H_

#include <cstdint>
#include <utility>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/statusor.h"
#include "wishart_dp/random.h"
#include "wishart_dp/trainer.h"

namespace wishart_dp {

struct SeparationResult {
  int64_t n_trials = 0;
  int64_t n_equal = 0;
  // Largest ||M dV||_F / (||dV||_F ||M||_F) seen, and the smallest. The
  // equality event is min_relative_residual <= 1e-9.
  double max_residual = 0.0;
  double min_relative_residual = 0.0;
};

inline constexpr double kSeparationTolerance = 1e-9;

absl::StatusOr<SeparationResult> SeparationTrial(
    const Eigen::MatrixXd& v, const Eigen::MatrixXd& v_prime, int r,
    double entry_var, int64_t n_trials, const Seed& seed, int threads = 0);

struct Canary {
  Eigen::VectorXd x_q;
  int y_q = 0;
  Seed reference_seed;  // seed of the reference model that picked y_q
};

// x_q ~ N(0, I) from seed.Child(0); y_q is the least likely class under a
// reference model trained on the task with seed.Child(1).
absl::StatusOr<Canary> CraftCanary(const TrainTask& task,
                                   const DpTrainConfig& config,
                                   const Seed& seed);

// Index of the smallest score (ties resolve to the lowest index).
int LeastLikelyClass(const Eigen::VectorXd& scores);

struct RocSummary {
  double auc = 0.5;
  double balanced_acc = 0.5;
  double threshold = 0.0;  // predict member when score <= threshold
};

// Mann-Whitney AUC of "IN scores are lower" with ties counted 1/2; best
// balanced accuracy over thresholds at the unique score values.
absl::StatusOr<RocSummary> RocAuc(const std::vector<double>& scores_in,
                                  const std::vector<double>& scores_out);

// Hanley-McNeil standard error of an AUC estimate.
double AucStdError(double auc, int64_t n_in, int64_t n_out);

struct MiaResult {
  std::vector<double> scores_in;
  std::vector<double> scores_out;
  double auc = 0.5;
  double auc_std_error = 0.0;
  double balanced_acc = 0.5;
  double threshold = 0.0;
};

// Trains n_in models on task + canary and n_out on task alone. Model k uses
// seed.Child(k), IN models first.
absl::StatusOr<MiaResult> RunMia(const TrainTask& task,
                                 const DpTrainConfig& config,
                                 const Canary& canary, int n_in, int n_out,
                                 const Seed& seed, int threads = 0);

}  // namespace wishart_dp

#endif  // WISHART_DP_ATTACKS_H_
