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

// Desk-scale private training on synthetic convex tasks: LoRA-FA with a frozen
// Gaussian down-projection, DP-LoRA-FA (per-example clipping of the LoRA
// gradient plus Gaussian noise), the noisy projection step
// (clip(G) + sigma' E') A^T A, and randomly projected gradient descent.
//
// Weights are n x d matrices acting on d-dimensional features; the LoRA
// factors are LoraB (n x r, trainable) and LoraA (r x d, frozen), so the
// effective weights are W0 + LoraB * LoraA.

#ifndef WISHART_DP_TRAINER_H_
#define WISHART_DP_TRAINER_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/statusor.h"
#include "wishart_dp/accountants.h"
#include "wishart_dp/mechanisms.h"
#include "wishart_dp/random.h"

namespace wishart_dp {

enum class TaskKind { kRidge, kLogistic };

struct TrainTask {
  TaskKind kind = TaskKind::kRidge;
  Eigen::MatrixXd X;        // N x d, one example per row
  Eigen::MatrixXd targets;  // ridge only: N x n_outputs
  std::vector<int> labels;  // logistic only: class index per example
  int n_classes = 1;        // logistic: number of classes
  double l2 = 0.0;          // (l2/2) ||W||_F^2 added to every example loss

  int n_features() const { return static_cast<int>(X.cols()); }
  int64_t size() const { return X.rows(); }
  // Rows of the weight matrix.
  int n_outputs() const {
    return kind == TaskKind::kRidge ? static_cast<int>(targets.cols())
                                    : n_classes;
  }
  absl::Status Validate() const;
};

// Features N(0, 1); targets X w* + noise with w* ~ N(0, 1/d).
absl::StatusOr<TrainTask> MakeRidgeTask(int64_t n, int d, int n_outputs,
                                        double noise_std, double l2,
                                        const Seed& seed);

// Features N(0, 1); labels sampled from softmax(W* x) with W* entries
// N(0, logit_scale^2 / d).
absl::StatusOr<TrainTask> MakeLogisticTask(int64_t n, int d, int n_classes,
                                           double logit_scale, double l2,
                                           const Seed& seed);

// Copy of `task` with one extra example appended. For ridge tasks `label` is
// ignored and `target` is used; for logistic tasks the reverse.
absl::StatusOr<TrainTask> WithExample(const TrainTask& task,
                                      const Eigen::VectorXd& x, int label,
                                      const Eigen::VectorXd& target = {});

double Loss(const TrainTask& task, const Eigen::MatrixXd& w);
// Loss of a single (x, label/target) pair, without the l2 term.
double ExampleLoss(const TrainTask& task, const Eigen::MatrixXd& w,
                   const Eigen::VectorXd& x, int label,
                   const Eigen::VectorXd& target = {});
Eigen::MatrixXd Gradient(const TrainTask& task, const Eigen::MatrixXd& w);
// Output-space residual per example (N x n_outputs): W x - y for ridge,
// softmax(W x) - e_y for logistic. The per-example gradient is
// residual_i x_i^T + l2 W.
Eigen::MatrixXd Residuals(const TrainTask& task, const Eigen::MatrixXd& w);
Eigen::MatrixXd ExampleGradient(const TrainTask& task, const Eigen::MatrixXd& w,
                                int64_t i);

// Closed-form minimizer of a ridge task (requires l2 > 0 or full column rank).
absl::StatusOr<Eigen::MatrixXd> RidgeOptimum(const TrainTask& task);

struct LoraState {
  Eigen::MatrixXd W0;     // n x d, frozen
  Eigen::MatrixXd LoraB;  // n x r
  Eigen::MatrixXd LoraA;  // r x d, frozen, entries N(0, 1/r)
  int step = 0;

  Eigen::MatrixXd Effective() const { return W0 + LoraB * LoraA; }
  int r() const { return static_cast<int>(LoraA.rows()); }
};

absl::StatusOr<LoraState> InitLoraState(const Eigen::MatrixXd& w0, int r,
                                        const Seed& seed);

// LoraB <- LoraB - eta * grad_W * LoraA^T.
absl::StatusOr<LoraState> LoraFaStep(const LoraState& state,
                                     const Eigen::MatrixXd& grad_w, double eta);

enum class TrainMechanism { kDpLoraFa, kNoisyProj, kRpGd, kNoiseFreeLora };

std::string_view TrainMechanismName(TrainMechanism mechanism);
absl::StatusOr<TrainMechanism> ParseTrainMechanism(std::string_view name);

struct DpTrainConfig {
  TrainMechanism mechanism = TrainMechanism::kNoiseFreeLora;
  int T = 1;
  double eta = 0.1;
  // Minibatch size; 0 means full batch. With poisson = true each example is
  // included independently with rate batch / N.
  int64_t batch = 0;
  bool poisson = true;
  // beta (DP-LoRA-FA, per-example on the LoRA gradient) or beta' (noisy
  // projection, on the full gradient). Infinity disables clipping.
  double clip = std::numeric_limits<double>::infinity();
  std::optional<double> sigma;
  std::optional<double> eps_target;
  std::optional<double> delta_target;
  int r = 8;
  // Variance of LoraA entries; <= 0 means 1/r.
  double entry_var = 0.0;
  // Draw a fresh LoraA at every step (noisy projection, RP-GD).
  bool resample_A = false;
  // Capture level for the noisy-projection accountant; <= 0 means
  // 1.5 r / d.
  double alpha = 0.0;
  // eps at which the noisy-projection delta is reported when sigma is given
  // directly.
  double account_eps = 1.0;
  GaussianConstant constant = GaussianConstant::kAlgorithm;
  // Evaluate the full-data loss after every step. Shadow-model sweeps turn
  // this off.
  bool record_trajectory = true;

  absl::Status Validate() const;
};

// Parses "key = value" lines; '#' starts a comment. Every DpTrainConfig field
// is nameable by its member name.
absl::StatusOr<DpTrainConfig> ParseTrainConfig(std::string_view text);
absl::StatusOr<DpTrainConfig> LoadTrainConfig(const std::string& path);
std::string FormatTrainConfig(const DpTrainConfig& config);

struct TrajectoryRow {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  // +infinity for mechanisms without a privacy guarantee.
  double eps_spent = 0.0;
  double delta_spent = 0.0;
};

struct DpLoraFaResult {
  LoraState state;
  double sigma = 0.0;
  // Per-step (eps, delta) and their basic composition over T steps. Absent
  // when neither a target nor a delta for reporting is configured.
  std::optional<Budget> per_step;
  std::optional<Budget> budget;
  bool sigma_out_of_range = false;
  std::vector<TrajectoryRow> trajectory;
  // Realized minibatch size at each step.
  std::vector<int64_t> batch_sizes;
};

absl::StatusOr<DpLoraFaResult> DpLoraFa(const TrainTask& task,
                                        const LoraState& state,
                                        const DpTrainConfig& config,
                                        const Seed& seed);

struct NoisyProjStepResult {
  LoraState state;
  // The privatized gradient (clip(G) + sigma' E') A^T A that was applied.
  Eigen::MatrixXd update;
  SmallRReport report;
};

// One step. The update is folded into W0 (LoraB stays zero), so that with a
// fresh LoraA per step the effective weights keep accumulating.
absl::StatusOr<NoisyProjStepResult> NoisyProjStep(const TrainTask& task,
                                                  const LoraState& state,
                                                  const DpTrainConfig& config,
                                                  const Seed& seed);

struct NoisyProjResult {
  LoraState state;
  double sigma = 0.0;
  SmallRReport per_step;
  std::vector<double> mus;
  double eps = 0.0;
  double delta = 0.0;  // T(eps; sum mu) + T delta_M
  std::vector<TrajectoryRow> trajectory;
};

absl::StatusOr<NoisyProjResult> NoisyProjTrain(const TrainTask& task,
                                               const LoraState& state,
                                               const DpTrainConfig& config,
                                               const Seed& seed);

struct RpGdResult {
  Eigen::MatrixXd w;
  std::vector<TrajectoryRow> trajectory;
};

// w <- w - eta * grad L(w) M with M = Z Z^T, Z d x r with N(0, entry_var)
// entries (entry_var <= 0 means 1/r); M is drawn once unless redraw_each_step.
absl::StatusOr<RpGdResult> RpGd(const TrainTask& task, const Eigen::MatrixXd& w0,
                                double eta, int T, int r, bool redraw_each_step,
                                const Seed& seed, double entry_var = 0.0);

struct ClipComparison {
  double zeta = 0.0;
  double lower = 0.0;  // beta / sqrt(1 + zeta)
  double upper = 0.0;  // beta / sqrt(1 - zeta); +inf when zeta >= 1
  double beta_prime_equiv = 0.0;  // the simplification beta' = beta
  bool vacuous = false;
};

absl::StatusOr<ClipComparison> ClipCompare(int64_t n, int64_t r,
                                           double delta_jl, double beta);

struct TrainResult {
  Eigen::MatrixXd w;  // final effective weights
  std::vector<TrajectoryRow> trajectory;
  std::optional<Budget> budget;
  std::string accounting;  // human-readable composition method
};

// Trains from W0 = 0 with the configured mechanism. LoraA comes from
// seed.Child(0), the optimization from seed.Child(1).
absl::StatusOr<TrainResult> TrainModel(const TrainTask& task,
                                       const DpTrainConfig& config,
                                       const Seed& seed);

}  // namespace wishart_dp

#endif  // WISHART_DP_TRAINER_H_
