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

#include "wishart_dp/attacks.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "absl/strings/str_format.h"
#include "wishart_dp/randmat.h"
#include "wishart_dp/status.h"

namespace wishart_dp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

absl::StatusOr<SeparationResult> SeparationTrial(const MatrixXd& v,
                                                 const MatrixXd& v_prime, int r,
                                                 double entry_var,
                                                 int64_t n_trials,
                                                 const Seed& seed,
                                                 int threads) {
  if (v.rows() != v_prime.rows() || v.cols() != v_prime.cols() || v.size() == 0) {
    return DomainError("V and V' must be non-empty and of equal shape");
  }
  if (r < 1) return DomainError("r must be >= 1");
  if (n_trials < 1) return DomainError("n_trials must be >= 1");
  const MatrixXd dv = v - v_prime;
  const double dv_norm = dv.norm();
  if (!(dv_norm > 0.0)) {
    return DegenerateInputError("V equals V'; the separation test needs V != V'");
  }
  const int d = static_cast<int>(v.rows());
  const double var = entry_var > 0.0 ? entry_var : 1.0 / r;
  std::vector<double> abs_residual(n_trials);
  std::vector<double> rel_residual(n_trials);
  constexpr int64_t kChunk = 256;
  const int64_t chunks = (n_trials + kChunk - 1) / kChunk;
  ParallelChunks(chunks, threads, [&](int64_t c) {
    MatrixXd z(d, r);
    const int64_t end = std::min(n_trials, (c + 1) * kChunk);
    for (int64_t k = c * kChunk; k < end; ++k) {
      Rng rng = MakeRng(seed.Child(static_cast<uint64_t>(k)));
      FillGaussian(rng, var, z);
      const double m_norm = (z.transpose() * z).norm();  // ||Z Z^T||_F
      const double res = (z * (z.transpose() * dv)).norm();
      abs_residual[k] = res;
      rel_residual[k] = m_norm > 0.0 ? res / (dv_norm * m_norm) : 0.0;
    }
  });
  SeparationResult out;
  out.n_trials = n_trials;
  out.max_residual = *std::max_element(abs_residual.begin(), abs_residual.end());
  out.min_relative_residual =
      *std::min_element(rel_residual.begin(), rel_residual.end());
  out.n_equal = std::count_if(rel_residual.begin(), rel_residual.end(),
                              [](double x) { return x <= kSeparationTolerance; });
  return out;
}

int LeastLikelyClass(const VectorXd& scores) {
  Eigen::Index best = 0;
  scores.minCoeff(&best);
  return static_cast<int>(best);
}

absl::StatusOr<Canary> CraftCanary(const TrainTask& task,
                                   const DpTrainConfig& config,
                                   const Seed& seed) {
  if (task.kind != TaskKind::kLogistic || task.n_classes < 2) {
    return DomainError("canary crafting needs a classification task");
  }
  Canary canary;
  WDP_ASSIGN_OR_RETURN(const MatrixXd x,
                       SampleGaussianMatrix(task.n_features(), 1, 1.0,
                                            seed.Child(0)));
  canary.x_q = x.col(0);
  canary.reference_seed = seed.Child(1);
  DpTrainConfig quiet = config;
  quiet.record_trajectory = false;
  WDP_ASSIGN_OR_RETURN(const TrainResult reference,
                       TrainModel(task, quiet, canary.reference_seed));
  canary.y_q = LeastLikelyClass(reference.w * canary.x_q);
  return canary;
}

absl::StatusOr<RocSummary> RocAuc(const std::vector<double>& scores_in,
                                  const std::vector<double>& scores_out) {
  if (scores_in.empty() || scores_out.empty()) {
    return DomainError("roc_auc needs two non-empty score lists");
  }
  std::vector<double> in = scores_in;
  std::vector<double> out = scores_out;
  std::sort(in.begin(), in.end());
  std::sort(out.begin(), out.end());
  const double n_in = static_cast<double>(in.size());
  const double n_out = static_cast<double>(out.size());
  // For each IN score count OUT scores strictly above and tied.
  double wins = 0.0;
  for (double s : in) {
    const auto lo = std::lower_bound(out.begin(), out.end(), s);
    const auto hi = std::upper_bound(out.begin(), out.end(), s);
    wins += static_cast<double>(out.end() - hi) + 0.5 * static_cast<double>(hi - lo);
  }
  RocSummary summary;
  summary.auc = wins / (n_in * n_out);

  std::vector<double> thresholds = in;
  thresholds.insert(thresholds.end(), out.begin(), out.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  summary.balanced_acc = 0.5;  // threshold below every score
  summary.threshold = thresholds.front() - 1.0;
  for (double th : thresholds) {
    const double tpr =
        static_cast<double>(std::upper_bound(in.begin(), in.end(), th) - in.begin()) /
        n_in;
    const double tnr =
        static_cast<double>(out.end() - std::upper_bound(out.begin(), out.end(), th)) /
        n_out;
    const double bal = 0.5 * (tpr + tnr);
    if (bal > summary.balanced_acc) {
      summary.balanced_acc = bal;
      summary.threshold = th;
    }
  }
  return summary;
}

double AucStdError(double auc, int64_t n_in, int64_t n_out) {
  const double q1 = auc / (2.0 - auc);
  const double q2 = 2.0 * auc * auc / (1.0 + auc);
  const double var = (auc * (1.0 - auc) + (n_in - 1.0) * (q1 - auc * auc) +
                      (n_out - 1.0) * (q2 - auc * auc)) /
                     (static_cast<double>(n_in) * static_cast<double>(n_out));
  return std::sqrt(std::max(0.0, var));
}

absl::StatusOr<MiaResult> RunMia(const TrainTask& task,
                                 const DpTrainConfig& config,
                                 const Canary& canary, int n_in, int n_out,
                                 const Seed& seed, int threads) {
  if (n_in < 2 || n_out < 2) return DomainError("need at least 2 IN and 2 OUT models");
  if (task.kind != TaskKind::kLogistic) {
    return DomainError("membership inference needs a classification task");
  }
  WDP_ASSIGN_OR_RETURN(const TrainTask task_in,
                       WithExample(task, canary.x_q, canary.y_q));
  DpTrainConfig quiet = config;
  quiet.record_trajectory = false;
  const int total = n_in + n_out;
  std::vector<double> scores(total, 0.0);
  std::vector<absl::Status> errors(total);
  ParallelChunks(total, threads, [&](int64_t k) {
    const TrainTask& data = k < n_in ? task_in : task;
    absl::StatusOr<TrainResult> model =
        TrainModel(data, quiet, seed.Child(static_cast<uint64_t>(k)));
    if (!model.ok()) {
      errors[k] = model.status();
      return;
    }
    scores[k] = ExampleLoss(task, model->w, canary.x_q, canary.y_q);
  });
  for (const absl::Status& st : errors) WDP_RETURN_IF_ERROR(st);
  MiaResult result;
  result.scores_in.assign(scores.begin(), scores.begin() + n_in);
  result.scores_out.assign(scores.begin() + n_in, scores.end());
  WDP_ASSIGN_OR_RETURN(const RocSummary roc,
                       RocAuc(result.scores_in, result.scores_out));
  result.auc = roc.auc;
  result.balanced_acc = roc.balanced_acc;
  result.threshold = roc.threshold;
  result.auc_std_error = AucStdError(roc.auc, n_in, n_out);
  return result;
}

}  // namespace wishart_dp
