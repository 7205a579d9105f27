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

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "Eigen/Dense"
#include "gtest/gtest.h"
#include "wishart_dp/randmat.h"
#include "wishart_dp/status.h"
#include "wishart_dp/trainer.h"

namespace wishart_dp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(SeparationTrialTest, NeverCollides) {
  const MatrixXd v = *SampleGaussianMatrix(64, 8, 1.0, {1, 0});
  const MatrixXd vp = *SampleGaussianMatrix(64, 8, 1.0, {2, 0});
  const SeparationResult res = *SeparationTrial(v, vp, 8, 0.0, 10000, {3, 0});
  EXPECT_EQ(res.n_trials, 10000);
  EXPECT_EQ(res.n_equal, 0);
  EXPECT_GT(res.min_relative_residual, kSeparationTolerance);
  EXPECT_GT(res.max_residual, 0.0);
}

TEST(SeparationTrialTest, RankOneInTwoDimensions) {
  MatrixXd v = MatrixXd::Zero(2, 1);
  MatrixXd vp(2, 1);
  vp << 0.6, 0.8;
  const SeparationResult res = *SeparationTrial(v, vp, 1, 1.0, 10000, {4, 0});
  EXPECT_EQ(res.n_equal, 0);
  // Z^T u = 0 has probability zero: |z . u| / |z| is never tiny.
  int zero_hits = 0;
  for (int k = 0; k < 10000; ++k) {
    const VectorXd z = SampleGaussianMatrix(2, 1, 1.0, Seed{5, 0}.Child(k))->col(0);
    zero_hits += std::abs(z.dot(vp.col(0))) <= kSeparationTolerance * z.norm();
  }
  EXPECT_EQ(zero_hits, 0);
}

TEST(SeparationTrialTest, ToleranceIsScaleInvariant) {
  const MatrixXd v = *SampleGaussianMatrix(16, 4, 1.0, {6, 0});
  const MatrixXd dv = *SampleGaussianMatrix(16, 4, 1.0, {7, 0});
  const SeparationResult big = *SeparationTrial(v, v + dv, 4, 0.0, 2000, {8, 0});
  const SeparationResult tiny = *SeparationTrial(v, v + 1e-12 * dv, 4, 0.0, 2000, {8, 0});
  EXPECT_EQ(tiny.n_equal, 0);
  EXPECT_NEAR(tiny.min_relative_residual, big.min_relative_residual,
              1e-3 * big.min_relative_residual);
}

TEST(SeparationTrialTest, IndependentOfThreadCount) {
  const MatrixXd v = *SampleGaussianMatrix(16, 4, 1.0, {9, 0});
  const MatrixXd vp = *SampleGaussianMatrix(16, 4, 1.0, {10, 0});
  const SeparationResult a = *SeparationTrial(v, vp, 4, 0.0, 3000, {11, 0}, 1);
  const SeparationResult b = *SeparationTrial(v, vp, 4, 0.0, 3000, {11, 0}, 4);
  EXPECT_EQ(a.max_residual, b.max_residual);
  EXPECT_EQ(a.min_relative_residual, b.min_relative_residual);
}

TEST(SeparationTrialTest, Errors) {
  const MatrixXd v = MatrixXd::Ones(4, 2);
  EXPECT_EQ(KindOf(SeparationTrial(v, v, 2, 0.0, 10, {1, 0}).status()),
            ErrorKind::kDegenerateInput);
  EXPECT_EQ(KindOf(SeparationTrial(v, MatrixXd::Ones(4, 3), 2, 0.0, 10, {1, 0}).status()),
            ErrorKind::kDomain);
}

TEST(CanaryTest, LeastLikelyOfTwo) {
  VectorXd scores(2);
  scores << 1.5, -0.5;
  EXPECT_EQ(LeastLikelyClass(scores), 1);
  scores << -2.0, 3.0;
  EXPECT_EQ(LeastLikelyClass(scores), 0);
}

DpTrainConfig NoiseFreeProjection(int r) {
  DpTrainConfig c;
  c.mechanism = TrainMechanism::kNoisyProj;
  c.sigma = 0.0;
  c.clip = 1e9;
  c.r = r;
  c.resample_A = true;
  c.T = 200;
  c.eta = 0.5;
  return c;
}

TEST(CanaryTest, DeterministicAndTraceable) {
  const TrainTask task = *MakeLogisticTask(100, 6, 2, 2.0, 1e-3, {12, 0});
  const DpTrainConfig c = NoiseFreeProjection(3);
  const Canary a = *CraftCanary(task, c, {13, 0});
  const Canary b = *CraftCanary(task, c, {13, 0});
  EXPECT_TRUE((a.x_q.array() == b.x_q.array()).all());
  EXPECT_EQ(a.y_q, b.y_q);
  EXPECT_EQ(ToString(a.reference_seed), ToString(b.reference_seed));
  EXPECT_EQ(a.x_q.size(), 6);
  // Retraining the recorded reference model reproduces the label choice.
  DpTrainConfig quiet = c;
  quiet.record_trajectory = false;
  const TrainResult ref = *TrainModel(task, quiet, a.reference_seed);
  const VectorXd scores = ref.w * a.x_q;
  EXPECT_EQ(a.y_q, scores(0) > scores(1) ? 1 : 0);
}

TEST(CanaryTest, NeedsClassificationTask) {
  const TrainTask ridge = *MakeRidgeTask(50, 4, 1, 0.1, 0.0, {14, 0});
  EXPECT_EQ(KindOf(CraftCanary(ridge, NoiseFreeProjection(2), {1, 0}).status()),
            ErrorKind::kDomain);
}

TEST(RocAucTest, Examples) {
  RocSummary s = *RocAuc({0.1, 0.2}, {0.5, 0.9, 1.0});
  EXPECT_EQ(s.auc, 1.0);
  EXPECT_EQ(s.balanced_acc, 1.0);
  EXPECT_GE(s.threshold, 0.2);
  EXPECT_LT(s.threshold, 0.5);
  s = *RocAuc({1.0, 2.0, 2.0}, {2.0, 1.0, 2.0});
  EXPECT_EQ(s.auc, 0.5);
  EXPECT_EQ(RocAuc({1, 3}, {2, 4})->auc, 0.75);
  EXPECT_EQ(KindOf(RocAuc({}, {1.0}).status()), ErrorKind::kDomain);
}

TEST(RocAucTest, MatchesBruteForceAndIsAntisymmetric) {
  std::mt19937_64 rng(15);
  std::uniform_int_distribution<int> coarse(0, 20);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> in(37), out(23);
    for (double& x : in) x = coarse(rng) * 0.5;
    for (double& x : out) x = coarse(rng) * 0.5 + 1.0;
    double wins = 0;
    for (double a : in) {
      for (double b : out) wins += a < b ? 1.0 : (a == b ? 0.5 : 0.0);
    }
    const RocSummary s = *RocAuc(in, out);
    EXPECT_NEAR(s.auc, wins / (37.0 * 23.0), 1e-15);
    EXPECT_NEAR(s.auc + RocAuc(out, in)->auc, 1.0, 1e-15);
    // Brute-force balanced accuracy over all unique thresholds.
    double best = 0.5;
    std::vector<double> all = in;
    all.insert(all.end(), out.begin(), out.end());
    for (double th : all) {
      double tp = 0, tn = 0;
      for (double a : in) tp += a <= th;
      for (double b : out) tn += b > th;
      best = std::max(best, 0.5 * (tp / 37 + tn / 23));
    }
    EXPECT_NEAR(s.balanced_acc, best, 1e-15);
  }
}

TEST(RocAucTest, StdErrorShrinksWithSamples) {
  EXPECT_EQ(AucStdError(1.0, 100, 100), 0.0);
  EXPECT_GT(AucStdError(0.7, 50, 50), AucStdError(0.7, 500, 500));
  EXPECT_NEAR(AucStdError(0.5, 200, 200), std::sqrt((0.25 + 199 * (1 / 3.0 - 0.25) * 2) / 40000),
              1e-15);
}

TEST(RunMiaTest, NoiseFreeProjectionIsSeparable) {
  const TrainTask task = *MakeLogisticTask(200, 20, 10, 2.0, 1e-3, {16, 0});
  const DpTrainConfig c = NoiseFreeProjection(8);
  const Canary canary = *CraftCanary(task, c, {17, 0});
  const MiaResult res = *RunMia(task, c, canary, 30, 30, {18, 0});
  EXPECT_GE(res.auc, 0.99);
  EXPECT_EQ(res.scores_in.size(), 30u);
  EXPECT_EQ(res.scores_out.size(), 30u);
}

TEST(RunMiaTest, PureNoiseIsChance) {
  const TrainTask task = *MakeLogisticTask(100, 8, 3, 2.0, 1e-3, {19, 0});
  DpTrainConfig c = NoiseFreeProjection(4);
  c.sigma = 1e6;
  c.clip = 1.0;
  c.T = 5;
  c.eta = 0.1;
  const Canary canary = *CraftCanary(task, c, {20, 0});
  const MiaResult res = *RunMia(task, c, canary, 100, 100, {21, 0});
  EXPECT_NEAR(res.auc, 0.5, 3 * AucStdError(0.5, 100, 100));
}

TEST(RunMiaTest, BitReproducibleAcrossThreads) {
  const TrainTask task = *MakeLogisticTask(60, 8, 3, 2.0, 1e-3, {22, 0});
  DpTrainConfig c = NoiseFreeProjection(4);
  c.sigma = 0.3;
  c.clip = 1.0;
  c.T = 20;
  const Canary canary = *CraftCanary(task, c, {23, 0});
  const MiaResult a = *RunMia(task, c, canary, 8, 8, {24, 0}, 1);
  const MiaResult b = *RunMia(task, c, canary, 8, 8, {24, 0}, 4);
  EXPECT_EQ(a.scores_in, b.scores_in);
  EXPECT_EQ(a.scores_out, b.scores_out);
  EXPECT_EQ(a.auc, b.auc);
}

TEST(RunMiaTest, Errors) {
  const TrainTask task = *MakeLogisticTask(60, 8, 3, 2.0, 1e-3, {22, 0});
  const DpTrainConfig c = NoiseFreeProjection(4);
  const Canary canary = *CraftCanary(task, c, {23, 0});
  EXPECT_EQ(KindOf(RunMia(task, c, canary, 1, 5, {1, 0}).status()), ErrorKind::kDomain);
}

}  // namespace
}  // namespace wishart_dp
