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

#include "wishart_dp/randmat.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "Eigen/Dense"
#include "boost/math/distributions/beta.hpp"
#include "gtest/gtest.h"
#include "test_util.h"
#include "wishart_dp/status.h"

namespace wishart_dp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(SampleGaussianMatrixTest, Deterministic) {
  EXPECT_EQ(*SampleGaussianMatrix(2, 2, 1.0, {9, 1}),
            *SampleGaussianMatrix(2, 2, 1.0, {9, 1}));
  EXPECT_NE(*SampleGaussianMatrix(2, 2, 1.0, {9, 1}),
            *SampleGaussianMatrix(2, 2, 1.0, {9, 2}));
}

TEST(SampleGaussianMatrixTest, Errors) {
  EXPECT_EQ(KindOf(SampleGaussianMatrix(0, 2, 1.0, {1, 0}).status()),
            ErrorKind::kDomain);
  EXPECT_EQ(KindOf(SampleGaussianMatrix(2, 2, 0.0, {1, 0}).status()),
            ErrorKind::kDomain);
}

TEST(SampleGaussianMatrixTest, LawOfLargeNumbers) {
  const MatrixXd z = *SampleGaussianMatrix(1000, 1000, 1.0, {3, 0});
  const double mean = z.mean();
  const double var = (z.array() - mean).square().sum() / (z.size() - 1);
  EXPECT_GE(mean, -0.01);
  EXPECT_LE(mean, 0.01);
  EXPECT_GE(var, 0.99);
  EXPECT_LE(var, 1.01);
}

TEST(SampleGaussianMatrixTest, FrobeniusExpectation) {
  double sum = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    sum += SampleGaussianMatrix(3, 2, 0.5, Seed{4, 0}.Child(i))->squaredNorm();
  }
  EXPECT_NEAR(sum / n, 3.0, 0.05 * 3.0);
}

TEST(WishartDrawTest, MeanIsIdentity) {
  MatrixXd mean = MatrixXd::Zero(4, 4);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    mean += DrawWishart(4, 4, 0.25, Seed{5, 0}.Child(i))->M();
  }
  mean /= n;
  EXPECT_LE((mean - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(WishartDrawTest, RankOneOuterProduct) {
  const WishartDraw draw = *DrawWishart(3, 1, {6, 0});
  EXPECT_EQ(NumericalRank(draw.M()), 1);
  EXPECT_EQ(draw.entry_var(), 1.0);
}

TEST(WishartDrawTest, SymmetricPsdAndApplyMatchesM) {
  for (int i = 0; i < 10; ++i) {
    const WishartDraw draw = *DrawWishart(12, 5, Seed{7, 0}.Child(i));
    const MatrixXd& m = draw.M();
    EXPECT_EQ(m, m.transpose());
    const double op = m.operatorNorm();
    for (int k = 0; k < 100; ++k) {
      const VectorXd x = *SampleGaussianMatrix(12, 1, 1.0, Seed{8, 0}.Child(k));
      EXPECT_GE(x.dot(m * x), -1e-10 * op * x.squaredNorm());
    }
    const MatrixXd v = *SampleGaussianMatrix(12, 3, 1.0, {9, 0});
    EXPECT_LE((draw.Apply(v) - m * v).norm(), 1e-12 * m.norm() * v.norm());
    EXPECT_EQ(draw.NonzeroEigenvalues().size(), 5);
  }
}

TEST(WishartDrawTest, CopiesShareLazyGram) {
  const WishartDraw a = *DrawWishart(6, 2, {10, 0});
  const WishartDraw b = a;
  EXPECT_EQ(&a.M(), &b.M());
}

TEST(WishartDrawTest, SpectrumInterval) {
  const int d = 2000, r = 50;
  const SpectrumInterval iv = WishartSpectrumInterval(d, r, 1.0 / r, 4.0);
  int hits = 0;
  for (int i = 0; i < 100; ++i) {
    const VectorXd eig =
        DrawWishart(d, r, 1.0 / r, Seed{11, 0}.Child(i))->NonzeroEigenvalues();
    hits += eig.minCoeff() >= iv.lower && eig.maxCoeff() <= iv.upper;
  }
  EXPECT_GE(hits, 99);
}

TEST(ColumnProjectorTest, Examples) {
  MatrixXd e1 = MatrixXd::Zero(3, 1);
  e1(0, 0) = 1.0;
  const MatrixXd p = *ColumnProjector(e1);
  MatrixXd want = MatrixXd::Zero(3, 3);
  want(0, 0) = 1.0;
  EXPECT_LE((p - want).norm(), 1e-15);

  const MatrixXd q =
      SampleGaussianMatrix(6, 3, 1.0, {12, 0})->householderQr().householderQ() *
      MatrixXd::Identity(6, 3);
  EXPECT_LE((*ColumnProjector(q) - q * q.transpose()).norm(), 1e-12);

  const MatrixXd z = *SampleGaussianMatrix(5, 2, 1.0, {13, 0});
  const MatrixXd pz = *ColumnProjector(z);
  EXPECT_NEAR(pz.trace(), 2.0, 1e-9);
  EXPECT_LE((pz - pz.transpose()).norm(), 1e-15);
  EXPECT_LE((pz * pz - pz).norm(), 1e-10);
  EXPECT_LE((pz * z - z).norm(), 1e-9 * z.norm());
}

TEST(ColumnProjectorTest, ZeroIsDegenerate) {
  EXPECT_EQ(KindOf(ColumnProjector(MatrixXd::Zero(4, 2)).status()),
            ErrorKind::kDegenerateInput);
}

MatrixXd RandomOrthonormal(int d, int s, const Seed& seed) {
  const MatrixXd g = *SampleGaussianMatrix(d, s, 1.0, seed);
  return g.householderQr().householderQ() * MatrixXd::Identity(d, s);
}

TEST(OrthogonalSplitTest, EmptyConditioningSet) {
  const MatrixXd z = *SampleGaussianMatrix(5, 3, 1.0, {14, 0});
  const OrthogonalSplit split = *SplitOrthogonal(z, MatrixXd(5, 0));
  EXPECT_EQ(split.p, 0);
  EXPECT_TRUE(split.M_par.isZero(0.0));
  EXPECT_LE((split.M_perp - z * z.transpose()).norm(), 1e-14);
}

TEST(OrthogonalSplitTest, FullConditioningSet) {
  const MatrixXd z = *SampleGaussianMatrix(5, 3, 1.0, {15, 0});
  const OrthogonalSplit split = *SplitOrthogonal(z, RandomOrthonormal(5, 5, {16, 0}));
  EXPECT_EQ(split.p, 3);
  EXPECT_LE(split.M_perp.norm(), 1e-12 * z.squaredNorm());
}

TEST(OrthogonalSplitTest, RandomInstanceInvariants) {
  const MatrixXd z = *SampleGaussianMatrix(6, 3, 1.0, {17, 0});
  const MatrixXd u = RandomOrthonormal(6, 2, {18, 0});
  const OrthogonalSplit split = *SplitOrthogonal(z, u);
  const MatrixXd m = z * z.transpose();
  EXPECT_LE((m - split.M_par - split.M_perp).norm(), 1e-9);
  EXPECT_LE((u.transpose() * split.Z_perp).norm(), 1e-9);
  EXPECT_LE((split.M_perp * u).norm(), 1e-9);
  EXPECT_LE((split.Z_par * split.Z_perp.transpose()).norm(), 1e-9);
  EXPECT_LE(split.p, 2);
  // Posterior stability: M v = M_par v for v in span(U).
  const VectorXd v = u * VectorXd::Ones(2);
  EXPECT_LE((m * v - split.M_par * v).norm(), 1e-9);
}

TEST(OrthogonalSplitTest, RejectsNonOrthonormal) {
  const MatrixXd z = *SampleGaussianMatrix(6, 3, 1.0, {19, 0});
  EXPECT_EQ(KindOf(SplitOrthogonal(z, 2.0 * RandomOrthonormal(6, 2, {20, 0}))
                       .status()),
            ErrorKind::kDomain);
}

TEST(CaptureFractionTest, FullAndZero) {
  const MatrixXd z = *SampleGaussianMatrix(7, 3, 1.0, {21, 0});
  const MatrixXd inside = z * MatrixXd::Ones(3, 2);
  EXPECT_NEAR(*CaptureFraction(z, inside), 1.0, 1e-12);
  const MatrixXd p = *ColumnProjector(z);
  const MatrixXd outside =
      (MatrixXd::Identity(7, 7) - p) * *SampleGaussianMatrix(7, 1, 1.0, {22, 0});
  EXPECT_NEAR(*CaptureFraction(z, outside), 0.0, 1e-12);
  EXPECT_EQ(KindOf(CaptureFraction(z, MatrixXd::Zero(7, 1)).status()),
            ErrorKind::kDegenerateInput);
}

std::vector<double> RankOneCaptures(const VectorXd& dv, int d, int r, int n,
                                    uint64_t master) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = *CaptureFraction(
        *SampleGaussianMatrix(d, r, 1.0 / r, Seed{master, 0}.Child(i)), dv);
  }
  return out;
}

TEST(CaptureFractionTest, RankOneIsBetaDistributed) {
  const int d = 100, r = 10, n = 100000;
  VectorXd dv = VectorXd::Zero(d);
  dv(3) = 2.0;
  const std::vector<double> x = RankOneCaptures(dv, d, r, n, 23);
  const boost::math::beta_distribution<double> beta(r / 2.0, (d - r) / 2.0);
  EXPECT_LT(testing::KsStatistic(x, [&](double v) { return boost::math::cdf(beta, v); }),
            0.01);
}

TEST(CaptureFractionTest, HaarInvariance) {
  const int d = 100, r = 10, n = 100000;
  VectorXd dv = VectorXd::Zero(d);
  dv(0) = 1.0;
  const MatrixXd q = RandomOrthonormal(d, d, {24, 0});
  const std::vector<double> a = RankOneCaptures(dv, d, r, n, 25);
  const std::vector<double> b = RankOneCaptures(q * dv, d, r, n, 26);
  EXPECT_LT(testing::TwoSampleKs(a, b), 0.02);
}

TEST(MatrixCsvTest, RoundTrip) {
  const MatrixXd m = *SampleGaussianMatrix(3, 4, 1.0, {27, 0});
  std::stringstream buf;
  WriteMatrixCsv(buf, m);
  EXPECT_EQ(buf.str().substr(0, 6), "# 3 4\n");
  EXPECT_EQ(*ReadMatrixCsv(buf), m);
  std::stringstream bad("3 4\n1,2\n");
  EXPECT_FALSE(ReadMatrixCsv(bad).ok());
}

}  // namespace
}  // namespace wishart_dp
