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

#include "wishart_dp/random.h"

#include <atomic>
#include <cstdlib>
#include <set>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.h"

namespace wishart_dp {
namespace {

TEST(SeedTest, SameSeedSameStream) {
  Rng a = MakeRng({7, 3});
  Rng b = MakeRng({7, 3});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(SeedTest, ChildrenAreDistinctAndDeterministic) {
  const Seed root{42, 0};
  std::set<uint64_t> first_draws;
  for (uint64_t i = 0; i < 1000; ++i) {
    EXPECT_EQ(root.Child(i), root.Child(i));
    Rng rng = MakeRng(root.Child(i));
    first_draws.insert(rng());
  }
  EXPECT_EQ(first_draws.size(), 1000u);
  EXPECT_FALSE(root.Child(1) == root.Child(1).Child(0));
  EXPECT_FALSE(Seed({1, 0}) == Seed({0, 1}));
}

TEST(SeedTest, ToStringIsStable) { EXPECT_EQ(ToString({7, 0}), "7:0"); }

TEST(ChiSquareSamplerTest, MeanAndVarianceBothRegimes) {
  for (double dof : {1.0, 8.0, 64.0, 65.0, 398.0, 2.5}) {
    Rng rng = MakeRng({11, static_cast<uint64_t>(dof * 10)});
    std::vector<double> x(200000);
    for (double& v : x) v = SampleChiSquare(rng, dof);
    const testing::Moments m = testing::ComputeMoments(x);
    EXPECT_NEAR(m.mean, dof, 4 * m.mean_se) << dof;
    EXPECT_NEAR(m.variance, 2 * dof, 4 * m.variance_se) << dof;
  }
}

TEST(ParallelChunksTest, VisitsEveryChunkOnceForAnyThreadCount) {
  for (int threads : {1, 2, 3, 8}) {
    std::vector<std::atomic<int>> hits(37);
    ParallelChunks(37, threads, [&](int64_t c) { hits[c]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(ParallelChunksTest, ResultsIndependentOfThreadCount) {
  auto run = [](int threads) {
    std::vector<uint64_t> out(64);
    ParallelChunks(64, threads, [&](int64_t c) {
      Rng rng = MakeRng(Seed{5, 0}.Child(c));
      out[c] = rng();
    });
    return out;
  };
  EXPECT_EQ(run(1), run(7));
}

TEST(DefaultThreadCountTest, ReadsEnvironment) {
  setenv("WISHART_DP_THREADS", "3", 1);
  EXPECT_EQ(DefaultThreadCount(), 3);
  unsetenv("WISHART_DP_THREADS");
  EXPECT_GE(DefaultThreadCount(), 1);
}

}  // namespace
}  // namespace wishart_dp
