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

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "Eigen/Dense"
#include "wishart_dp/attacks.h"
#include "wishart_dp/mechanisms.h"
#include "wishart_dp/profiler.h"
#include "wishart_dp/randmat.h"

namespace wishart_dp {
namespace {

void BM_DrawWishartSpectrum(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int r = static_cast<int>(state.range(1));
  uint64_t k = 0;
  for (auto _ : state) {
    const WishartDraw draw = *DrawWishart(d, r, 1.0 / r, Seed{1, 0}.Child(k++));
    benchmark::DoNotOptimize(draw.NonzeroEigenvalues());
  }
}
BENCHMARK(BM_DrawWishartSpectrum)->Args({400, 16})->Args({2000, 50});

void BM_CaptureFraction(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const Eigen::MatrixXd dv = *SampleGaussianMatrix(100, s, 1.0, {2, 0});
  uint64_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        CaptureFraction(*SampleGaussianMatrix(100, 10, 0.1, Seed{3, 0}.Child(k++)), dv));
  }
}
BENCHMARK(BM_CaptureFraction)->Arg(1)->Arg(3);

void BM_NoisyMechM2(benchmark::State& state) {
  const MechanismInput in = *MechanismInput::Create(*SampleGaussianMatrix(256, 8, 1.0, {4, 0}));
  NoisyMechParams p;
  p.variant = Variant::kM2;
  p.r = 32;
  p.sigma_G = 1.0;
  uint64_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(NoisyMech(in, p, Seed{5, 0}.Child(k++)));
}
BENCHMARK(BM_NoisyMechM2);

// Privacy-loss samples per second; the inner loop of every profile.
void BM_SampleRatioStats(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  MonteCarloOptions mc;
  mc.threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(SampleRatioStats(0.999, 400, r, 1 << 16, {6, 0}, mc));
  }
  state.SetItemsProcessed(state.iterations() * (1 << 16));
}
BENCHMARK(BM_SampleRatioStats)->Arg(16)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SeparationTrial(benchmark::State& state) {
  const Eigen::MatrixXd v = *SampleGaussianMatrix(64, 8, 1.0, {7, 0});
  const Eigen::MatrixXd vp = *SampleGaussianMatrix(64, 8, 1.0, {8, 0});
  for (auto _ : state) {
    benchmark::DoNotOptimize(SeparationTrial(v, vp, 8, 0.0, 1000, {9, 0}, 1));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_SeparationTrial)->Unit(benchmark::kMillisecond);

void BM_RocAuc(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd s = *SampleGaussianMatrix(2, n, 1.0, {10, 0});
  std::vector<double> in(n), out(n);
  for (int i = 0; i < n; ++i) {
    in[i] = s(0, i) + 0.5;
    out[i] = s(1, i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(RocAuc(in, out));
}
BENCHMARK(BM_RocAuc)->Arg(200)->Arg(10000);

}  // namespace
}  // namespace wishart_dp
