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

// Special functions and closed-form accountants: the per-call costs that
// dominate every accountant evaluation.

#include <benchmark/benchmark.h>

#include "wishart_dp/accountants.h"
#include "wishart_dp/specialfn.h"

namespace wishart_dp {
namespace {

void BM_StudentTQuantile(benchmark::State& state) {
  const double nu = static_cast<double>(state.range(0));
  double p = 0.9;
  for (auto _ : state) {
    benchmark::DoNotOptimize(StudentTQuantile(nu, p));
    p = p > 0.99999 ? 0.9 : p + 1e-6;
  }
}
BENCHMARK(BM_StudentTQuantile)->Arg(1)->Arg(8)->Arg(512);

void BM_ChiSquareQuantile(benchmark::State& state) {
  const double nu = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ChiSquareQuantile(nu, 0.999));
}
BENCHMARK(BM_ChiSquareQuantile)->Arg(2)->Arg(527)->Arg(100000);

void BM_RegIncBeta(benchmark::State& state) {
  const double b = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(RegIncBeta(0.046875, 32.0, b));
}
BENCHMARK(BM_RegIncBeta)->Arg(45)->Arg(992)->Arg(999000);

void BM_GaussianTradeoff(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(GaussianTradeoff(1.0, 4.0));
}
BENCHMARK(BM_GaussianTradeoff);

void BM_AccountSmallR(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(AccountSmallR(1.0, 1.0, 1, 2048, 64, 0.5, 0.05));
  }
}
BENCHMARK(BM_AccountSmallR);

void BM_ChooseAlpha(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(ChooseAlpha(1.0, 4.0, 1, 2048, 64, 0.5));
}
BENCHMARK(BM_ChooseAlpha);

// Essentially the closed-form part: one support sample.
void BM_AccountVecClosedForm(benchmark::State& state) {
  VecAccountOptions o;
  o.support_samples = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(AccountVec({0.999, 400, static_cast<int>(state.range(0))}, 1e-3, o));
  }
}
BENCHMARK(BM_AccountVecClosedForm)->Arg(16)->Arg(512);

}  // namespace
}  // namespace wishart_dp
