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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"

namespace wishart_dp {
namespace {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Seed Seed::Child(uint64_t index) const {
  return Seed{master, SplitMix64(SplitMix64(stream) ^ SplitMix64(~index))};
}

std::string ToString(const Seed& seed) {
  return absl::StrCat(seed.master, ":", seed.stream);
}

Rng MakeRng(const Seed& seed) {
  std::seed_seq seq{static_cast<uint32_t>(seed.master),
                    static_cast<uint32_t>(seed.master >> 32),
                    static_cast<uint32_t>(seed.stream),
                    static_cast<uint32_t>(seed.stream >> 32)};
  return Rng(seq);
}

double SampleChiSquare(Rng& rng, double dof) {
  const double rounded = std::round(dof);
  if (rounded == dof && dof <= kChiSquareSumOfSquaresMaxDof) {
    std::normal_distribution<double> normal(0.0, 1.0);
    double sum = 0.0;
    for (int i = 0; i < static_cast<int>(dof); ++i) {
      const double g = normal(rng);
      sum += g * g;
    }
    return sum;
  }
  std::gamma_distribution<double> gamma(0.5 * dof, 2.0);
  return gamma(rng);
}

int DefaultThreadCount() {
  if (const char* env = std::getenv("WISHART_DP_THREADS"); env != nullptr) {
    int value = 0;
    if (absl::SimpleAtoi(env, &value) && value > 0) return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void ParallelChunks(int64_t num_chunks, int threads,
                    const std::function<void(int64_t)>& body) {
  if (threads <= 0) threads = DefaultThreadCount();
  const int64_t workers = std::min<int64_t>(threads, num_chunks);
  if (workers <= 1) {
    for (int64_t c = 0; c < num_chunks; ++c) body(c);
    return;
  }
  std::atomic<int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int64_t c = next.fetch_add(1); c < num_chunks;
           c = next.fetch_add(1)) {
        body(c);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace wishart_dp
