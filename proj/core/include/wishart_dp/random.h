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

#ifndef WISHART_DP_RANDOM_H_
#define WISHART_DP_RANDOM_H_

#include <cstdint>
#include <functional>
#include <random>
#include <string>

namespace wishart_dp {

// Reproducible seed: a master key plus a substream index. Every randomized
// routine takes a Seed by value and derives child seeds for its sub-tasks, so
// results never depend on scheduling or worker count.
struct Seed {
  uint64_t master = 0;
  uint64_t stream = 0;

  // Deterministic child stream. Distinct indices give independent streams.
  Seed Child(uint64_t index) const;

  friend bool operator==(const Seed&, const Seed&) = default;
};

std::string ToString(const Seed& seed);

using Rng = std::mt19937_64;

Rng MakeRng(const Seed& seed);

// Draw from chi-square with `dof` degrees of freedom. Small integer dof use an
// exact sum of squared standard normals; larger dof go through a gamma draw.
double SampleChiSquare(Rng& rng, double dof);

inline constexpr int kChiSquareSumOfSquaresMaxDof = 64;

// Number of worker threads to use when the caller passes 0: the
// WISHART_DP_THREADS environment variable if set, otherwise the hardware
// concurrency.
int DefaultThreadCount();

// Runs body(chunk) for chunk in [0, num_chunks) on up to `threads` workers.
// Chunks are independent; callers store per-chunk results by index and reduce
// them in order afterwards.
void ParallelChunks(int64_t num_chunks, int threads,
                    const std::function<void(int64_t)>& body);

}  // namespace wishart_dp

#endif  // WISHART_DP_RANDOM_H_
