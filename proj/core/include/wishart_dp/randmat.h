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

// Seeded Gaussian and Wishart sampling, column-space projectors and the exact
// orthogonal split used by the large-rank analysis.

#ifndef WISHART_DP_RANDMAT_H_
#define WISHART_DP_RANDMAT_H_

#include <iosfwd>
#include <memory>

#include "Eigen/Dense"
#include "absl/status/statusor.h"
#include "wishart_dp/random.h"

namespace wishart_dp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Entries i.i.d. N(0, var).
absl::StatusOr<MatrixXd> SampleGaussianMatrix(int rows, int cols, double var,
                                              const Seed& seed);

// Fills `out` (already sized) with i.i.d. N(0, var) entries from `rng`.
void FillGaussian(Rng& rng, double var, MatrixXd& out);

// A Wishart matrix M = Z Z^T held through its factor Z (d x r). The Gram
// matrix is formed on first use and shared between copies; the object is
// otherwise immutable and safe to share across threads.
class WishartDraw {
 public:
  static absl::StatusOr<WishartDraw> FromFactor(MatrixXd z, double entry_var);

  const MatrixXd& Z() const { return z_; }
  int d() const { return static_cast<int>(z_.rows()); }
  int r() const { return static_cast<int>(z_.cols()); }
  double entry_var() const { return entry_var_; }

  // M = Z Z^T, materialized lazily.
  const MatrixXd& M() const;

  // M * v computed as Z (Z^T v), without forming M.
  MatrixXd Apply(const MatrixXd& v) const;

  // The min(d, r) eigenvalues of M that are nonzero almost surely, ascending.
  VectorXd NonzeroEigenvalues() const;

 private:
  struct GramCache;
  WishartDraw(MatrixXd z, double entry_var);

  MatrixXd z_;
  double entry_var_;
  std::shared_ptr<GramCache> gram_;
};

// Z has i.i.d. N(0, entry_var) entries; entry_var = 1/r gives E[M] = I_d.
absl::StatusOr<WishartDraw> DrawWishart(int d, int r, double entry_var,
                                        const Seed& seed);
inline absl::StatusOr<WishartDraw> DrawWishart(int d, int r,
                                               const Seed& seed) {
  return DrawWishart(d, r, 1.0 / r, seed);
}

// Default singular-value cutoff: max(rows, cols) * machine epsilon * s_max.
double DefaultRankTolerance(const MatrixXd& a, double s_max);

// Orthonormal basis (d x rank) of col(Z); rank_tol <= 0 selects the default.
absl::StatusOr<MatrixXd> ColumnBasis(const MatrixXd& z, double rank_tol = 0.0);

// Orthogonal projector onto col(Z).
absl::StatusOr<MatrixXd> ColumnProjector(const MatrixXd& z,
                                         double rank_tol = 0.0);

int NumericalRank(const MatrixXd& a, double rank_tol = 0.0);

struct OrthogonalSplit {
  MatrixXd U;       // d x s, orthonormal basis of the conditioning subspace
  int p = 0;        // rank of G = U^T Z
  MatrixXd P_H;     // r x r projector onto rowspan(G)
  MatrixXd Z_par;   // Z P_H
  MatrixXd Z_perp;  // Z (I - P_H); satisfies U^T Z_perp = 0
  MatrixXd M_par;   // Z P_H Z^T
  MatrixXd M_perp;  // Z (I - P_H) Z^T
};

absl::StatusOr<OrthogonalSplit> SplitOrthogonal(const MatrixXd& z,
                                                const MatrixXd& u,
                                                double rank_tol = 0.0);

// ||P_M dv||_F^2 / ||dv||_F^2 where P_M projects onto col(Z).
absl::StatusOr<double> CaptureFraction(const MatrixXd& z, const MatrixXd& dv);

// Interval that the nonzero eigenvalues of a d x d rank-r Wishart matrix with
// entry variance `entry_var` fall into with probability >= 1 - 2 exp(-t^2/2):
// [(sqrt(d/r) - 1 - t/sqrt(r))^2, (sqrt(d/r) + 1 + t/sqrt(r))^2] * r*entry_var.
struct SpectrumInterval {
  double lower = 0.0;
  double upper = 0.0;
};
SpectrumInterval WishartSpectrumInterval(int d, int r, double entry_var,
                                         double t);

// Row-major CSV with a "# rows cols" header line.
void WriteMatrixCsv(std::ostream& out, const MatrixXd& m);
absl::StatusOr<MatrixXd> ReadMatrixCsv(std::istream& in);

}  // namespace wishart_dp

#endif  // WISHART_DP_RANDMAT_H_
