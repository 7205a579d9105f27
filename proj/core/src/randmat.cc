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

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "absl/strings/numbers.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/match.h"
#include "wishart_dp/status.h"

namespace wishart_dp {

struct WishartDraw::GramCache {
  std::once_flag once;
  MatrixXd m;
};

void FillGaussian(Rng& rng, double var, MatrixXd& out) {
  std::normal_distribution<double> normal(0.0, std::sqrt(var));
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = normal(rng);
  }
}

absl::StatusOr<MatrixXd> SampleGaussianMatrix(int rows, int cols, double var,
                                              const Seed& seed) {
  if (rows < 1 || cols < 1) {
    return DomainError(
        absl::StrFormat("matrix dimensions must be positive, got %dx%d", rows,
                        cols));
  }
  if (!(var > 0.0) || !std::isfinite(var)) {
    return DomainError(absl::StrFormat("variance must be positive, got %g", var));
  }
  Rng rng = MakeRng(seed);
  MatrixXd out(rows, cols);
  FillGaussian(rng, var, out);
  return out;
}

WishartDraw::WishartDraw(MatrixXd z, double entry_var)
    : z_(std::move(z)),
      entry_var_(entry_var),
      gram_(std::make_shared<GramCache>()) {}

absl::StatusOr<WishartDraw> WishartDraw::FromFactor(MatrixXd z,
                                                    double entry_var) {
  if (z.rows() < 1 || z.cols() < 1) {
    return DomainError("Wishart factor must be non-empty");
  }
  if (!(entry_var > 0.0)) {
    return DomainError(
        absl::StrFormat("entry variance must be positive, got %g", entry_var));
  }
  return WishartDraw(std::move(z), entry_var);
}

const MatrixXd& WishartDraw::M() const {
  std::call_once(gram_->once, [this] {
    gram_->m = z_ * z_.transpose();
    // Exact symmetry regardless of the product kernel's summation order.
    gram_->m = 0.5 * (gram_->m + gram_->m.transpose()).eval();
  });
  return gram_->m;
}

MatrixXd WishartDraw::Apply(const MatrixXd& v) const {
  return z_ * (z_.transpose() * v);
}

VectorXd WishartDraw::NonzeroEigenvalues() const {
  if (r() <= d()) {
    const MatrixXd small = z_.transpose() * z_;
    return Eigen::SelfAdjointEigenSolver<MatrixXd>(small, Eigen::EigenvaluesOnly)
        .eigenvalues();
  }
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(M(), Eigen::EigenvaluesOnly)
      .eigenvalues();
}

absl::StatusOr<WishartDraw> DrawWishart(int d, int r, double entry_var,
                                        const Seed& seed) {
  WDP_ASSIGN_OR_RETURN(MatrixXd z, SampleGaussianMatrix(d, r, entry_var, seed));
  return WishartDraw::FromFactor(std::move(z), entry_var);
}

double DefaultRankTolerance(const MatrixXd& a, double s_max) {
  return static_cast<double>(std::max(a.rows(), a.cols())) *
         std::numeric_limits<double>::epsilon() * s_max;
}

namespace {

struct ThinSvd {
  MatrixXd u;
  MatrixXd v;
  VectorXd s;
  int rank = 0;
};

ThinSvd ComputeSvd(const MatrixXd& a, double rank_tol) {
  ThinSvd out;
  if (a.size() == 0) return out;
  Eigen::BDCSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.s = svd.singularValues();
  const double s_max = out.s.size() > 0 ? out.s(0) : 0.0;
  const double tol = rank_tol > 0.0 ? rank_tol : DefaultRankTolerance(a, s_max);
  for (Eigen::Index i = 0; i < out.s.size(); ++i) {
    if (out.s(i) > tol) ++out.rank;
  }
  out.u = svd.matrixU().leftCols(out.rank);
  out.v = svd.matrixV().leftCols(out.rank);
  return out;
}

}  // namespace

int NumericalRank(const MatrixXd& a, double rank_tol) {
  return ComputeSvd(a, rank_tol).rank;
}

absl::StatusOr<MatrixXd> ColumnBasis(const MatrixXd& z, double rank_tol) {
  if (z.size() == 0 || z.isZero(0.0)) {
    return DegenerateInputError("column space of an all-zero matrix");
  }
  ThinSvd svd = ComputeSvd(z, rank_tol);
  if (svd.rank == 0) {
    return DegenerateInputError("matrix has numerical rank zero");
  }
  return std::move(svd.u);
}

absl::StatusOr<MatrixXd> ColumnProjector(const MatrixXd& z, double rank_tol) {
  WDP_ASSIGN_OR_RETURN(const MatrixXd basis, ColumnBasis(z, rank_tol));
  MatrixXd p = basis * basis.transpose();
  return (0.5 * (p + p.transpose())).eval();
}

absl::StatusOr<OrthogonalSplit> SplitOrthogonal(const MatrixXd& z,
                                                const MatrixXd& u,
                                                double rank_tol) {
  if (u.rows() != z.rows() && u.cols() > 0) {
    return DomainError(absl::StrFormat(
        "U has %d rows but Z has %d", static_cast<int>(u.rows()),
        static_cast<int>(z.rows())));
  }
  const Eigen::Index s = u.cols();
  const Eigen::Index r = z.cols();
  OrthogonalSplit out;
  out.U = s > 0 ? u : MatrixXd(z.rows(), 0);
  if (s > 0) {
    const MatrixXd gram = u.transpose() * u;
    const double err = (gram - MatrixXd::Identity(s, s)).cwiseAbs().maxCoeff();
    if (err > 1e-10) {
      return DomainError(absl::StrFormat(
          "U is not orthonormal: max |U^T U - I| = %g", err));
    }
  }
  out.P_H = MatrixXd::Zero(r, r);
  if (s > 0) {
    const MatrixXd g = u.transpose() * z;
    if (!g.isZero(0.0)) {
      const ThinSvd svd = ComputeSvd(g, rank_tol);
      out.p = svd.rank;
      out.P_H = svd.v * svd.v.transpose();
    }
  }
  out.Z_par = z * out.P_H;
  out.Z_perp = z - out.Z_par;
  out.M_par = out.Z_par * out.Z_par.transpose();
  out.M_perp = out.Z_perp * out.Z_perp.transpose();
  return out;
}

absl::StatusOr<double> CaptureFraction(const MatrixXd& z, const MatrixXd& dv) {
  if (dv.rows() != z.rows()) {
    return DomainError("capture_fraction: row mismatch between Z and dV");
  }
  const double total = dv.squaredNorm();
  if (!(total > 0.0)) {
    return DegenerateInputError("capture_fraction: dV is zero");
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(z);
  const Eigen::Index rank = qr.rank();
  if (rank == 0) return DegenerateInputError("capture_fraction: Z is zero");
  // Q^T dv; the first `rank` rows are the coordinates in col(Z).
  const MatrixXd qt_dv = qr.householderQ().transpose() * dv;
  const double captured = qt_dv.topRows(rank).squaredNorm();
  return std::clamp(captured / total, 0.0, 1.0);
}

SpectrumInterval WishartSpectrumInterval(int d, int r, double entry_var,
                                         double t) {
  const double ratio = std::sqrt(static_cast<double>(d) / r);
  const double slack = t / std::sqrt(static_cast<double>(r));
  const double lo = std::max(0.0, ratio - 1.0 - slack);
  const double hi = ratio + 1.0 + slack;
  const double scale = r * entry_var;
  return {lo * lo * scale, hi * hi * scale};
}

void WriteMatrixCsv(std::ostream& out, const MatrixXd& m) {
  out << "# " << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << absl::StrFormat("%.17g", m(i, j));
    }
    out << '\n';
  }
}

absl::StatusOr<MatrixXd> ReadMatrixCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !absl::StartsWith(line, "# ")) {
    return DomainError("matrix CSV must start with a '# rows cols' header");
  }
  line.erase(0, 2);
  std::vector<std::string> dims =
      absl::StrSplit(line, ' ', absl::SkipWhitespace());
  int rows = 0;
  int cols = 0;
  if (dims.size() != 2 || !absl::SimpleAtoi(dims[0], &rows) ||
      !absl::SimpleAtoi(dims[1], &cols) || rows < 0 || cols < 0) {
    return DomainError(absl::StrFormat("bad matrix CSV header '# %s'", line));
  }
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) {
      return DomainError(absl::StrFormat("matrix CSV ended at row %d of %d", i,
                                         rows));
    }
    std::vector<std::string> cells = absl::StrSplit(line, ',');
    if (static_cast<int>(cells.size()) != cols) {
      return DomainError(absl::StrFormat("row %d has %d cells, expected %d", i,
                                         static_cast<int>(cells.size()), cols));
    }
    for (int j = 0; j < cols; ++j) {
      if (!absl::SimpleAtod(cells[j], &m(i, j))) {
        return DomainError(
            absl::StrFormat("cannot parse '%s' at (%d, %d)", cells[j], i, j));
      }
    }
  }
  return m;
}

}  // namespace wishart_dp
