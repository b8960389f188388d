#include "cfb/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "cfb/error.hpp"

namespace cfb {
namespace {

constexpr Eigen::Index kDenseCutoff = 24;
constexpr double kResidualTol = 1e-12;

// Complete the triplet from the top eigenpair of the smaller Gram.
TopSingular finish(const Eigen::MatrixXd& D, bool left, double theta1, double theta2,
                   Eigen::VectorXd x) {
  TopSingular out;
  out.sigma = std::sqrt(std::max(theta1, 0.0));
  out.sigma2 = std::sqrt(std::max(theta2, 0.0));
  if (left) {
    out.u = std::move(x);
    if (out.sigma > 0.0) {
      out.v = D.transpose() * out.u / out.sigma;
    } else {
      out.v = Eigen::VectorXd::Unit(D.cols(), 0);
    }
  } else {
    out.v = std::move(x);
    if (out.sigma > 0.0) {
      out.u = D * out.v / out.sigma;
    } else {
      out.u = Eigen::VectorXd::Unit(D.rows(), 0);
    }
  }
  return out;
}

}  // namespace

TopSingular top_singular_dense(const Eigen::MatrixXd& D) {
  if (D.rows() == 0 || D.cols() == 0) throw InvalidArgument("top_singular: empty matrix");
  const bool left = D.rows() <= D.cols();
  const Eigen::MatrixXd C = left ? Eigen::MatrixXd(D * D.transpose())
                                 : Eigen::MatrixXd(D.transpose() * D);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
  if (eig.info() != Eigen::Success) throw NumericError("top_singular: eigendecomposition failed");
  const Eigen::Index m = C.rows();
  const double t1 = eig.eigenvalues()(m - 1);
  const double t2 = m > 1 ? eig.eigenvalues()(m - 2) : 0.0;
  return finish(D, left, t1, t2, eig.eigenvectors().col(m - 1));
}

TopSingular top_singular(const Eigen::MatrixXd& D, const Eigen::VectorXd* warm) {
  if (D.rows() == 0 || D.cols() == 0) throw InvalidArgument("top_singular: empty matrix");
  const bool left = D.rows() <= D.cols();
  const Eigen::Index m = left ? D.rows() : D.cols();
  if (m <= kDenseCutoff) return top_singular_dense(D);

  // C = D D^T (left) or D^T D, applied without forming it.
  auto apply_c = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (left) return D * (D.transpose() * x);
    return D.transpose() * (D * x);
  };
  const double scale = D.squaredNorm();
  if (!(scale > 0.0)) return top_singular_dense(D);

  // Deterministic start: the warm vector nudged by a fixed non-degenerate
  // pattern so it is never exactly orthogonal to the top eigenvector.
  Eigen::VectorXd start(m);
  for (Eigen::Index i = 0; i < m; ++i) start(i) = 1.0 + 0.5 * std::sin(1.0 + static_cast<double>(i));
  start.normalize();
  if (warm != nullptr && warm->size() == m && warm->norm() > 0.0) {
    start = warm->normalized() + 1e-3 * start;
    start.normalize();
  }

  const Eigen::Index max_steps = std::min<Eigen::Index>(m, 80);
  Eigen::MatrixXd Q(m, max_steps);
  Eigen::VectorXd alpha(max_steps);
  Eigen::VectorXd beta(max_steps);
  Q.col(0) = start;
  for (Eigen::Index j = 0; j < max_steps; ++j) {
    Eigen::VectorXd r = apply_c(Q.col(j));
    alpha(j) = Q.col(j).dot(r);
    // Full reorthogonalization, applied twice.
    for (int pass = 0; pass < 2; ++pass) {
      r -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * r);
    }
    beta(j) = r.norm();

    const Eigen::Index k = j + 1;
    bool check = k >= 3 || k == m || beta(j) <= kResidualTol * scale;
    if (check) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(alpha.head(k), beta.head(k - 1), Eigen::ComputeEigenvectors);
      if (tri.info() != Eigen::Success) break;
      const double t1 = tri.eigenvalues()(k - 1);
      const double t2 = k > 1 ? tri.eigenvalues()(k - 2) : 0.0;
      const double resid = std::abs(beta(j) * tri.eigenvectors()(k - 1, k - 1));
      if (resid <= kResidualTol * std::max(t1, 1e-300) || beta(j) <= kResidualTol * scale) {
        Eigen::VectorXd x = Q.leftCols(k) * tri.eigenvectors().col(k - 1);
        x.normalize();
        return finish(D, left, t1, t2, std::move(x));
      }
    }
    if (j + 1 < max_steps) {
      if (beta(j) <= kResidualTol * scale) break;
      Q.col(j + 1) = r / beta(j);
    }
  }
  return top_singular_dense(D);
}

}  // namespace cfb
