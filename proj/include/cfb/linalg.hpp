#pragma once

#include <Eigen/Dense>

namespace cfb {

/// Leading singular triplet of a matrix, plus the second singular value for
/// gap diagnostics.
struct TopSingular {
  double sigma = 0.0;
  double sigma2 = 0.0;
  Eigen::VectorXd u;  // left, length rows
  Eigen::VectorXd v;  // right, length cols
};

/// Reference route: dense symmetric eigendecomposition of the smaller of
/// D D^T and D^T D.
TopSingular top_singular_dense(const Eigen::MatrixXd& D);

/// Lanczos with full reorthogonalization on the smaller Gram of D, started
/// from `warm` when given (a left vector if rows <= cols, else a right
/// vector). Falls back to top_singular_dense when Lanczos does not reach a
/// relative residual of 1e-12.
TopSingular top_singular(const Eigen::MatrixXd& D, const Eigen::VectorXd* warm = nullptr);

}  // namespace cfb
