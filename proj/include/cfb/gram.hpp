#pragma once

// The 2n x 2n Gram matrix of the representer functions spanning the
// balancing supremum, and its factorization G_F = M M^T.

#include <Eigen/Dense>

#include "cfb/kernels.hpp"

namespace cfb {

/// out(i, j) = G(i, j) * v(j). Throws InvalidArgument on size mismatch.
Eigen::MatrixXd khatri_rao_scale(const Eigen::MatrixXd& G, const Eigen::VectorXd& v);

/// [[G_A o G_X, (G_A (.) Gbar_X^T)^T], [G_A (.) Gbar_X^T, gbar_X G_A]], where
/// o is the Hadamard product and (.) scales column j by Gbar_X(j).
Eigen::MatrixXd assemble_gf(const GramSet& g);

struct BalanceFactor {
  Eigen::MatrixXd M;   // 2n x q, columns by descending eigenvalue
  Eigen::MatrixXd M1;  // rows 0..n-1 of M
  Eigen::MatrixXd M2;  // rows n..2n-1 of M
  Eigen::Index q = 0;
  Eigen::Index clamp_count = 0;
  double lambda_max = 0.0;
  double lambda_min_raw = 0.0;  // smallest eigenvalue before clamping
  double clamped_mass = 0.0;    // sum of |dropped eigenvalues|

  Eigen::Index n() const { return M1.rows(); }
};

/// Symmetric eigendecomposition; eigenvalues <= tol_rel * lambda_max are
/// dropped and M = V_kept diag(sqrt(lambda_kept)). Throws NumericError when
/// the decomposition fails or lambda_max <= 0.
BalanceFactor psd_factor(const Eigen::MatrixXd& G_F, double tol_rel = 1e-10);

}  // namespace cfb
