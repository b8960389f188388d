#pragma once

// Kernel ridge regression with the penalty written per observation:
//
//   min_f (1/n) sum_i (z_i - f(A_i))^2 + lambda ||f||^2
//
// whose coefficients solve (G + n lambda I) alpha = z. The factor n on lambda
// is deliberate; dropping it shifts every tuned lambda by a factor of n.

#include <Eigen/Dense>

namespace cfb {

/// H(lambda) = G (G + n lambda I)^{-1}, via a symmetric positive-definite
/// solve and symmetrized. Throws InvalidArgument for lambda <= 0 or a
/// non-square G, NumericError when the solve fails.
Eigen::MatrixXd hat_matrix(const Eigen::MatrixXd& G, double lambda);

/// Solve (G + n lambda I) x = rhs for one or more right-hand sides. Falls back
/// to a slightly perturbed system when the Cholesky factorization fails.
Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& G, double lambda, const Eigen::MatrixXd& rhs);

struct RidgeFit {
  Eigen::VectorXd alpha;   // (G + n lambda I)^{-1} z
  Eigen::VectorXd z;       // responses the fit was made on
  Eigen::VectorXd fitted;  // G alpha == H(lambda) z
  double lambda = 0.0;
};

RidgeFit krr_fit(const Eigen::MatrixXd& G, const Eigen::VectorXd& z, double lambda);

/// sum_i alpha_i K(a, A_i) for each row of cross_gram(a, A_i).
Eigen::VectorXd krr_predict(const RidgeFit& fit, const Eigen::MatrixXd& cross_gram);

/// Closed-form leave-one-out mean squared error
///   (1/n) sum_i [(z_i - (H z)_i) / (1 - H_ii)]^2.
/// Throws NumericError if some H_ii >= 1 - 1e-12.
double loocv_error(const Eigen::MatrixXd& G, const Eigen::VectorXd& z, double lambda);

}  // namespace cfb

#include <vector>

namespace cfb {

struct LambdaSearch {
  std::vector<double> grid;
  std::vector<double> loo_errors;  // aligned with grid
  double lambda = 0.0;             // argmin, ties broken toward the smaller lambda
  double best_error = 0.0;
};

/// Closed-form LOOCV over `grid`. Throws InvalidArgument on an empty grid.
LambdaSearch loocv_search(const Eigen::MatrixXd& G, const Eigen::VectorXd& z,
                          const std::vector<double>& grid);

/// `count` log-spaced values in [lo, hi] * trace(G) / n.
std::vector<double> relative_lambda_grid(const Eigen::MatrixXd& G, double lo = 1e-6,
                                         double hi = 1.0, int count = 10);

}  // namespace cfb
