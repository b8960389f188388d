#pragma once

// Covariate-balancing weights. For box-constrained w the objective is
//
//   f(w) = (1/n) sigma_max(H diag(w) M1 - M2)^2 + eta * sum_j r_j w_j^2,
//
// with H = G_A (G_A + n lambda I)^{-1}, G_F = M M^T split into its top (M1)
// and bottom (M2) row blocks, and r_j = (1/n) sum_i H_ij^2. The first term is
// the worst-case weighted-smoothing imbalance over the unit ball of the
// tensor-product RKHS; f is convex in w.

#include <Eigen/Dense>
#include <limits>
#include <string>

#include "cfb/box_lbfgs.hpp"
#include "cfb/gram.hpp"
#include "cfb/kernels.hpp"
#include "cfb/linalg.hpp"

namespace cfb {

struct BalanceProblem {
  Eigen::MatrixXd H;
  Eigen::MatrixXd M1;
  Eigen::MatrixXd M2;
  Eigen::VectorXd r;
  double lambda = 0.0;
  double eta = 0.0;
  double upper = std::numeric_limits<double>::infinity();  // box bound L

  Eigen::Index n() const { return H.rows(); }
  Eigen::Index q() const { return M1.cols(); }
};

/// Precomputes H(lambda) and r. Throws InvalidArgument on inconsistent sizes,
/// lambda <= 0, eta < 0 or upper <= 0.
BalanceProblem build_problem(const GramSet& g, const BalanceFactor& f, double lambda, double eta,
                             double upper = std::numeric_limits<double>::infinity());

/// Same, reusing an already computed hat matrix (e.g. across an eta grid).
BalanceProblem build_problem(const Eigen::MatrixXd& H, const BalanceFactor& f, double lambda,
                             double eta, double upper = std::numeric_limits<double>::infinity());

/// r_j = (1/n) sum_i H_ij^2.
Eigen::VectorXd r_weights(const Eigen::MatrixXd& H);

/// D(w) = H diag(w) M1 - M2.
Eigen::MatrixXd imbalance_matrix(const BalanceProblem& p, const Eigen::VectorXd& w);

struct BalanceValue {
  double value = 0.0;   // Q_part + eta * R_part
  double Q_part = 0.0;  // (1/n) sigma_max(D(w))^2
  double R_part = 0.0;  // sum_j r_j w_j^2
};

BalanceValue balance_objective(const BalanceProblem& p, const Eigen::VectorXd& w);

/// Gradient of f, using the top singular pair (u, v) of D(w):
///   df/dw_j = (2 sigma / n) (H^T u)_j (M1 v)_j + 2 eta r_j w_j.
/// When the top singular value is repeated this is one subgradient element.
Eigen::VectorXd balance_gradient(const BalanceProblem& p, const Eigen::VectorXd& w);

struct SolverOptions {
  int max_iter = 500;
  double gtol = 1e-6;
  double ftol = 2.220446049250313e-9;
  int memory = 10;
};

struct WeightSolution {
  Eigen::VectorXd w_hat;
  double objective = 0.0;
  double Q_part = 0.0;
  double R_part = 0.0;
  double init_objective = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  double pg_norm = 0.0;    // projected-gradient inf-norm on the scaled objective
  double top_gap = 0.0;    // (sigma_1 - sigma_2) / sigma_1 at w_hat
  bool degenerate = false; // top_gap < 1e-10
  std::string message;
};

/// Minimize f over [0, upper]^n from `init` (clipped into the box). The
/// objective is divided by f(init) inside the solver so the tolerances are
/// relative to the starting imbalance. Never throws on non-convergence; see
/// WeightSolution::converged.
WeightSolution solve_weights(const BalanceProblem& p, const Eigen::VectorXd& init,
                             const SolverOptions& opts = {});

}  // namespace cfb
