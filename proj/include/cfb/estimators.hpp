#pragma once

// Comparator estimators of the effect function: NW (ridge on raw outcomes),
// REG (outcome regression with a tensor-product kernel, averaged over the
// empirical covariate law) and a Gaussian stabilized-weight FPC baseline in
// the style of parametric FCBPS. Also the analytic oracle weights of the
// simulation design.

#include <Eigen/Dense>
#include <array>
#include <limits>
#include <span>
#include <vector>

#include "cfb/balance.hpp"
#include "cfb/kernels.hpp"
#include "cfb/krr.hpp"
#include "cfb/model.hpp"

namespace cfb {

struct EstimatorConfig {
  KernelConfig kernel_a;  // treatments; auto bandwidth by default
  KernelConfig kernel_x;  // covariates; auto bandwidth by default
  /// Explicit lambda grid; empty means relative_lambda_grid(G) with
  /// lambda_count points over [lambda_lo, lambda_hi] * trace(G) / n, computed
  /// per Gram matrix.
  std::vector<double> lambda_grid;
  double lambda_lo = 1e-6;
  double lambda_hi = 1.0;
  int lambda_count = 10;
  std::vector<double> eta_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
  double box_upper = std::numeric_limits<double>::infinity();
  double factor_tol = 1e-10;
  double fpc_variance = 0.95;
  SolverOptions solver;
};

/// A dataset with resolved kernels and its Gram matrices.
struct PreparedData {
  TreatmentSet treatments;
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  KernelSpec kernel_a;
  KernelSpec kernel_x;
  GramSet grams;

  Eigen::Index n() const { return Y.size(); }
};

/// Validates shapes (n >= 2, matching lengths, finite values), resolves auto
/// bandwidths and builds G_A, G_X, Gbar_X, gbar_X.
PreparedData prepare_data(TreatmentSet treatments, Eigen::MatrixXd X, Eigen::VectorXd Y,
                          const EstimatorConfig& cfg);

/// cfg.lambda_grid, or the default relative grid for G.
std::vector<double> lambda_grid_for(const Eigen::MatrixXd& G, const EstimatorConfig& cfg);

/// Kernel ridge regression of the raw outcomes on the treatments, lambda by LOOCV.
FteModel nw_fit(const PreparedData& data, const EstimatorConfig& cfg);

/// Weighted-response ridge fit z = w o Y with lambda by LOOCV on z.
FteModel weighted_fit(const PreparedData& data, const Eigen::VectorXd& w,
                      const EstimatorConfig& cfg, std::string name);

struct RegFit {
  RidgeFit ridge;            // on G = G_A o G_X
  Eigen::VectorXd m_hat;     // m_hat(A_i, X_i)
  Eigen::VectorXd tau_reg;   // tau_REG(A_i) = (1/n) sum_j m_hat(A_i, X_j)
  FteModel model;            // tau_REG as a kernel expansion over A
  Eigen::MatrixXd X;         // training covariates, for m_hat at new pairs
  KernelSpec kernel_x;

  /// m_hat at (treatments_k, x_k) pairs.
  Eigen::VectorXd m_hat_at(const TreatmentSet& treatments, const Eigen::MatrixXd& x) const;
};

/// Outcome regression with K((a, x), (a', x')) = K_A(a, a') K_X(x, x').
RegFit reg_fit(const PreparedData& data, const EstimatorConfig& cfg);

/// FPCA of dense trajectories on a shared grid; retains the fewest components
/// whose eigenvalues explain at least `variance_fraction` of the total.
FpcBasis fpc_basis(const TreatmentSet& treatments, double variance_fraction = 0.95);

/// Normal density ratio phi(s; mu_m, v_m) / phi(s; mu_c, v_c).
double normal_density_ratio(double s, double mu_m, double v_m, double mu_c, double v_c);

/// Stabilized weights prod_k phi(s_ik; marginal) / phi(s_ik; OLS fit on [1, X]).
/// Throws DataError on a rank-deficient design or zero residual variance.
Eigen::VectorXd stabilized_weights(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& X);

struct FpcBaselineFit {
  Eigen::VectorXd weights;
  FteModel model;  // weighted least squares of Y on [1, scores]
};

/// Requires dense trajectories on a common grid.
FpcBaselineFit fpc_baseline(const TreatmentSet& treatments, const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& Y, double variance_fraction = 0.95);

/// Coefficients c_k of the simulation design A^(k) | X ~ N(c_k X^(k), 1).
inline constexpr std::array<double, 4> kDesignSlopes{4.0, 3.4641016151377544, 2.8284271247461903,
                                                     2.0};

/// w*(a, x) = prod_k phi(a_k; 0, 1 + c_k^2) / phi(a_k; c_k x_k, 1), i.e. the
/// density ratio rho_A(a) / rho_{A|X}(a | x) of the simulation design.
double oracle_weight(std::span<const double> a_coefs, std::span<const double> x);

}  // namespace cfb
