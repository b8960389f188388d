#pragma once

// Gram matrices for treatments and covariates, and the median-heuristic
// bandwidth rule.

#include <Eigen/Dense>
#include <optional>

#include "cfb/funcrep.hpp"
#include "cfb/kernel_spec.hpp"

namespace cfb {

/// Kernel as written in a config: a missing bandwidth means "auto", resolved
/// by the median heuristic on the data the kernel will be applied to.
struct KernelConfig {
  KernelKind kind = KernelKind::GaussianNormalized;
  std::optional<double> bandwidth;
  double offset = 1.0;
};

/// Median of the strict-upper-triangle distances sqrt(dist_sq(i, j)), i < j.
/// Throws NumericError when the median is zero (degenerate bandwidth).
double median_heuristic(const Eigen::MatrixXd& dist_sq);

/// Fix the bandwidth of `cfg`, using median_heuristic(dist_sq) when it is auto.
KernelSpec resolve_kernel(const KernelConfig& cfg, const Eigen::MatrixXd& dist_sq);

/// Elementwise kernel_eval over a matrix of squared distances or inner products.
Eigen::MatrixXd apply_kernel(const KernelSpec& spec, const Eigen::MatrixXd& dist_sq_or_inner);

/// G_A(i, j) = K_A(A_i, A_j). Exactly symmetric.
Eigen::MatrixXd gram_treatment(const TreatmentSet& set, const KernelSpec& spec);

/// K_A(rows_i, cols_j) for prediction at new treatments.
Eigen::MatrixXd cross_gram_treatment(const TreatmentSet& rows, const TreatmentSet& cols,
                                     const KernelSpec& spec);

/// Squared Euclidean distances between the rows of X.
Eigen::MatrixXd covariate_distance_sq(const Eigen::MatrixXd& X);

struct CovariateGram {
  Eigen::MatrixXd G_X;     // K_X(X_i, X_j)
  Eigen::VectorXd Gbar_X;  // row means of G_X
  double gbar_X = 0.0;     // grand mean of G_X
};

/// Throws DataError on non-finite covariates.
CovariateGram gram_covariates(const Eigen::MatrixXd& X, const KernelSpec& spec);

/// K_X(X1_i, X2_j).
Eigen::MatrixXd cross_gram_covariates(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                                      const KernelSpec& spec);

/// All kernel quantities the balancing program needs for one dataset.
struct GramSet {
  Eigen::MatrixXd G_A;
  Eigen::MatrixXd G_X;
  Eigen::VectorXd Gbar_X;
  double gbar_X = 0.0;

  Eigen::Index n() const { return G_A.rows(); }
};

/// Throws InvalidArgument on inconsistent dimensions.
GramSet make_gram_set(Eigen::MatrixXd G_A, CovariateGram cov);

}  // namespace cfb
