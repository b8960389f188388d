#pragma once

// Fitted effect functions tau_hat(a). Kernel estimators are stored as a
// kernel expansion over the training treatments; the FPC baseline as a linear
// model in functional principal component scores.

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cfb/funcrep.hpp"
#include "cfb/kernel_spec.hpp"

namespace cfb {

/// Functional principal components of dense trajectories on a common grid.
struct FpcBasis {
  std::vector<double> grid;
  Eigen::VectorXd mean;            // mean curve on the grid
  Eigen::MatrixXd eigenfunctions;  // grid x L, orthonormal under the trapezoid rule
  Eigen::VectorXd eigenvalues;     // all of them, nonincreasing, >= 0
  int retained = 0;                // L
  double explained = 0.0;          // variance fraction of the first L

  /// n x L score matrix <a_i - mean, phi_k>. Throws GridMismatchError if the
  /// treatments are not on `grid`.
  Eigen::MatrixXd scores(const TreatmentSet& set) const;
};

struct KernelExpansion {
  KernelSpec kernel;
  TreatmentSet centers;
  Eigen::VectorXd coef;  // tau_hat(a) = sum_i coef_i K(a, centers_i)
};

struct LinearFpcModel {
  FpcBasis basis;
  Eigen::VectorXd beta;  // intercept, then one slope per retained score
};

struct EtaCandidate {
  double eta = 0.0;
  double v_value = std::numeric_limits<double>::quiet_NaN();
  double objective = 0.0;
  double Q_part = 0.0;
  double R_part = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  std::string message;
};

/// Audit trail of the two-stage tuning: lambda by LOOCV on baseline-adjusted
/// responses, then eta by the V criterion.
struct TuningReport {
  std::vector<double> lambda_grid;
  std::vector<double> lambda_loo;
  double lambda = 0.0;
  std::vector<EtaCandidate> etas;
  double eta = 0.0;
  bool eta_from_converged = true;  // false when no grid point converged
  std::string baseline_source;      // "fpc-baseline (FCBPS-style)" or "unit (...)"
  double baseline_mean = 0.0;
  double baseline_min = 0.0;
  double baseline_max = 0.0;
  double reg_lambda = 0.0;
  Eigen::Index factor_rank = 0;
  Eigen::Index factor_clamped = 0;
};

struct FteModel {
  std::string estimator;  // cfb | nw | reg | fpc-baseline | oracle
  std::variant<KernelExpansion, LinearFpcModel> body;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd weights;  // response weights used in the fit (empty if none)
  Eigen::VectorXd fitted;   // tau_hat at the training treatments
  std::optional<TuningReport> tuning;

  /// Throws RepresentationError / GridMismatchError on incompatible input.
  Eigen::VectorXd predict(const TreatmentSet& treatments) const;
};

}  // namespace cfb
