#pragma once

// Tuning and the full weighting pipeline: lambda is chosen once by LOOCV on
// baseline-weighted responses and frozen; eta is chosen by the V criterion
// against an outcome-regression fit; the final effect estimate is a ridge fit
// of w_hat o Y.

#include <Eigen/Dense>
#include <vector>

#include "cfb/balance.hpp"
#include "cfb/estimators.hpp"
#include "cfb/krr.hpp"
#include "cfb/model.hpp"

namespace cfb {

/// LOOCV of ridge regression on z = baseline_w o Y over `grid`; ties go to
/// the smaller lambda.
LambdaSearch select_lambda(const Eigen::MatrixXd& G_A, const Eigen::VectorXd& baseline_w,
                           const Eigen::VectorXd& Y, const std::vector<double>& grid);

/// V = (1/n) ||H (w o m_hat) - tau_reg||^2 + (1/n) ||H (w o (Y - m_hat))||^2.
double v_criterion(const BalanceProblem& p, const Eigen::VectorXd& w, const Eigen::VectorXd& Y,
                   const Eigen::VectorXd& m_hat, const Eigen::VectorXd& tau_reg);

struct EtaSelection {
  std::vector<EtaCandidate> candidates;
  std::vector<WeightSolution> solutions;  // aligned with candidates
  std::size_t chosen = 0;
  bool from_converged = true;

  double eta() const { return candidates[chosen].eta; }
  const WeightSolution& solution() const { return solutions[chosen]; }
};

/// Solve the balancing program for every eta in `eta_grid` (H, factor and
/// lambda fixed) and pick the smallest V among converged solves; ties go to
/// the larger eta. If nothing converged, all grid points compete and
/// from_converged is false.
EtaSelection select_eta(const Eigen::MatrixXd& H, const BalanceFactor& factor, double lambda,
                        const std::vector<double>& eta_grid, const Eigen::VectorXd& Y,
                        const Eigen::VectorXd& m_hat, const Eigen::VectorXd& tau_reg,
                        const EstimatorConfig& cfg);

/// Optional precomputed pieces, so a study can share them across estimators.
struct CfbShared {
  const RegFit* reg = nullptr;
  const Eigen::VectorXd* baseline_weights = nullptr;  // nullptr: compute fpc_baseline
};

/// The full pipeline. Errors are rethrown with the failing stage named.
FteModel fit_cfb(const PreparedData& data, const EstimatorConfig& cfg, CfbShared shared = {});

}  // namespace cfb
