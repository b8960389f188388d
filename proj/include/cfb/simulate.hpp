#pragma once

// Simulation design with four confounders and a four-term Fourier treatment,
// replicate studies across estimators, and the two MSE metrics.
//
//   X ~ N(0, I_4),  A^(k) | X ~ N(c_k X^(k), 1),  c = (4, 2 sqrt3, 2 sqrt2, 2)
//   A(t) = sum_k A^(k) sqrt2 sin(2 pi k t)
//   Y | A, X ~ N(m(A, X), 1)
//   Psi(x) = x2 x1^2 + x4^2 sin(2 x3)
//   setting 1: m = 15 Psi + int a mu,       tau(a) = 2 a1 + a2 / 2
//   setting 2: m = 10 Psi + g(a1),          tau(a) = g(a1)
//   setting 3: m = (1 + 2 Psi / 3) g(a1),   tau(a) = g(a1)
//   with g(s) = s^2 / 2 + 4 sin(s).

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cfb/estimators.hpp"
#include "cfb/funcrep.hpp"
#include "cfb/model.hpp"

namespace cfb {

struct SimConfig {
  int setting = 1;
  int n = 200;
  int replicates = 200;
  int n_eval = 100;
  int grid_points = 101;
  std::uint64_t seed = 1;
  std::vector<std::string> estimators{"nw", "fpc-baseline", "cfb", "reg"};
  EstimatorConfig estimator;
  int threads = 0;  // 0: hardware concurrency

  /// Throws InvalidArgument on an invalid setting, n < 10, n_eval < 1, fewer
  /// than 2 grid points, replicates < 1 or an unknown estimator name.
  void validate() const;
};

/// Estimator names run_study understands.
std::span<const std::string_view> known_estimators();

struct Dataset {
  TreatmentSet treatments;
  Eigen::MatrixXd coefs;  // n x 4 Fourier coefficients
  Eigen::MatrixXd X;      // n x 4
  Eigen::VectorXd Y;
  Eigen::VectorXd tau;    // true effect at each treatment
};

struct EvalPoints {
  TreatmentSet treatments;
  Eigen::MatrixXd coefs;  // n_eval x 4, drawn from the marginal law of A
  Eigen::VectorXd tau;
};

double psi(std::span<const double> x);

/// Analytic effect function of `setting` at Fourier coefficients `a`.
double true_tau(int setting, std::span<const double> a);

/// Outcome regression m(a, x) of `setting`.
double outcome_mean(int setting, std::span<const double> a, std::span<const double> x);

/// mu(t) = 2 sqrt2 sin 2pi t + sqrt2 cos 2pi t + (sqrt2/2) sin 4pi t + (sqrt2/2) cos 4pi t.
double setting1_mu(double t);

/// Uniform grid of `points` values on [0, 1].
std::vector<double> uniform_grid(int points);

/// a(t) = sum_k a_k sqrt2 sin(2 pi k t) on `grid`.
DenseTrajectory fourier_trajectory(std::span<const double> a, std::span<const double> grid);

/// Replicate `replicate` of the study: independent of every other replicate.
Dataset gen_replicate(const SimConfig& cfg, std::uint64_t replicate);

/// Evaluation treatments with A'^(k) ~ N(0, 1 + c_k^2), i.e. (17, 13, 9, 5).
EvalPoints gen_eval_points(const SimConfig& cfg, std::uint64_t replicate);

/// (1/n) sum_i (tau(A_i) - tau_hat(A_i))^2 over the sample.
double empirical_mse(const FteModel& model, const Dataset& data);

/// Same over the evaluation points.
double oos_mse(const FteModel& model, const EvalPoints& points);

struct EstimatorSummary {
  std::vector<double> empirical;  // per replicate, NaN on failure
  std::vector<double> oos;
  std::vector<std::string> failures;  // one message per failed replicate
  double empirical_mean = 0.0;
  double empirical_se = 0.0;
  double oos_mean = 0.0;
  double oos_se = 0.0;
  int failed = 0;
};

struct SimReport {
  SimConfig config;
  std::map<std::string, EstimatorSummary> estimators;
};

/// Fits every configured estimator on every replicate. Replicates run on
/// `cfg.threads` workers; results are reduced in replicate order, so the
/// report does not depend on scheduling.
SimReport run_study(const SimConfig& cfg);

/// Long-format CSV: setting,estimator,metric,replicate,value with
/// 17-significant-digit values.
std::string report_csv(const SimReport& report);

/// Markdown tables of mean (standard error) per estimator and metric.
std::string report_markdown(const SimReport& report);

}  // namespace cfb
