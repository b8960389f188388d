#pragma once

// Numerical property checks with independent reference computations: brute
// force suprema, refit cross-validation, finite differences, Monte Carlo.
// Shared by the `selftest` command and the acceptance binary.

#include <cstdint>
#include <string>
#include <vector>

namespace cfb::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;  // worst observed discrepancy, in the check's own units
  double tol = 0.0;
  std::string detail;
};

/// Closed-form Q against the generalized eigenproblem over the span of the
/// 2n representer functions, on `instances` random problems with n <= 10.
CheckResult representer_supremum(int instances, std::uint64_t seed, double tol = 1e-8);

/// t f(w1) + (1 - t) f(w2) - f(t w1 + (1 - t) w2) >= -tol (1 + |f|).
CheckResult convexity(int problems, int triples, std::uint64_t seed, double tol = 1e-8);

/// Analytic gradient against central differences at points where the top
/// singular value is simple.
CheckResult gradient(int points, std::uint64_t seed, double tol = 1e-5);

/// Closed-form LOOCV error against leave-one-out refits, n <= 12, 10 lambdas.
CheckResult loocv(int instances, std::uint64_t seed, double tol = 1e-9);

/// Importance-sampled E{w*(A, X) f(X)} against E f(X) for f = 1, x1^2 and
/// 1 + cos(x3).
CheckResult oracle_weight_identity(int samples, std::uint64_t seed, double tol = 0.05);

/// max |M M^T - G_F| <= max(10 tol_rel lambda_max, 1e-10) on random datasets.
CheckResult psd_reconstruction(int datasets, std::uint64_t seed, double tol_rel = 1e-10);

/// Every available SIMD variant against the scalar reference.
CheckResult simd_equivalence(std::uint64_t seed);

/// The fast subset used by `selftest`.
std::vector<CheckResult> fast_suite(std::uint64_t seed = 20240601);

}  // namespace cfb::checks
