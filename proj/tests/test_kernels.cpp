#include <cmath>
#include <numbers>
#include <random>

#include "cfb/error.hpp"
#include "cfb/kernels.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cfb;

TEST_CASE("kernel formulas") {
  const double d2 = 0.7;
  CHECK(kernel_eval(KernelSpec::gaussian_normalized(1.5), d2) ==
        doctest::Approx(std::exp(-d2 / 2.25) / (std::sqrt(2 * std::numbers::pi) * 1.5)).epsilon(1e-15));
  CHECK(kernel_eval(KernelSpec::gaussian(0.8), d2) == doctest::Approx(std::exp(-2 * d2 / 0.8)).epsilon(1e-15));
  CHECK(kernel_eval(KernelSpec::exponential(0.8), d2) ==
        doctest::Approx(std::exp(-std::sqrt(d2) / 0.8)).epsilon(1e-15));
  CHECK(kernel_eval(KernelSpec::linear(), 2.5) == 3.5);
  CHECK(kernel_eval(KernelSpec::linear(0.0), 2.5) == 2.5);
}

TEST_CASE("tiny negative squared distances are treated as zero") {
  const auto k = KernelSpec::gaussian(1.0);
  CHECK(kernel_eval(k, -5e-13) == 1.0);
  CHECK_THROWS(kernel_eval(k, -1e-6));
}

TEST_CASE("kernel names round trip and bad bandwidths are rejected") {
  for (auto kind : {KernelKind::GaussianNormalized, KernelKind::Gaussian, KernelKind::Exponential,
                    KernelKind::Linear}) {
    CHECK(parse_kernel_kind(kernel_kind_name(kind)) == kind);
  }
  CHECK_THROWS_AS(parse_kernel_kind("rbf"), InvalidArgument);
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(KernelSpec::gaussian(-1.0).validate(), InvalidArgument);
  CHECK_NOTHROW(KernelSpec::linear().validate());
}

TEST_CASE("median heuristic uses square-rooted upper-triangle distances") {
  // Points 0, 1, 3 on a line: distances 1, 3, 2 -> median 2.
  Eigen::MatrixXd D(3, 3);
  D << 0, 1, 9, 1, 0, 4, 9, 4, 0;
  CHECK(median_heuristic(D) == doctest::Approx(2.0));
  // Four points 0, 1, 2, 4: distances 1, 2, 4, 1, 3, 2 -> sorted 1 1 2 2 3 4, median 2.
  Eigen::VectorXd p(4);
  p << 0, 1, 2, 4;
  Eigen::MatrixXd E(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) E(i, j) = (p(i) - p(j)) * (p(i) - p(j));
  }
  CHECK(median_heuristic(E) == doctest::Approx(2.0));
  // Even count with distinct middles: 0, 1, 3, 7 -> 1 3 7 2 6 4 -> (3 + 4) / 2.
  p << 0, 1, 3, 7;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) E(i, j) = (p(i) - p(j)) * (p(i) - p(j));
  }
  CHECK(median_heuristic(E) == doctest::Approx(3.5));
  CHECK_THROWS_AS(median_heuristic(Eigen::MatrixXd::Zero(4, 4)), NumericError);
}

TEST_CASE("resolve_kernel keeps explicit bandwidths") {
  Eigen::MatrixXd D(2, 2);
  D << 0, 4, 4, 0;
  KernelConfig cfg;
  CHECK(resolve_kernel(cfg, D).bandwidth == doctest::Approx(2.0));
  cfg.bandwidth = 0.3;
  CHECK(resolve_kernel(cfg, D).bandwidth == 0.3);
}

TEST_CASE("Gram matrices are symmetric and positive semidefinite") {
  const auto pd = testing::small_data(25, 5);
  const auto& g = pd.grams;
  CHECK(g.G_A == g.G_A.transpose());
  CHECK(g.G_X == g.G_X.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(g.G_A), ex(g.G_X);
  CHECK(ea.eigenvalues().minCoeff() > -1e-10 * ea.eigenvalues().maxCoeff());
  CHECK(ex.eigenvalues().minCoeff() > -1e-10 * ex.eigenvalues().maxCoeff());
  CHECK((g.Gbar_X - g.G_X.rowwise().mean()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(g.gbar_X == doctest::Approx(g.G_X.mean()).epsilon(1e-14));
  const Eigen::MatrixXd C = cross_gram_treatment(pd.treatments, pd.treatments, pd.kernel_a);
  CHECK((C - g.G_A).cwiseAbs().maxCoeff() < 1e-14);
  const Eigen::MatrixXd CX = cross_gram_covariates(pd.X, pd.X, pd.kernel_x);
  CHECK((CX - g.G_X).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("covariate distances match a direct loop") {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd X = testing::random_matrix(13, 7, rng);
  const Eigen::MatrixXd D = covariate_distance_sq(X);
  for (int i = 0; i < 13; ++i) {
    for (int j = 0; j < 13; ++j) {
      CHECK(D(i, j) == doctest::Approx((X.row(i) - X.row(j)).squaredNorm()).epsilon(1e-13));
    }
  }
  Eigen::MatrixXd bad = X;
  bad(2, 3) = NAN;
  CHECK_THROWS_AS(gram_covariates(bad, KernelSpec::gaussian(1.0)), DataError);
}

TEST_CASE("make_gram_set checks dimensions") {
  CovariateGram cov{Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Ones(3), 1.0};
  CHECK_THROWS_AS(make_gram_set(Eigen::MatrixXd::Identity(4, 4), cov), InvalidArgument);
  CHECK(make_gram_set(Eigen::MatrixXd::Identity(3, 3), cov).n() == 3);
}
