#include <random>

#include "cfb/box_lbfgs.hpp"
#include "cfb/error.hpp"
#include "cfb/krr.hpp"
#include "cfb/linalg.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cfb;

namespace {

Eigen::MatrixXd rbf_gram(int n, std::mt19937_64& rng) {
  const Eigen::MatrixXd P = testing::random_matrix(n, 2, rng);
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) G(i, j) = std::exp(-(P.row(i) - P.row(j)).squaredNorm());
  }
  return G;
}

}  // namespace

TEST_CASE("hat matrix and ridge fit") {
  std::mt19937_64 rng(1);
  const int n = 15;
  const Eigen::MatrixXd G = rbf_gram(n, rng);
  const Eigen::VectorXd z = testing::random_matrix(n, 1, rng);
  const double lambda = 0.01;
  const Eigen::MatrixXd H = hat_matrix(G, lambda);
  const Eigen::MatrixXd ref = G * (G + n * lambda * Eigen::MatrixXd::Identity(n, n)).inverse();
  CHECK((H - ref).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(H == H.transpose());

  const RidgeFit fit = krr_fit(G, z, lambda);
  CHECK((fit.fitted - H * z).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((krr_predict(fit, G) - fit.fitted).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(hat_matrix(G, 0.0), InvalidArgument);
  CHECK_THROWS_AS(hat_matrix(Eigen::MatrixXd::Zero(2, 3), 1.0), InvalidArgument);
}

TEST_CASE("ridge solve survives a singular Gram") {
  const Eigen::MatrixXd G = Eigen::MatrixXd::Ones(4, 4);
  const Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(4, 0, 3);
  const Eigen::MatrixXd x = ridge_solve(G, 1e-3, z);
  CHECK(((G + 4e-3 * Eigen::MatrixXd::Identity(4, 4)) * x - z).norm() < 1e-9);
}

TEST_CASE("closed-form LOOCV equals refits") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 6 + rep;
    const Eigen::MatrixXd G = rbf_gram(n, rng);
    const Eigen::VectorXd z = testing::random_matrix(n, 1, rng);
    for (double lambda : relative_lambda_grid(G)) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd Gk(n - 1, n - 1);
        Eigen::VectorXd zk(n - 1), gi(n - 1);
        for (int a = 0, ra = 0; a < n; ++a) {
          if (a == i) continue;
          zk(ra) = z(a);
          gi(ra) = G(i, a);
          for (int b = 0, rb = 0; b < n; ++b) {
            if (b == i) continue;
            Gk(ra, rb++) = G(a, b);
          }
          ++ra;
        }
        Gk.diagonal().array() += n * lambda;
        const double r = z(i) - gi.dot(Gk.ldlt().solve(zk));
        sum += r * r;
      }
      CHECK(testing::rel_err(loocv_error(G, z, lambda), sum / n) < 1e-9);
    }
  }
}

TEST_CASE("lambda grid and search") {
  const Eigen::MatrixXd G = 2.0 * Eigen::MatrixXd::Identity(5, 5);
  const auto grid = relative_lambda_grid(G, 1e-6, 1.0, 10);
  REQUIRE(grid.size() == 10);
  CHECK(grid.front() == doctest::Approx(2e-6));
  CHECK(grid.back() == doctest::Approx(2.0));
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);

  std::mt19937_64 rng(3);
  const Eigen::MatrixXd K = rbf_gram(20, rng);
  const Eigen::VectorXd z = testing::random_matrix(20, 1, rng);
  const auto s = loocv_search(K, z, relative_lambda_grid(K));
  for (double e : s.loo_errors) CHECK(s.best_error <= e);
  CHECK_THROWS_AS(loocv_search(K, z, {}), InvalidArgument);

  // Identical errors: the smaller lambda wins.
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(20);
  CHECK(loocv_search(K, zero, {0.5, 0.1, 0.3}).lambda == 0.1);
}

TEST_CASE("top singular triplet matches the SVD") {
  std::mt19937_64 rng(4);
  for (auto [r, c] : {std::pair{5, 3}, std::pair{40, 60}, std::pair{120, 30}, std::pair{200, 200}}) {
    const Eigen::MatrixXd D = testing::random_matrix(r, c, rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const TopSingular t = top_singular(D);
    CHECK(testing::rel_err(t.sigma, svd.singularValues()(0)) < 1e-10);
    CHECK(testing::rel_err(t.sigma2, svd.singularValues()(1)) < 1e-6);
    CHECK((D * t.v - t.sigma * t.u).norm() < 1e-8 * t.sigma);
    CHECK(std::abs(t.u.norm() - 1.0) < 1e-12);
    const TopSingular d = top_singular_dense(D);
    CHECK(testing::rel_err(d.sigma, svd.singularValues()(0)) < 1e-10);

    // Warm start from the answer of a nearby matrix.
    const Eigen::MatrixXd D2 = D + 1e-3 * testing::random_matrix(r, c, rng);
    const Eigen::VectorXd& warm = r <= c ? t.u : t.v;
    const TopSingular w = top_singular(D2, &warm);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd2(D2);
    CHECK(testing::rel_err(w.sigma, svd2.singularValues()(0)) < 1e-10);
  }
}

TEST_CASE("box L-BFGS on a bounded quadratic") {
  // min sum (x_i - c_i)^2 on [0, 1]: solution clamps c.
  Eigen::VectorXd c(5);
  c << -1.0, 0.3, 0.5, 2.0, 0.99;
  auto fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * (x - c);
    return (x - c).squaredNorm();
  };
  const auto res = minimize_box(fg, Eigen::VectorXd::Constant(5, 0.5), Eigen::VectorXd::Zero(5),
                                Eigen::VectorXd::Ones(5));
  CHECK(res.converged);
  const Eigen::VectorXd want = c.cwiseMax(0.0).cwiseMin(1.0);
  CHECK((res.x - want).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("box L-BFGS on Rosenbrock with an active bound") {
  auto fg = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    g.resize(2);
    g(0) = -2.0 * a - 400.0 * x(0) * b;
    g(1) = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  BoxLbfgsOptions opts;
  opts.max_iter = 2000;
  opts.ftol = 0.0;
  opts.gtol = 1e-10;
  const Eigen::Vector2d lo(-2.0, -2.0), hi(2.0, 2.0);
  auto res = minimize_box(fg, Eigen::Vector2d(-1.2, 1.0), lo, hi, opts);
  CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(res.x(1) == doctest::Approx(1.0).epsilon(1e-5));
  // Upper bound x0 <= 0.5 is active at the constrained optimum (0.5, 0.25).
  const Eigen::Vector2d hi2(0.5, 2.0);
  res = minimize_box(fg, Eigen::Vector2d(-1.2, 1.0), lo, hi2, opts);
  CHECK(res.x(0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(res.x(1) == doctest::Approx(0.25).epsilon(1e-5));
}
