#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "cfb/error.hpp"
#include "cfb/simulate.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cfb;

namespace {

// Composite Simpson on a fine grid.
double simpson(const std::function<double(double)>& f, int m = 10000) {
  const double h = 1.0 / m;
  double s = f(0.0) + f(1.0);
  for (int j = 1; j < m; ++j) s += (j % 2 ? 4.0 : 2.0) * f(j * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("setting 1 truth equals quadrature of a times mu") {
  SimConfig cfg;
  cfg.n = 10;
  for (std::uint64_t r = 0; r < 5; ++r) {
    const Dataset d = gen_replicate(cfg, r);
    const Eigen::RowVectorXd a = d.coefs.row(0);
    auto at = [&](double t) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += a(k) * std::numbers::sqrt2 * std::sin(2 * std::numbers::pi * (k + 1) * t);
      return v;
    };
    const double q = simpson([&](double t) { return at(t) * setting1_mu(t); });
    CHECK(std::abs(q - d.tau(0)) < 1e-6);
    CHECK(d.tau(0) == doctest::Approx(2.0 * a(0) + 0.5 * a(1)).epsilon(1e-14));
  }
}

TEST_CASE("outcome models and psi") {
  const double x[4] = {1.5, -2.0, 0.4, 0.7};
  const double a[4] = {0.9, -1.2, 0.3, 2.2};
  const double p = -2.0 * 2.25 + 0.49 * std::sin(0.8);
  CHECK(psi(x) == doctest::Approx(p).epsilon(1e-15));
  const double g = 0.5 * 0.81 + 4.0 * std::sin(0.9);
  CHECK(true_tau(2, a) == doctest::Approx(g));
  CHECK(true_tau(3, a) == doctest::Approx(g));
  CHECK(outcome_mean(1, a, x) == doctest::Approx(15 * p + 2 * 0.9 - 0.6));
  CHECK(outcome_mean(2, a, x) == doctest::Approx(10 * p + g));
  CHECK(outcome_mean(3, a, x) == doctest::Approx((1 + 2 * p / 3) * g));
  CHECK_THROWS_AS(true_tau(4, a), InvalidArgument);
}

TEST_CASE("replicates are deterministic and independent") {
  SimConfig cfg;
  cfg.n = 20;
  cfg.seed = 99;
  const Dataset a = gen_replicate(cfg, 3);
  const Dataset b = gen_replicate(cfg, 3);
  const Dataset c = gen_replicate(cfg, 4);
  CHECK(a.X == b.X);
  CHECK(a.Y == b.Y);
  CHECK(a.coefs == b.coefs);
  CHECK(a.X != c.X);
  const EvalPoints e1 = gen_eval_points(cfg, 3);
  CHECK(e1.coefs.topRows(20) != a.coefs);
}

TEST_CASE("design moments") {
  SimConfig cfg;
  cfg.n = 20000;
  cfg.grid_points = 3;
  cfg.n_eval = 20000;
  const Dataset d = gen_replicate(cfg, 0);
  const EvalPoints e = gen_eval_points(cfg, 0);
  const double var[4] = {17, 13, 9, 5};
  for (int k = 0; k < 4; ++k) {
    const double vd = d.coefs.col(k).squaredNorm() / cfg.n;
    const double ve = e.coefs.col(k).squaredNorm() / cfg.n_eval;
    CHECK(vd == doctest::Approx(var[k]).epsilon(0.05));
    CHECK(ve == doctest::Approx(var[k]).epsilon(0.05));
    const double cov = d.coefs.col(k).dot(d.X.col(k)) / cfg.n;
    CHECK(cov == doctest::Approx(kDesignSlopes[static_cast<std::size_t>(k)]).epsilon(0.05));
  }
}

TEST_CASE("config validation") {
  SimConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.setting = 4;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = SimConfig{};
  cfg.n = 9;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = SimConfig{};
  cfg.estimators = {"cfb", "npfcbps"};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = SimConfig{};
  cfg.n_eval = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("small study: reports and thread independence") {
  SimConfig cfg;
  cfg.setting = 2;
  cfg.n = 30;
  cfg.replicates = 3;
  cfg.n_eval = 20;
  cfg.grid_points = 41;
  cfg.estimators = {"nw", "reg", "oracle"};
  cfg.threads = 1;
  const SimReport one = run_study(cfg);
  cfg.threads = 3;
  const SimReport three = run_study(cfg);
  CHECK(report_csv(one) == report_csv(three));
  const std::string csv = report_csv(one);
  CHECK(csv.rfind("setting,estimator,metric,replicate,value\n", 0) == 0);
  // Header + 3 estimators x 2 metrics x 3 replicates.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 18);
  for (const auto& [name, s] : one.estimators) {
    CHECK(s.failed == 0);
    CHECK(std::isfinite(s.empirical_mean));
    CHECK(s.empirical_se >= 0.0);
  }
  CHECK(report_markdown(one).find("| nw |") != std::string::npos);
}
