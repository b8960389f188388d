#include <utility>
#include <cmath>
#include <numbers>
#include <random>

#include "cfb/error.hpp"
#include "cfb/funcrep.hpp"
#include "cfb/kernels.hpp"
#include "cfb/simulate.hpp"
#include "doctest.h"

using namespace cfb;

namespace {

DenseTrajectory sampled(std::vector<double> grid, double (*f)(double)) {
  std::vector<double> v;
  for (double t : grid) v.push_back(f(t));
  return DenseTrajectory(std::move(grid), std::move(v));
}

}  // namespace

TEST_CASE("dense trajectory validation") {
  CHECK_THROWS_AS(DenseTrajectory({0.0}, {1.0}), DataError);
  CHECK_THROWS_AS(DenseTrajectory({0.0, 0.0}, {1.0, 2.0}), DataError);
  CHECK_THROWS_AS(DenseTrajectory({0.0, 0.5}, {1.0}), DataError);
  CHECK_THROWS_AS(DenseTrajectory({0.0, 0.5}, {1.0, NAN}), DataError);
  CHECK_NOTHROW(DenseTrajectory({0.0, 0.5, 1.0}, {1.0, 2.0, 3.0}));
}

TEST_CASE("trapezoid weights integrate linear functions exactly") {
  const std::vector<double> grid{0.0, 0.1, 0.35, 0.7, 1.0};
  const auto w = trapezoid_weights(grid);
  double s = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    s += w[i];
    s1 += w[i] * (2.0 * grid[i] + 1.0);
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s1 == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("l2 distance of sinusoids matches the analytic value") {
  // int (sqrt2 sin 2 pi t - sqrt2 sin 4 pi t)^2 = 2
  const auto grid = uniform_grid(2001);
  const auto a = sampled(grid, [](double t) { return std::numbers::sqrt2 * std::sin(2 * std::numbers::pi * t); });
  const auto b = sampled(grid, [](double t) { return std::numbers::sqrt2 * std::sin(4 * std::numbers::pi * t); });
  CHECK(l2_distance_sq(a, b) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(l2_inner(a, b) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(l2_distance_sq(a, a) == 0.0);
}

TEST_CASE("grid mismatch is reported") {
  const DenseTrajectory a({0.0, 0.5, 1.0}, {1, 2, 3});
  const DenseTrajectory b({0.0, 0.4, 1.0}, {1, 2, 3});
  CHECK_THROWS_AS(l2_distance_sq(a, b), GridMismatchError);
  TreatmentSet set(std::vector<DenseTrajectory>{a, b});
  CHECK_THROWS_AS(pairwise_distance_sq(set), GridMismatchError);
}

TEST_CASE("grid refinement converges for the simulation family") {
  const double a[4] = {1.3, -0.7, 2.1, 0.4};
  const double b[4] = {-0.2, 1.1, 0.5, -1.6};
  double prev = 0.0, last_change = 1.0;
  for (int k = 0; k <= 7; ++k) {
    const auto grid = uniform_grid(10 * (1 << k));
    const double d = l2_distance_sq(fourier_trajectory(a, grid), fourier_trajectory(b, grid));
    if (k > 0) last_change = std::abs(d - prev) / d;
    prev = d;
  }
  CHECK(last_change < 1e-3);
  double exact = 0.0;
  for (int k = 0; k < 4; ++k) exact += (a[k] - b[k]) * (a[k] - b[k]);
  CHECK(prev == doctest::Approx(exact).epsilon(1e-3));
}

TEST_CASE("embedding distances: symmetry, zero self distance, triangle inequality") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  const KernelSpec base = KernelSpec::gaussian(1.0);
  std::vector<SampleSet> sets;
  for (int i = 0; i < 12; ++i) {
    std::vector<double> pts(3 + i % 5);
    for (auto& p : pts) p = z(rng) + 0.2 * i;
    sets.emplace_back(pts, base);
  }
  for (std::size_t i = 0; i < sets.size(); ++i) {
    CHECK(embed_distance_sq(sets[i], sets[i]) == 0.0);
    for (std::size_t j = 0; j < sets.size(); ++j) {
      CHECK(embed_distance_sq(sets[i], sets[j]) == embed_distance_sq(sets[j], sets[i]));
      CHECK(embed_distance_sq(sets[i], sets[j]) >= 0.0);
      for (std::size_t k = 0; k < sets.size(); ++k) {
        const double lhs = std::sqrt(embed_distance_sq(sets[i], sets[k]));
        const double rhs = std::sqrt(embed_distance_sq(sets[i], sets[j])) +
                           std::sqrt(embed_distance_sq(sets[j], sets[k]));
        CHECK(lhs <= rhs + 1e-9);
      }
    }
  }
  const TreatmentSet ts(sets);
  const Eigen::MatrixXd D = pairwise_distance_sq(ts);
  CHECK(D == D.transpose());
  CHECK(D.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embedding inner product of single points is the base kernel") {
  const KernelSpec base = KernelSpec::gaussian(2.0);
  const SampleSet a({0.3}, base), b({1.1}, base);
  CHECK(embed_inner(a, b) == doctest::Approx(std::exp(-2.0 * 0.64 / 2.0)).epsilon(1e-14));
}

TEST_CASE("mixed base kernels are rejected") {
  std::vector<SampleSet> s{SampleSet({0.0}, KernelSpec::gaussian(1.0)),
                           SampleSet({1.0}, KernelSpec::gaussian(2.0))};
  CHECK_THROWS_AS(TreatmentSet(std::move(s)), RepresentationError);
}

TEST_CASE("kind accessors") {
  TreatmentSet dense(std::vector<DenseTrajectory>{DenseTrajectory({0.0, 1.0}, {0, 1})});
  CHECK(dense.is_dense());
  CHECK_THROWS_AS(dense.samples(), RepresentationError);
  const std::size_t idx[] = {0, 0};
  CHECK(dense.subset(idx).size() == 2);
}

TEST_CASE("resampling interpolates linearly and refuses to extrapolate") {
  const DenseTrajectory t({0.0, 0.5, 1.0}, {0.0, 1.0, 3.0});
  const std::vector<double> g{0.0, 0.25, 0.75, 1.0};
  const auto r = resample_to_grid(t, g);
  CHECK(r.values()[1] == doctest::Approx(0.5));
  CHECK(r.values()[2] == doctest::Approx(2.0));
  const std::vector<double> wide{-0.1, 1.0};
  CHECK_THROWS_AS(resample_to_grid(t, wide), InvalidArgument);
}

TEST_CASE("pairwise and cross distances agree") {
  std::vector<DenseTrajectory> items;
  const auto grid = uniform_grid(21);
  for (int i = 0; i < 6; ++i) {
    const double a[4] = {0.1 * i, -0.3 * i, 1.0, 0.5 - 0.2 * i};
    items.push_back(fourier_trajectory(a, grid));
  }
  const TreatmentSet set(items);
  const Eigen::MatrixXd P = pairwise_distance_sq(set);
  const Eigen::MatrixXd C = cross_distance_sq(set, set);
  CHECK((P - C).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd I = pairwise_inner(set);
  CHECK(I == I.transpose());
  CHECK((I - cross_inner(set, set)).cwiseAbs().maxCoeff() < 1e-12);
}
