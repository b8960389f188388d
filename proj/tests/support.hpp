#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "cfb/estimators.hpp"
#include "cfb/simulate.hpp"

namespace testing {

inline cfb::PreparedData small_data(int n, std::uint64_t seed, int setting = 1, int grid = 51) {
  cfb::SimConfig cfg;
  cfg.setting = setting;
  cfg.n = n;
  cfg.grid_points = grid;
  cfg.seed = seed;
  cfb::Dataset d = cfb::gen_replicate(cfg, 0);
  return cfb::prepare_data(std::move(d.treatments), std::move(d.X), std::move(d.Y), {});
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = z(rng);
  }
  return M;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
