#pragma once

// Functional treatments and the squared distances every treatment kernel is
// built from: L2 distance between dense trajectories (trapezoid rule on the
// shared grid) and RKHS distance between empirical kernel mean embeddings.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "cfb/kernel_spec.hpp"

namespace cfb {

/// A trajectory observed on a strictly increasing grid in [0, 1].
class DenseTrajectory {
 public:
  /// Throws DataError when the invariants do not hold.
  DenseTrajectory(std::vector<double> grid, std::vector<double> values);

  std::span<const double> grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return grid_.size(); }

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
};

/// A finite sample t_1..t_N, represented by its empirical kernel mean
/// embedding (1/N) sum_l K_e(., t_l).
class SampleSet {
 public:
  /// Throws DataError on an empty or non-finite sample, InvalidArgument on a
  /// bad base kernel.
  SampleSet(std::vector<double> points, KernelSpec base_kernel);

  std::span<const double> points() const { return points_; }
  const KernelSpec& base_kernel() const { return base_kernel_; }

  /// mean_{l,l'} K_e(t_l, t_l'), the squared RKHS norm of the embedding.
  double self_inner() const { return self_inner_; }

 private:
  std::vector<double> points_;
  KernelSpec base_kernel_;
  double self_inner_ = 0.0;
};

/// Homogeneous list of treatments: all dense or all sample sets.
class TreatmentSet {
 public:
  TreatmentSet() = default;
  /// Dense trajectories need not share a grid here; distance routines check it.
  explicit TreatmentSet(std::vector<DenseTrajectory> items);
  /// Throws RepresentationError if base kernels differ.
  explicit TreatmentSet(std::vector<SampleSet> items);

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  bool is_dense() const { return std::holds_alternative<std::vector<DenseTrajectory>>(items_); }

  /// Throws RepresentationError when the set holds the other kind.
  const std::vector<DenseTrajectory>& dense() const;
  const std::vector<SampleSet>& samples() const;

  TreatmentSet subset(std::span<const std::size_t> indices) const;

 private:
  std::variant<std::vector<DenseTrajectory>, std::vector<SampleSet>> items_;
};

/// Trapezoid quadrature weights for a strictly increasing grid.
std::vector<double> trapezoid_weights(std::span<const double> grid);

/// Trapezoid approximation of int (a1 - a2)^2 dt. Throws GridMismatchError if
/// the grids differ.
double l2_distance_sq(const DenseTrajectory& a1, const DenseTrajectory& a2);

/// Trapezoid approximation of int a1 a2 dt.
double l2_inner(const DenseTrajectory& a1, const DenseTrajectory& a2);

/// ||E1 - E2||^2 in the base-kernel RKHS, clamped at 0 when cancellation
/// leaves a value in [-1e-12, 0). Exactly symmetric in its arguments.
double embed_distance_sq(const SampleSet& s1, const SampleSet& s2);

/// <E1, E2> = mean_{l,l'} K_e(t_{1,l}, t_{2,l'}).
double embed_inner(const SampleSet& s1, const SampleSet& s2);

/// Linear interpolation onto `grid`. Throws InvalidArgument when any target
/// point lies outside the source grid's range.
DenseTrajectory resample_to_grid(const DenseTrajectory& t, std::span<const double> grid);

/// n x n squared-distance matrix with exact zero diagonal and exact symmetry.
Eigen::MatrixXd pairwise_distance_sq(const TreatmentSet& set);

/// rows.size() x cols.size() squared distances between two sets of the same kind.
Eigen::MatrixXd cross_distance_sq(const TreatmentSet& rows, const TreatmentSet& cols);

/// Inner-product matrices, used by the linear kernel.
Eigen::MatrixXd pairwise_inner(const TreatmentSet& set);
Eigen::MatrixXd cross_inner(const TreatmentSet& rows, const TreatmentSet& cols);

}  // namespace cfb
