#include "cfb/funcrep.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cfb/error.hpp"
#include "cfb/simd/kernels.hpp"

namespace cfb {
namespace {

double base_eval(const KernelSpec& k, double t, double s) {
  if (k.kind == KernelKind::Linear) return kernel_eval(k, t * s);
  const double d = t - s;
  return kernel_eval(k, d * d);
}

double mean_cross(const SampleSet& s1, const SampleSet& s2) {
  const auto p1 = s1.points();
  const auto p2 = s2.points();
  double acc = 0.0;
  for (double t : p1) {
    double row = 0.0;
    for (double s : p2) row += base_eval(s1.base_kernel(), t, s);
    acc += row;
  }
  return acc / (static_cast<double>(p1.size()) * static_cast<double>(p2.size()));
}

// Canonical argument order so that the cross term, and hence the distance,
// does not depend on which set is passed first.
bool canonical_first(const SampleSet& a, const SampleSet& b) {
  const auto pa = a.points();
  const auto pb = b.points();
  if (pa.size() != pb.size()) return pa.size() < pb.size();
  return !std::lexicographical_compare(pb.begin(), pb.end(), pa.begin(), pa.end());
}

void require_same_base(const SampleSet& s1, const SampleSet& s2) {
  if (!(s1.base_kernel() == s2.base_kernel())) {
    throw RepresentationError("sample sets use different base kernels: " +
                              describe(s1.base_kernel()) + " vs " + describe(s2.base_kernel()));
  }
}

void require_same_grid(const DenseTrajectory& a1, const DenseTrajectory& a2) {
  const auto g1 = a1.grid();
  const auto g2 = a2.grid();
  if (!std::equal(g1.begin(), g1.end(), g2.begin(), g2.end())) {
    throw GridMismatchError("trajectories are observed on different grids (" +
                            std::to_string(g1.size()) + " vs " + std::to_string(g2.size()) +
                            " points); resample_to_grid first");
  }
}

// Weights shared by every trajectory in both sets; throws with index context.
std::vector<double> shared_weights(const std::vector<DenseTrajectory>& a,
                                   const std::vector<DenseTrajectory>& b) {
  const DenseTrajectory& ref = !a.empty() ? a.front() : b.front();
  auto check = [&](const std::vector<DenseTrajectory>& items, const char* which) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      try {
        require_same_grid(ref, items[i]);
      } catch (const GridMismatchError& e) {
        throw GridMismatchError(std::string(which) + " item " + std::to_string(i) + ": " +
                                e.what());
      }
    }
  };
  check(a, "treatment");
  check(b, "treatment");
  return trapezoid_weights(ref.grid());
}

template <class DenseFn, class SampleFn>
Eigen::MatrixXd cross_matrix(const TreatmentSet& rows, const TreatmentSet& cols, DenseFn dense_fn,
                             SampleFn sample_fn) {
  if (rows.is_dense() != cols.is_dense()) {
    throw RepresentationError("cannot compare dense trajectories with sample sets");
  }
  Eigen::MatrixXd out(rows.size(), cols.size());
  if (rows.empty() || cols.empty()) return out;
  if (rows.is_dense()) {
    const auto& r = rows.dense();
    const auto& c = cols.dense();
    const std::vector<double> w = shared_weights(r, c);
    for (std::size_t i = 0; i < r.size(); ++i) {
      for (std::size_t j = 0; j < c.size(); ++j) {
        out(i, j) = dense_fn(r[i].values(), c[j].values(), w);
      }
    }
  } else {
    const auto& r = rows.samples();
    const auto& c = cols.samples();
    for (std::size_t i = 0; i < r.size(); ++i) {
      for (std::size_t j = 0; j < c.size(); ++j) {
        try {
          out(i, j) = sample_fn(r[i], c[j]);
        } catch (const Error& e) {
          throw RepresentationError("item (" + std::to_string(i) + "," + std::to_string(j) +
                                    "): " + e.what());
        }
      }
    }
  }
  return out;
}

}  // namespace

DenseTrajectory::DenseTrajectory(std::vector<double> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.size() != values_.size()) {
    throw DataError("trajectory: grid has " + std::to_string(grid_.size()) + " points but " +
                    std::to_string(values_.size()) + " values");
  }
  if (grid_.size() < 2) throw DataError("trajectory: need at least 2 observations");
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (!std::isfinite(grid_[i]) || !std::isfinite(values_[i])) {
      throw DataError("trajectory: non-finite entry at position " + std::to_string(i));
    }
    if (i > 0 && !(grid_[i] > grid_[i - 1])) {
      throw DataError("trajectory: grid not strictly increasing at position " +
                      std::to_string(i));
    }
  }
}

SampleSet::SampleSet(std::vector<double> points, KernelSpec base_kernel)
    : points_(std::move(points)), base_kernel_(base_kernel) {
  base_kernel_.validate();
  if (points_.empty()) throw DataError("sample set: no points");
  for (double p : points_) {
    if (!std::isfinite(p)) throw DataError("sample set: non-finite point");
  }
  self_inner_ = mean_cross(*this, *this);
}

TreatmentSet::TreatmentSet(std::vector<DenseTrajectory> items) : items_(std::move(items)) {}

TreatmentSet::TreatmentSet(std::vector<SampleSet> items) : items_(std::move(items)) {
  const auto& s = std::get<std::vector<SampleSet>>(items_);
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!(s[i].base_kernel() == s[0].base_kernel())) {
      throw RepresentationError("sample set " + std::to_string(i) +
                                " uses a different base kernel than item 0");
    }
  }
}

std::size_t TreatmentSet::size() const {
  return std::visit([](const auto& v) { return v.size(); }, items_);
}

const std::vector<DenseTrajectory>& TreatmentSet::dense() const {
  if (!is_dense()) throw RepresentationError("treatment set holds sample sets, not trajectories");
  return std::get<std::vector<DenseTrajectory>>(items_);
}

const std::vector<SampleSet>& TreatmentSet::samples() const {
  if (is_dense()) throw RepresentationError("treatment set holds trajectories, not sample sets");
  return std::get<std::vector<SampleSet>>(items_);
}

TreatmentSet TreatmentSet::subset(std::span<const std::size_t> indices) const {
  return std::visit(
      [&](const auto& v) {
        std::decay_t<decltype(v)> out;
        out.reserve(indices.size());
        for (std::size_t i : indices) out.push_back(v.at(i));
        return TreatmentSet(std::move(out));
      },
      items_);
}

std::vector<double> trapezoid_weights(std::span<const double> grid) {
  const std::size_t m = grid.size();
  if (m < 2) throw InvalidArgument("trapezoid_weights: need at least 2 grid points");
  std::vector<double> w(m);
  w[0] = 0.5 * (grid[1] - grid[0]);
  w[m - 1] = 0.5 * (grid[m - 1] - grid[m - 2]);
  for (std::size_t i = 1; i + 1 < m; ++i) w[i] = 0.5 * (grid[i + 1] - grid[i - 1]);
  return w;
}

double l2_distance_sq(const DenseTrajectory& a1, const DenseTrajectory& a2) {
  require_same_grid(a1, a2);
  const auto w = trapezoid_weights(a1.grid());
  return simd::weighted_sq_diff(a1.values(), a2.values(), w);
}

double l2_inner(const DenseTrajectory& a1, const DenseTrajectory& a2) {
  require_same_grid(a1, a2);
  const auto w = trapezoid_weights(a1.grid());
  return simd::weighted_dot(a1.values(), a2.values(), w);
}

double embed_inner(const SampleSet& s1, const SampleSet& s2) {
  require_same_base(s1, s2);
  return canonical_first(s1, s2) ? mean_cross(s1, s2) : mean_cross(s2, s1);
}

double embed_distance_sq(const SampleSet& s1, const SampleSet& s2) {
  const double cross = embed_inner(s1, s2);
  const double d = (s1.self_inner() + s2.self_inner()) - 2.0 * cross;
  if (d < 0.0) {
    if (d < -1e-12) {
      throw NumericError("embed_distance_sq: negative squared distance " + std::to_string(d) +
                         " (base kernel not positive definite?)");
    }
    return 0.0;
  }
  return d;
}

DenseTrajectory resample_to_grid(const DenseTrajectory& t, std::span<const double> grid) {
  const auto src = t.grid();
  const auto val = t.values();
  std::vector<double> out;
  out.reserve(grid.size());
  for (double x : grid) {
    if (x < src.front() || x > src.back()) {
      throw InvalidArgument("resample_to_grid: target point " + std::to_string(x) +
                            " outside source range [" + std::to_string(src.front()) + ", " +
                            std::to_string(src.back()) + "]");
    }
    auto it = std::lower_bound(src.begin(), src.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - src.begin());
    if (src[hi] == x) {
      out.push_back(val[hi]);
      continue;
    }
    const std::size_t lo = hi - 1;
    const double frac = (x - src[lo]) / (src[hi] - src[lo]);
    out.push_back(val[lo] + frac * (val[hi] - val[lo]));
  }
  return DenseTrajectory(std::vector<double>(grid.begin(), grid.end()), std::move(out));
}

Eigen::MatrixXd pairwise_distance_sq(const TreatmentSet& set) {
  const std::size_t n = set.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  if (n == 0) return out;
  if (set.is_dense()) {
    const auto& a = set.dense();
    const std::vector<double> w = shared_weights(a, {});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        out(i, j) = out(j, i) = simd::weighted_sq_diff(a[i].values(), a[j].values(), w);
      }
    }
  } else {
    const auto& s = set.samples();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        try {
          out(i, j) = out(j, i) = embed_distance_sq(s[i], s[j]);
        } catch (const Error& e) {
          throw NumericError("item (" + std::to_string(i) + "," + std::to_string(j) +
                             "): " + e.what());
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd cross_distance_sq(const TreatmentSet& rows, const TreatmentSet& cols) {
  return cross_matrix(
      rows, cols,
      [](std::span<const double> a, std::span<const double> b, const std::vector<double>& w) {
        return simd::weighted_sq_diff(a, b, w);
      },
      [](const SampleSet& a, const SampleSet& b) { return embed_distance_sq(a, b); });
}

Eigen::MatrixXd pairwise_inner(const TreatmentSet& set) {
  Eigen::MatrixXd out = cross_inner(set, set);
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < out.rows(); ++i) out(i, j) = out(j, i);
  }
  return out;
}

Eigen::MatrixXd cross_inner(const TreatmentSet& rows, const TreatmentSet& cols) {
  return cross_matrix(
      rows, cols,
      [](std::span<const double> a, std::span<const double> b, const std::vector<double>& w) {
        return simd::weighted_dot(a, b, w);
      },
      [](const SampleSet& a, const SampleSet& b) { return embed_inner(a, b); });
}

}  // namespace cfb
