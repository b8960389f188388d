#include "cfb/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cfb/error.hpp"
#include "cfb/simd/kernels.hpp"

namespace cfb {
namespace {

void require_finite(const Eigen::MatrixXd& X) {
  if (!X.allFinite()) throw DataError("covariates contain non-finite values");
}

// Row-major copy so each covariate row is contiguous for the SIMD kernels.
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::span<const double> row_span(const RowMajor& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace

double median_heuristic(const Eigen::MatrixXd& dist_sq) {
  const Eigen::Index n = dist_sq.rows();
  if (n < 2 || dist_sq.cols() != n) {
    throw InvalidArgument("median_heuristic: need a square matrix with n >= 2");
  }
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back(std::sqrt(std::max(0.0, dist_sq(i, j))));
  }
  const std::size_t m = d.size();
  const std::size_t mid = m / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double med = d[mid];
  if (m % 2 == 0) {
    const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (lower + med);
  }
  if (!(med > 0.0)) {
    throw NumericError("median_heuristic: median pairwise distance is zero (degenerate bandwidth)");
  }
  return med;
}

KernelSpec resolve_kernel(const KernelConfig& cfg, const Eigen::MatrixXd& dist_sq) {
  KernelSpec spec{cfg.kind, 1.0, cfg.offset};
  if (spec.distance_based()) spec.bandwidth = cfg.bandwidth ? *cfg.bandwidth : median_heuristic(dist_sq);
  spec.validate();
  return spec;
}

Eigen::MatrixXd apply_kernel(const KernelSpec& spec, const Eigen::MatrixXd& x) {
  spec.validate();
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i, j) = kernel_eval(spec, x(i, j));
  }
  return out;
}

Eigen::MatrixXd gram_treatment(const TreatmentSet& set, const KernelSpec& spec) {
  return apply_kernel(spec, spec.distance_based() ? pairwise_distance_sq(set) : pairwise_inner(set));
}

Eigen::MatrixXd cross_gram_treatment(const TreatmentSet& rows, const TreatmentSet& cols,
                                     const KernelSpec& spec) {
  return apply_kernel(spec, spec.distance_based() ? cross_distance_sq(rows, cols)
                                                  : cross_inner(rows, cols));
}

Eigen::MatrixXd covariate_distance_sq(const Eigen::MatrixXd& X) {
  require_finite(X);
  const RowMajor R = X;
  const Eigen::Index n = R.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out(i, j) = out(j, i) = simd::sq_euclidean(row_span(R, i), row_span(R, j));
    }
  }
  return out;
}

Eigen::MatrixXd cross_gram_covariates(const Eigen::MatrixXd& X1, const Eigen::MatrixXd& X2,
                                      const KernelSpec& spec) {
  require_finite(X1);
  require_finite(X2);
  if (X1.cols() != X2.cols()) throw InvalidArgument("cross_gram_covariates: column mismatch");
  const RowMajor R1 = X1;
  const RowMajor R2 = X2;
  Eigen::MatrixXd raw(R1.rows(), R2.rows());
  for (Eigen::Index i = 0; i < R1.rows(); ++i) {
    for (Eigen::Index j = 0; j < R2.rows(); ++j) {
      raw(i, j) = spec.distance_based() ? simd::sq_euclidean(row_span(R1, i), row_span(R2, j))
                                        : R1.row(i).dot(R2.row(j));
    }
  }
  return apply_kernel(spec, raw);
}

CovariateGram gram_covariates(const Eigen::MatrixXd& X, const KernelSpec& spec) {
  require_finite(X);
  CovariateGram out;
  if (spec.distance_based()) {
    out.G_X = apply_kernel(spec, covariate_distance_sq(X));
  } else {
    Eigen::MatrixXd inner = X * X.transpose();
    for (Eigen::Index j = 0; j < inner.cols(); ++j) {
      for (Eigen::Index i = j + 1; i < inner.rows(); ++i) inner(i, j) = inner(j, i);
    }
    out.G_X = apply_kernel(spec, inner);
  }
  out.Gbar_X = out.G_X.rowwise().mean();
  out.gbar_X = out.Gbar_X.mean();
  return out;
}

GramSet make_gram_set(Eigen::MatrixXd G_A, CovariateGram cov) {
  const Eigen::Index n = G_A.rows();
  if (G_A.cols() != n || cov.G_X.rows() != n || cov.G_X.cols() != n || cov.Gbar_X.size() != n) {
    throw InvalidArgument("make_gram_set: inconsistent dimensions");
  }
  return GramSet{std::move(G_A), std::move(cov.G_X), std::move(cov.Gbar_X), cov.gbar_X};
}

}  // namespace cfb
