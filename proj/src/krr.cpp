#include "cfb/krr.hpp"

#include <cmath>
#include <string>

#include "cfb/error.hpp"

namespace cfb {
namespace {

void check_inputs(const Eigen::MatrixXd& G, double lambda) {
  if (G.rows() != G.cols() || G.rows() == 0) {
    throw InvalidArgument("kernel ridge: Gram matrix must be square and nonempty");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("kernel ridge: lambda must be positive, got " + std::to_string(lambda));
  }
}

}  // namespace

Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& G, double lambda, const Eigen::MatrixXd& rhs) {
  check_inputs(G, lambda);
  const Eigen::Index n = G.rows();
  if (rhs.rows() != n) throw InvalidArgument("ridge_solve: right-hand side has wrong length");
  Eigen::MatrixXd A = G;
  A.diagonal().array() += static_cast<double>(n) * lambda;

  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);

  A.diagonal().array() += 1e-12 * G.trace() / static_cast<double>(n);
  llt.compute(A);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-15) {
    throw NumericError("ridge_solve: system (G + n lambda I) is singular (rcond estimate " +
                       std::to_string(ldlt.rcond()) + ")");
  }
  return ldlt.solve(rhs);
}

Eigen::MatrixXd hat_matrix(const Eigen::MatrixXd& G, double lambda) {
  // (G + n lambda I)^{-1} G == G (G + n lambda I)^{-1}; both are symmetric in
  // exact arithmetic, so average away the rounding asymmetry.
  const Eigen::MatrixXd X = ridge_solve(G, lambda, G);
  return 0.5 * (X + X.transpose());
}

RidgeFit krr_fit(const Eigen::MatrixXd& G, const Eigen::VectorXd& z, double lambda) {
  check_inputs(G, lambda);
  if (z.size() != G.rows()) throw InvalidArgument("krr_fit: response length mismatch");
  if (!z.allFinite()) throw InvalidArgument("krr_fit: responses must be finite");
  RidgeFit fit;
  fit.alpha = ridge_solve(G, lambda, z);
  fit.z = z;
  fit.fitted = G * fit.alpha;
  fit.lambda = lambda;
  return fit;
}

Eigen::VectorXd krr_predict(const RidgeFit& fit, const Eigen::MatrixXd& cross_gram) {
  if (cross_gram.cols() != fit.alpha.size()) {
    throw InvalidArgument("krr_predict: cross Gram has " + std::to_string(cross_gram.cols()) +
                          " columns, model has " + std::to_string(fit.alpha.size()) +
                          " centers");
  }
  return cross_gram * fit.alpha;
}

double loocv_error(const Eigen::MatrixXd& G, const Eigen::VectorXd& z, double lambda) {
  if (z.size() != G.rows()) throw InvalidArgument("loocv_error: response length mismatch");
  const Eigen::MatrixXd H = hat_matrix(G, lambda);
  const Eigen::VectorXd fit = H * z;
  const Eigen::Index n = G.rows();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double denom = 1.0 - H(i, i);
    if (denom <= 1e-12) {
      throw NumericError("loocv_error: leverage H_ii = " + std::to_string(H(i, i)) +
                         " too close to 1 at index " + std::to_string(i));
    }
    const double r = (z(i) - fit(i)) / denom;
    acc += r * r;
  }
  return acc / static_cast<double>(n);
}

}  // namespace cfb

namespace cfb {

LambdaSearch loocv_search(const Eigen::MatrixXd& G, const Eigen::VectorXd& z,
                          const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidArgument("loocv_search: empty lambda grid");
  LambdaSearch out;
  out.grid = grid;
  out.loo_errors.reserve(grid.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.loo_errors.push_back(loocv_error(G, z, grid[k]));
    const double e = out.loo_errors[k];
    const double b = out.loo_errors[best];
    if (e < b || (e == b && grid[k] < grid[best])) best = k;
  }
  out.lambda = grid[best];
  out.best_error = out.loo_errors[best];
  return out;
}

std::vector<double> relative_lambda_grid(const Eigen::MatrixXd& G, double lo, double hi,
                                         int count) {
  if (count < 1 || !(lo > 0.0) || !(hi >= lo)) {
    throw InvalidArgument("relative_lambda_grid: need count >= 1 and 0 < lo <= hi");
  }
  const double scale = G.trace() / static_cast<double>(G.rows());
  if (!(scale > 0.0)) throw NumericError("relative_lambda_grid: Gram matrix has nonpositive trace");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count));
  const double llo = std::log10(lo);
  const double lhi = std::log10(hi);
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    grid.push_back(scale * std::pow(10.0, llo + t * (lhi - llo)));
  }
  return grid;
}

}  // namespace cfb
