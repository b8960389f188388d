#include "cfb/estimators.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cfb/error.hpp"

namespace cfb {
namespace {

void require_shapes(const TreatmentSet& a, const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
  const auto n = static_cast<Eigen::Index>(a.size());
  if (n < 2) throw DataError("need at least 2 observations, got " + std::to_string(n));
  if (Y.size() != n) {
    throw DataError("outcome vector has " + std::to_string(Y.size()) + " entries for " +
                    std::to_string(n) + " treatments");
  }
  if (X.rows() != n) {
    throw DataError("covariate matrix has " + std::to_string(X.rows()) + " rows for " +
                    std::to_string(n) + " treatments");
  }
  if (X.cols() < 1) throw DataError("need at least one covariate");
  if (!Y.allFinite()) throw DataError("outcomes contain non-finite values");
  if (!X.allFinite()) throw DataError("covariates contain non-finite values");
}

double log_normal_pdf(double s, double mu, double v) {
  const double d = s - mu;
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * d * d / v;
}

}  // namespace

PreparedData prepare_data(TreatmentSet treatments, Eigen::MatrixXd X, Eigen::VectorXd Y,
                          const EstimatorConfig& cfg) {
  require_shapes(treatments, X, Y);
  PreparedData d;
  const Eigen::MatrixXd dist_a = pairwise_distance_sq(treatments);
  d.kernel_a = resolve_kernel(cfg.kernel_a, dist_a);
  Eigen::MatrixXd G_A = d.kernel_a.distance_based() ? apply_kernel(d.kernel_a, dist_a)
                                                    : gram_treatment(treatments, d.kernel_a);
  const Eigen::MatrixXd dist_x = covariate_distance_sq(X);
  d.kernel_x = resolve_kernel(cfg.kernel_x, dist_x);
  d.grams = make_gram_set(std::move(G_A), gram_covariates(X, d.kernel_x));
  d.treatments = std::move(treatments);
  d.X = std::move(X);
  d.Y = std::move(Y);
  return d;
}

std::vector<double> lambda_grid_for(const Eigen::MatrixXd& G, const EstimatorConfig& cfg) {
  if (!cfg.lambda_grid.empty()) return cfg.lambda_grid;
  return relative_lambda_grid(G, cfg.lambda_lo, cfg.lambda_hi, cfg.lambda_count);
}

FteModel weighted_fit(const PreparedData& data, const Eigen::VectorXd& w,
                      const EstimatorConfig& cfg, std::string name) {
  if (w.size() != data.n()) throw InvalidArgument("weighted_fit: weight length mismatch");
  const Eigen::VectorXd z = w.cwiseProduct(data.Y);
  const LambdaSearch search = loocv_search(data.grams.G_A, z, lambda_grid_for(data.grams.G_A, cfg));
  const RidgeFit fit = krr_fit(data.grams.G_A, z, search.lambda);
  FteModel m;
  m.estimator = std::move(name);
  m.body = KernelExpansion{data.kernel_a, data.treatments, fit.alpha};
  m.lambda = fit.lambda;
  m.weights = w;
  m.fitted = fit.fitted;
  return m;
}

FteModel nw_fit(const PreparedData& data, const EstimatorConfig& cfg) {
  FteModel m = weighted_fit(data, Eigen::VectorXd::Ones(data.n()), cfg, "nw");
  m.weights.resize(0);
  return m;
}

Eigen::VectorXd RegFit::m_hat_at(const TreatmentSet& treatments, const Eigen::MatrixXd& x) const {
  const auto& k = std::get<KernelExpansion>(model.body);
  if (static_cast<Eigen::Index>(treatments.size()) != x.rows()) {
    throw InvalidArgument("m_hat_at: treatments and covariates differ in count");
  }
  const Eigen::MatrixXd KA = cross_gram_treatment(treatments, k.centers, k.kernel);
  const Eigen::MatrixXd KX = cross_gram_covariates(x, X, kernel_x);
  return KA.cwiseProduct(KX) * ridge.alpha;
}

RegFit reg_fit(const PreparedData& data, const EstimatorConfig& cfg) {
  const GramSet& g = data.grams;
  const Eigen::MatrixXd G = g.G_A.cwiseProduct(g.G_X);
  const LambdaSearch search = loocv_search(G, data.Y, lambda_grid_for(G, cfg));
  RegFit out;
  out.ridge = krr_fit(G, data.Y, search.lambda);
  out.m_hat = out.ridge.fitted;
  // (1/n) sum_j K_X(X_j, X_i) = Gbar_X(i), so tau_REG is itself an expansion
  // over the treatments with coefficients alpha o Gbar_X.
  const Eigen::VectorXd coef = out.ridge.alpha.cwiseProduct(g.Gbar_X);
  out.tau_reg = g.G_A * coef;
  out.model.estimator = "reg";
  out.model.body = KernelExpansion{data.kernel_a, data.treatments, coef};
  out.model.lambda = search.lambda;
  out.model.fitted = out.tau_reg;
  out.X = data.X;
  out.kernel_x = data.kernel_x;
  return out;
}

FpcBasis fpc_basis(const TreatmentSet& treatments, double variance_fraction) {
  const auto& items = treatments.dense();
  if (items.size() < 2) throw DataError("fpc_basis: need at least 2 trajectories");
  if (!(variance_fraction > 0.0 && variance_fraction <= 1.0)) {
    throw InvalidArgument("fpc_basis: variance fraction must lie in (0, 1]");
  }
  const auto g0 = items.front().grid();
  const auto m = static_cast<Eigen::Index>(g0.size());
  const auto n = static_cast<Eigen::Index>(items.size());
  Eigen::MatrixXd A(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = items[static_cast<std::size_t>(i)];
    const auto gi = t.grid();
    if (!std::equal(gi.begin(), gi.end(), g0.begin(), g0.end())) {
      throw GridMismatchError("fpc_basis: trajectory " + std::to_string(i) +
                              " is not on the common grid");
    }
    A.row(i) = Eigen::Map<const Eigen::RowVectorXd>(t.values().data(), m);
  }

  FpcBasis basis;
  basis.grid.assign(g0.begin(), g0.end());
  basis.mean = A.colwise().mean().transpose();
  const Eigen::MatrixXd C = A.rowwise() - basis.mean.transpose();
  const std::vector<double> w = trapezoid_weights(g0);
  const Eigen::VectorXd sw = Eigen::Map<const Eigen::VectorXd>(w.data(), m).cwiseSqrt();
  // Covariance operator discretized with the quadrature weights, symmetrized:
  // W^{1/2} (C^T C / n) W^{1/2} psi = ev psi,  phi = W^{-1/2} psi.
  const Eigen::MatrixXd Cw = C * sw.asDiagonal();
  const Eigen::MatrixXd K = (Cw.transpose() * Cw) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  if (eig.info() != Eigen::Success) throw NumericError("fpc_basis: eigendecomposition failed");

  basis.eigenvalues = eig.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd psi = eig.eigenvectors().rowwise().reverse();
  const double total = basis.eigenvalues.sum();
  if (!(total > 0.0)) throw DataError("fpc_basis: trajectories have zero variance");

  double acc = 0.0;
  int L = 0;
  while (L < m) {
    acc += basis.eigenvalues(L);
    ++L;
    if (acc / total >= variance_fraction) break;
  }
  basis.retained = L;
  basis.explained = acc / total;
  basis.eigenfunctions = sw.cwiseInverse().asDiagonal() * psi.leftCols(L);
  for (int k = 0; k < L; ++k) {
    // Sign convention: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    basis.eigenfunctions.col(k).cwiseAbs().maxCoeff(&arg);
    if (basis.eigenfunctions(arg, k) < 0.0) basis.eigenfunctions.col(k) *= -1.0;
  }
  return basis;
}

double normal_density_ratio(double s, double mu_m, double v_m, double mu_c, double v_c) {
  return std::exp(log_normal_pdf(s, mu_m, v_m) - log_normal_pdf(s, mu_c, v_c));
}

Eigen::VectorXd stabilized_weights(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& X) {
  const Eigen::Index n = scores.rows();
  const Eigen::Index p = X.cols();
  if (X.rows() != n) throw InvalidArgument("stabilized_weights: row mismatch");
  if (n <= p + 1) {
    throw DataError("stabilized_weights: need more than " + std::to_string(p + 1) +
                    " observations for the score regressions");
  }
  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = X;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < p + 1) throw DataError("stabilized_weights: singular covariate design");

  Eigen::VectorXd log_w = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < scores.cols(); ++k) {
    const Eigen::VectorXd s = scores.col(k);
    const Eigen::VectorXd beta = qr.solve(s);
    const Eigen::VectorXd fit = design * beta;
    const double rss = (s - fit).squaredNorm();
    const double v_c = rss / static_cast<double>(n - p - 1);
    const double mu_m = s.mean();
    const double v_m = (s.array() - mu_m).square().sum() / static_cast<double>(n - 1);
    if (!(v_c > 0.0) || !(v_m > 0.0)) {
      throw DataError("stabilized_weights: zero residual variance for score " + std::to_string(k));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      log_w(i) += log_normal_pdf(s(i), mu_m, v_m) - log_normal_pdf(s(i), fit(i), v_c);
    }
  }
  return log_w.array().exp();
}

FpcBaselineFit fpc_baseline(const TreatmentSet& treatments, const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& Y, double variance_fraction) {
  require_shapes(treatments, X, Y);
  FpcBasis basis = fpc_basis(treatments, variance_fraction);
  const Eigen::MatrixXd S = basis.scores(treatments);
  FpcBaselineFit out;
  out.weights = stabilized_weights(S, X);

  const Eigen::Index n = S.rows();
  Eigen::MatrixXd Z(n, S.cols() + 1);
  Z.col(0).setOnes();
  Z.rightCols(S.cols()) = S;
  const Eigen::VectorXd sw = out.weights.cwiseSqrt();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sw.asDiagonal() * Z);
  if (qr.rank() < Z.cols()) throw DataError("fpc_baseline: singular weighted design");
  const Eigen::VectorXd beta = qr.solve(sw.cwiseProduct(Y));

  out.model.estimator = "fpc-baseline";
  out.model.body = LinearFpcModel{std::move(basis), beta};
  out.model.weights = out.weights;
  out.model.fitted = Z * beta;
  return out;
}

double oracle_weight(std::span<const double> a, std::span<const double> x) {
  if (a.size() != kDesignSlopes.size() || x.size() != kDesignSlopes.size()) {
    throw InvalidArgument("oracle_weight: expects 4 treatment coefficients and 4 covariates");
  }
  double log_w = 0.0;
  for (std::size_t k = 0; k < kDesignSlopes.size(); ++k) {
    const double c = kDesignSlopes[k];
    log_w += log_normal_pdf(a[k], 0.0, 1.0 + c * c) - log_normal_pdf(a[k], c * x[k], 1.0);
  }
  return std::exp(log_w);
}

}  // namespace cfb
