#include "cfb/gram.hpp"

#include <cmath>
#include <vector>

#include "cfb/error.hpp"

namespace cfb {

Eigen::MatrixXd khatri_rao_scale(const Eigen::MatrixXd& G, const Eigen::VectorXd& v) {
  if (G.cols() != v.size()) {
    throw InvalidArgument("khatri_rao_scale: matrix has " + std::to_string(G.cols()) +
                          " columns but vector has " + std::to_string(v.size()) + " entries");
  }
  return G * v.asDiagonal();
}

Eigen::MatrixXd assemble_gf(const GramSet& g) {
  const Eigen::Index n = g.n();
  Eigen::MatrixXd F(2 * n, 2 * n);
  const Eigen::MatrixXd off = khatri_rao_scale(g.G_A, g.Gbar_X);
  F.topLeftCorner(n, n) = g.G_A.cwiseProduct(g.G_X);
  F.bottomLeftCorner(n, n) = off;
  F.topRightCorner(n, n) = off.transpose();
  F.bottomRightCorner(n, n) = g.gbar_X * g.G_A;
  return F;
}

BalanceFactor psd_factor(const Eigen::MatrixXd& G_F, double tol_rel) {
  const Eigen::Index m = G_F.rows();
  if (m == 0 || G_F.cols() != m) throw InvalidArgument("psd_factor: need a nonempty square matrix");
  if (m % 2 != 0) throw InvalidArgument("psd_factor: dimension must be even (2n)");
  if (!(tol_rel >= 0.0)) throw InvalidArgument("psd_factor: tol_rel must be nonnegative");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G_F);
  if (eig.info() != Eigen::Success) throw NumericError("psd_factor: eigendecomposition failed");
  const Eigen::VectorXd& lam = eig.eigenvalues();  // ascending
  const double lmax = lam(m - 1);
  if (!(lmax > 0.0)) throw NumericError("psd_factor: largest eigenvalue is not positive");

  BalanceFactor out;
  out.lambda_max = lmax;
  out.lambda_min_raw = lam(0);
  const double cut = tol_rel * lmax;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index k = m - 1; k >= 0; --k) {
    if (lam(k) > cut) {
      kept.push_back(k);
    } else {
      out.clamped_mass += std::abs(lam(k));
    }
  }
  out.q = static_cast<Eigen::Index>(kept.size());
  out.clamp_count = m - out.q;
  out.M.resize(m, out.q);
  for (Eigen::Index c = 0; c < out.q; ++c) {
    Eigen::VectorXd v = eig.eigenvectors().col(kept[static_cast<std::size_t>(c)]);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    out.M.col(c) = std::sqrt(lam(kept[static_cast<std::size_t>(c)])) * v;
  }
  const Eigen::Index n = m / 2;
  out.M1 = out.M.topRows(n);
  out.M2 = out.M.bottomRows(n);
  return out;
}

}  // namespace cfb
