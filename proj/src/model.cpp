#include "cfb/model.hpp"

#include <algorithm>

#include "cfb/error.hpp"
#include "cfb/kernels.hpp"

namespace cfb {

Eigen::MatrixXd FpcBasis::scores(const TreatmentSet& set) const {
  const auto& items = set.dense();
  const std::vector<double> w = trapezoid_weights(grid);
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  Eigen::MatrixXd out(static_cast<Eigen::Index>(items.size()), retained);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto g = items[i].grid();
    if (!std::equal(g.begin(), g.end(), grid.begin(), grid.end())) {
      throw GridMismatchError("FPC scores: treatment " + std::to_string(i) +
                              " is not on the basis grid");
    }
    const Eigen::Map<const Eigen::VectorXd> a(items[i].values().data(),
                                              static_cast<Eigen::Index>(g.size()));
    const Eigen::VectorXd centered = (a - mean).cwiseProduct(wv);
    out.row(static_cast<Eigen::Index>(i)) = (eigenfunctions.transpose() * centered).transpose();
  }
  return out;
}

Eigen::VectorXd FteModel::predict(const TreatmentSet& treatments) const {
  if (treatments.empty()) return Eigen::VectorXd(0);
  if (const auto* k = std::get_if<KernelExpansion>(&body)) {
    if (treatments.is_dense() != k->centers.is_dense()) {
      throw RepresentationError(std::string("model was fitted on ") +
                                (k->centers.is_dense() ? "dense trajectories" : "sample sets") +
                                " but prediction input holds " +
                                (treatments.is_dense() ? "dense trajectories" : "sample sets"));
    }
    return cross_gram_treatment(treatments, k->centers, k->kernel) * k->coef;
  }
  const auto& lin = std::get<LinearFpcModel>(body);
  if (!treatments.is_dense()) {
    throw RepresentationError("FPC baseline model requires dense trajectories");
  }
  const Eigen::MatrixXd s = lin.basis.scores(treatments);
  return (s * lin.beta.tail(lin.beta.size() - 1)).array() + lin.beta(0);
}

}  // namespace cfb
