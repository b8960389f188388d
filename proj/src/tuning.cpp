#include "cfb/tuning.hpp"

#include <cmath>
#include <string>

#include "cfb/error.hpp"
#include "cfb/gram.hpp"

namespace cfb {
namespace {

template <class Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericError& e) {
    throw NumericError(std::string("fit_cfb [") + name + "]: " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string("fit_cfb [") + name + "]: " + e.what());
  } catch (const Error& e) {
    throw Error(std::string("fit_cfb [") + name + "]: " + e.what());
  }
}

}  // namespace

LambdaSearch select_lambda(const Eigen::MatrixXd& G_A, const Eigen::VectorXd& baseline_w,
                           const Eigen::VectorXd& Y, const std::vector<double>& grid) {
  if (baseline_w.size() != Y.size()) throw InvalidArgument("select_lambda: length mismatch");
  if ((baseline_w.array() < 0.0).any()) {
    throw InvalidArgument("select_lambda: baseline weights must be nonnegative");
  }
  return loocv_search(G_A, baseline_w.cwiseProduct(Y), grid);
}

double v_criterion(const BalanceProblem& p, const Eigen::VectorXd& w, const Eigen::VectorXd& Y,
                   const Eigen::VectorXd& m_hat, const Eigen::VectorXd& tau_reg) {
  const Eigen::Index n = p.n();
  if (w.size() != n || Y.size() != n || m_hat.size() != n || tau_reg.size() != n) {
    throw InvalidArgument("v_criterion: all vectors must have length n = " + std::to_string(n));
  }
  const Eigen::VectorXd bias = p.H * w.cwiseProduct(m_hat) - tau_reg;
  const Eigen::VectorXd noise = p.H * w.cwiseProduct(Y - m_hat);
  return (bias.squaredNorm() + noise.squaredNorm()) / static_cast<double>(n);
}

EtaSelection select_eta(const Eigen::MatrixXd& H, const BalanceFactor& factor, double lambda,
                        const std::vector<double>& eta_grid, const Eigen::VectorXd& Y,
                        const Eigen::VectorXd& m_hat, const Eigen::VectorXd& tau_reg,
                        const EstimatorConfig& cfg) {
  if (eta_grid.empty()) throw InvalidArgument("select_eta: empty eta grid");
  EtaSelection sel;
  const Eigen::VectorXd init = Eigen::VectorXd::Ones(H.rows());
  for (double eta : eta_grid) {
    const BalanceProblem p = build_problem(H, factor, lambda, eta, cfg.box_upper);
    EtaCandidate c;
    c.eta = eta;
    WeightSolution sol = solve_weights(p, init, cfg.solver);
    c.objective = sol.objective;
    c.Q_part = sol.Q_part;
    c.R_part = sol.R_part;
    c.iterations = sol.iterations;
    c.converged = sol.converged;
    c.degenerate = sol.degenerate;
    c.message = sol.message;
    c.v_value = v_criterion(p, sol.w_hat, Y, m_hat, tau_reg);
    sel.candidates.push_back(std::move(c));
    sel.solutions.push_back(std::move(sol));
  }

  auto pick = [&](bool converged_only) -> std::ptrdiff_t {
    std::ptrdiff_t best = -1;
    for (std::size_t k = 0; k < sel.candidates.size(); ++k) {
      const EtaCandidate& c = sel.candidates[k];
      if (converged_only && !c.converged) continue;
      if (!std::isfinite(c.v_value)) continue;
      if (best < 0) {
        best = static_cast<std::ptrdiff_t>(k);
        continue;
      }
      const EtaCandidate& b = sel.candidates[static_cast<std::size_t>(best)];
      if (c.v_value < b.v_value || (c.v_value == b.v_value && c.eta > b.eta)) {
        best = static_cast<std::ptrdiff_t>(k);
      }
    }
    return best;
  };
  std::ptrdiff_t best = pick(true);
  if (best < 0) {
    sel.from_converged = false;
    best = pick(false);
  }
  if (best < 0) throw NumericError("select_eta: V is not finite for any eta in the grid");
  sel.chosen = static_cast<std::size_t>(best);
  return sel;
}

FteModel fit_cfb(const PreparedData& data, const EstimatorConfig& cfg, CfbShared shared) {
  const GramSet& g = data.grams;
  const Eigen::Index n = data.n();

  const BalanceFactor factor =
      stage("factor", [&] { return psd_factor(assemble_gf(g), cfg.factor_tol); });

  TuningReport report;
  report.factor_rank = factor.q;
  report.factor_clamped = factor.clamp_count;

  Eigen::VectorXd baseline;
  if (shared.baseline_weights != nullptr) {
    baseline = *shared.baseline_weights;
    report.baseline_source = "fpc-baseline (FCBPS-style)";
  } else {
    try {
      baseline = fpc_baseline(data.treatments, data.X, data.Y, cfg.fpc_variance).weights;
      report.baseline_source = "fpc-baseline (FCBPS-style)";
    } catch (const Error& e) {
      baseline = Eigen::VectorXd::Ones(n);
      report.baseline_source = std::string("unit (fpc-baseline failed: ") + e.what() + ")";
    }
  }
  report.baseline_mean = baseline.mean();
  report.baseline_min = baseline.minCoeff();
  report.baseline_max = baseline.maxCoeff();

  const LambdaSearch ls = stage("lambda", [&] {
    return select_lambda(g.G_A, baseline, data.Y, lambda_grid_for(g.G_A, cfg));
  });
  report.lambda_grid = ls.grid;
  report.lambda_loo = ls.loo_errors;
  report.lambda = ls.lambda;

  RegFit own_reg;
  const RegFit* reg = shared.reg;
  if (reg == nullptr) {
    own_reg = stage("reg", [&] { return reg_fit(data, cfg); });
    reg = &own_reg;
  }
  report.reg_lambda = reg->ridge.lambda;

  const Eigen::MatrixXd H = stage("hat", [&] { return hat_matrix(g.G_A, ls.lambda); });
  const EtaSelection sel = stage("eta", [&] {
    return select_eta(H, factor, ls.lambda, cfg.eta_grid, data.Y, reg->m_hat, reg->tau_reg, cfg);
  });
  report.etas = sel.candidates;
  report.eta = sel.eta();
  report.eta_from_converged = sel.from_converged;

  const Eigen::VectorXd& w = sel.solution().w_hat;
  const RidgeFit fit = stage("final", [&] { return krr_fit(g.G_A, w.cwiseProduct(data.Y), ls.lambda); });

  FteModel m;
  m.estimator = "cfb";
  m.body = KernelExpansion{data.kernel_a, data.treatments, fit.alpha};
  m.lambda = ls.lambda;
  m.weights = w;
  m.fitted = fit.fitted;
  m.tuning = std::move(report);
  return m;
}

}  // namespace cfb
