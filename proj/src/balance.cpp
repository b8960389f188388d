#include "cfb/balance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cfb/error.hpp"
#include "cfb/krr.hpp"

namespace cfb {
namespace {

struct Evaluation {
  BalanceValue value;
  Eigen::VectorXd grad;
  TopSingular top;
};

Evaluation evaluate(const BalanceProblem& p, const Eigen::VectorXd& w, const Eigen::VectorXd* warm,
                    bool with_grad) {
  if (w.size() != p.n()) {
    throw InvalidArgument("balance: weight vector has length " + std::to_string(w.size()) +
                          ", expected " + std::to_string(p.n()));
  }
  if (!w.allFinite()) throw InvalidArgument("balance: weights must be finite");
  const double n = static_cast<double>(p.n());
  const Eigen::MatrixXd D = imbalance_matrix(p, w);
  Evaluation e;
  e.top = top_singular(D, warm);
  e.value.Q_part = e.top.sigma * e.top.sigma / n;
  e.value.R_part = (p.r.array() * w.array().square()).sum();
  e.value.value = e.value.Q_part + p.eta * e.value.R_part;
  if (with_grad) {
    const Eigen::VectorXd hu = p.H.transpose() * e.top.u;
    const Eigen::VectorXd mv = p.M1 * e.top.v;
    e.grad = (2.0 * e.top.sigma / n) * hu.cwiseProduct(mv) +
             (2.0 * p.eta) * p.r.cwiseProduct(w);
  }
  return e;
}

void check_problem_inputs(const Eigen::MatrixXd& H, const BalanceFactor& f, double lambda,
                          double eta, double upper) {
  if (H.rows() != H.cols()) throw InvalidArgument("build_problem: H must be square");
  if (f.M1.rows() != H.rows() || f.M2.rows() != H.rows() || f.M1.cols() != f.M2.cols()) {
    throw InvalidArgument("build_problem: factor blocks do not match n = " +
                          std::to_string(H.rows()));
  }
  if (!(lambda > 0.0)) throw InvalidArgument("build_problem: lambda must be positive");
  if (!(eta >= 0.0)) throw InvalidArgument("build_problem: eta must be nonnegative");
  if (!(upper > 0.0)) throw InvalidArgument("build_problem: box bound must be positive");
}

}  // namespace

Eigen::VectorXd r_weights(const Eigen::MatrixXd& H) {
  return H.array().square().colwise().sum().transpose() / static_cast<double>(H.rows());
}

BalanceProblem build_problem(const Eigen::MatrixXd& H, const BalanceFactor& f, double lambda,
                             double eta, double upper) {
  check_problem_inputs(H, f, lambda, eta, upper);
  BalanceProblem p;
  p.H = H;
  p.M1 = f.M1;
  p.M2 = f.M2;
  p.r = r_weights(H);
  p.lambda = lambda;
  p.eta = eta;
  p.upper = upper;
  return p;
}

BalanceProblem build_problem(const GramSet& g, const BalanceFactor& f, double lambda, double eta,
                             double upper) {
  if (g.n() != f.n()) throw InvalidArgument("build_problem: GramSet and factor disagree on n");
  return build_problem(hat_matrix(g.G_A, lambda), f, lambda, eta, upper);
}

Eigen::MatrixXd imbalance_matrix(const BalanceProblem& p, const Eigen::VectorXd& w) {
  return p.H * (w.asDiagonal() * p.M1) - p.M2;
}

BalanceValue balance_objective(const BalanceProblem& p, const Eigen::VectorXd& w) {
  return evaluate(p, w, nullptr, false).value;
}

Eigen::VectorXd balance_gradient(const BalanceProblem& p, const Eigen::VectorXd& w) {
  return evaluate(p, w, nullptr, true).grad;
}

WeightSolution solve_weights(const BalanceProblem& p, const Eigen::VectorXd& init,
                             const SolverOptions& opts) {
  const Eigen::Index n = p.n();
  if (init.size() != n) throw InvalidArgument("solve_weights: init has wrong length");
  const Eigen::VectorXd lower = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd upper = Eigen::VectorXd::Constant(n, p.upper);
  const Eigen::VectorXd x0 = init.cwiseMax(lower).cwiseMin(upper);

  const Evaluation start = evaluate(p, x0, nullptr, false);
  const double scale = start.value.value > 0.0 ? start.value.value : 1.0;
  Eigen::VectorXd warm = start.top.u.size() <= start.top.v.size() ? start.top.u : start.top.v;

  auto fg = [&](const Eigen::VectorXd& w, Eigen::VectorXd& grad) {
    Evaluation e = evaluate(p, w, &warm, true);
    warm = e.top.u.size() <= e.top.v.size() ? e.top.u : e.top.v;
    grad = e.grad / scale;
    return e.value.value / scale;
  };

  BoxLbfgsOptions lopts;
  lopts.max_iter = opts.max_iter;
  lopts.gtol = opts.gtol;
  lopts.ftol = opts.ftol;
  lopts.memory = opts.memory;
  BoxLbfgsResult res = minimize_box(fg, x0, lower, upper, lopts);

  WeightSolution sol;
  sol.init_objective = start.value.value;
  // Never return something worse than the starting point.
  const Evaluation fin = evaluate(p, res.x, nullptr, false);
  if (fin.value.value <= start.value.value) {
    sol.w_hat = res.x;
    sol.objective = fin.value.value;
    sol.Q_part = fin.value.Q_part;
    sol.R_part = fin.value.R_part;
    sol.top_gap = fin.top.sigma > 0.0 ? (fin.top.sigma - fin.top.sigma2) / fin.top.sigma : 0.0;
  } else {
    sol.w_hat = x0;
    sol.objective = start.value.value;
    sol.Q_part = start.value.Q_part;
    sol.R_part = start.value.R_part;
    sol.top_gap =
        start.top.sigma > 0.0 ? (start.top.sigma - start.top.sigma2) / start.top.sigma : 0.0;
  }
  sol.iterations = res.iterations;
  sol.evaluations = res.evaluations + 2;
  sol.converged = res.converged;
  sol.pg_norm = res.pg_norm;
  sol.degenerate = sol.top_gap < 1e-10;
  sol.message = res.message;
  return sol;
}

}  // namespace cfb
