#pragma once

// Projected limited-memory BFGS for  min f(x)  s.t.  lower <= x <= upper.
//
// Each iteration fixes the variables held at a bound by the gradient, builds
// a two-loop L-BFGS direction on the free variables and runs a backtracking
// Armijo search along the projected path x(a) = P(x + a d). Stopping rules
// mirror L-BFGS-B: projected-gradient infinity norm below gtol * (1 + |f|),
// or a relative decrease of f below ftol.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace cfb {

struct BoxLbfgsOptions {
  int max_iter = 500;
  double gtol = 1e-6;
  double ftol = 2.220446049250313e-9;  // L-BFGS-B factr = 1e7
  int memory = 10;
  int max_linesearch = 40;
  double armijo = 1e-4;
};

struct BoxLbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double pg_norm = 0.0;  // infinity norm of the projected gradient at x
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

namespace detail {

inline Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

inline double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                      const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return (project(x - g, lo, hi) - x).lpNorm<Eigen::Infinity>();
}

}  // namespace detail

/// `fg(x, grad)` returns f(x) and writes the gradient into `grad`.
template <class FG>
BoxLbfgsResult minimize_box(FG&& fg, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const BoxLbfgsOptions& opts = {}) {
  const Eigen::Index n = x0.size();
  BoxLbfgsResult res;
  Eigen::VectorXd x = detail::project(x0, lower, upper);
  Eigen::VectorXd g(n);
  double f = fg(x, g);
  res.evaluations = 1;

  std::deque<Eigen::VectorXd> S;
  std::deque<Eigen::VectorXd> Y;
  std::deque<double> rho;

  for (int it = 0;; ++it) {
    res.iterations = it;
    const double pg = detail::projected_gradient_norm(x, g, lower, upper);
    if (pg <= opts.gtol * (1.0 + std::abs(f))) {
      res.converged = true;
      res.message = "projected gradient below tolerance";
      break;
    }
    if (it >= opts.max_iter) {
      res.message = "iteration limit reached";
      break;
    }

    // Variables pinned at a bound with the gradient pushing outward stay put.
    Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lo = x(i) <= lower(i) && g(i) > 0.0;
      const bool at_hi = x(i) >= upper(i) && g(i) < 0.0;
      free(i) = !(at_lo || at_hi);
    }
    auto mask = [&](Eigen::VectorXd v) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!free(i)) v(i) = 0.0;
      }
      return v;
    };

    Eigen::VectorXd q = mask(g);
    const std::size_t m = S.size();
    std::vector<double> a(m);
    for (std::size_t k = m; k-- > 0;) {
      a[k] = rho[k] * mask(S[k]).dot(q);
      q -= a[k] * mask(Y[k]);
    }
    if (m > 0) {
      const Eigen::VectorXd s = mask(S.back());
      const Eigen::VectorXd y = mask(Y.back());
      const double yy = y.squaredNorm();
      if (yy > 0.0 && s.dot(y) > 0.0) q *= s.dot(y) / yy;
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double b = rho[k] * mask(Y[k]).dot(q);
      q += (a[k] - b) * mask(S[k]);
    }
    Eigen::VectorXd d = -mask(q);
    if (!(d.dot(g) < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      d = -mask(g);
    }
    if (d.squaredNorm() == 0.0) {
      res.converged = true;
      res.message = "no feasible descent direction";
      break;
    }

    double step = 1.0;
    if (S.empty()) step = std::min(1.0, 1.0 / std::max(d.lpNorm<Eigen::Infinity>(), 1e-300));
    Eigen::VectorXd x_new(n);
    Eigen::VectorXd g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < opts.max_linesearch; ++ls) {
      x_new = detail::project(x + step * d, lower, upper);
      f_new = fg(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= f + opts.armijo * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!S.empty()) {
        // Stale curvature pairs; retry once from steepest descent.
        S.clear();
        Y.clear();
        rho.clear();
        continue;
      }
      res.message = "line search failed";
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > std::numeric_limits<double>::epsilon() * y.squaredNorm()) {
      if (static_cast<int>(S.size()) == opts.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
    }
    const double decrease = f - f_new;
    x = x_new;
    g = g_new;
    const double f_old = f;
    f = f_new;
    if (decrease <= opts.ftol * std::max({std::abs(f_old), std::abs(f_new), 1.0})) {
      res.iterations = it + 1;
      res.converged = true;
      res.message = "relative reduction of f below ftol";
      break;
    }
  }
  res.x = x;
  res.f = f;
  res.pg_norm = detail::projected_gradient_norm(x, g, lower, upper);
  return res;
}

}  // namespace cfb
