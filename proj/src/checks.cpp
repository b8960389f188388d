#include "cfb/checks.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "cfb/balance.hpp"
#include "cfb/estimators.hpp"
#include "cfb/gram.hpp"
#include "cfb/krr.hpp"
#include "cfb/simd/kernels.hpp"
#include "cfb/simulate.hpp"

namespace cfb::checks {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

CheckResult finish(std::string name, double worst, double tol, std::string detail) {
  CheckResult r;
  r.name = std::move(name);
  r.worst = worst;
  r.tol = tol;
  r.pass = std::isfinite(worst) && worst <= tol;
  r.detail = std::move(detail);
  return r;
}

// A small simulation replicate, with kernels resolved by the median heuristic.
PreparedData small_dataset(int n, std::uint64_t seed, int setting = 1) {
  SimConfig cfg;
  cfg.setting = setting;
  cfg.n = n;
  cfg.grid_points = 51;
  cfg.seed = seed;
  Dataset d = gen_replicate(cfg, 0);
  return prepare_data(std::move(d.treatments), std::move(d.X), std::move(d.Y), EstimatorConfig{});
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

BalanceProblem random_problem(const PreparedData& pd, std::mt19937_64& rng, const BalanceFactor& f) {
  const double scale = pd.grams.G_A.trace() / static_cast<double>(pd.n());
  const double lambda = log_uniform(rng, 1e-4, 1e-1) * scale;
  const double eta = log_uniform(rng, 1e-3, 1.0);
  return build_problem(pd.grams, f, lambda, eta);
}

Eigen::VectorXd random_weights(Eigen::Index n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = u(rng);
  return w;
}

double normal_pdf(double x, double mean, double var) {
  const double z = x - mean;
  return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

}  // namespace

CheckResult representer_supremum(int instances, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_n(4, 10);
  double worst = 0.0;
  int accepted = 0;
  int skipped = 0;
  for (std::uint64_t attempt = 0; accepted < instances && attempt < 50ull * instances; ++attempt) {
    const int n = pick_n(rng);
    const PreparedData pd = small_dataset(n, seed * 1000 + attempt);
    const auto& A = pd.treatments.dense();

    // Kernel values straight from the scalar kernels.
    Eigen::MatrixXd KA(n, n), KX(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        KA(i, j) = kernel_eval(pd.kernel_a, l2_distance_sq(A[static_cast<std::size_t>(i)],
                                                           A[static_cast<std::size_t>(j)]));
        KX(i, j) = kernel_eval(pd.kernel_x, (pd.X.row(i) - pd.X.row(j)).squaredNorm());
      }
    }
    const Eigen::VectorXd mu = KX.rowwise().mean();  // mean embedding of X evaluated at X_i
    const double mu_norm2 = KX.mean();

    // Representers: xi_j = K_A(., A_j) K_X(., X_j), xi_{n+j} = K_A(., A_j) mu_X.
    // F1 evaluates them at (A_i, X_i), F2 averages them over X at A_i.
    Eigen::MatrixXd F1(n, 2 * n), F2(n, 2 * n), Gram(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        F1(i, j) = KA(i, j) * KX(i, j);
        F1(i, n + j) = KA(i, j) * mu(i);
        F2(i, j) = KA(i, j) * mu(j);
        F2(i, n + j) = KA(i, j) * mu_norm2;
        Gram(i, j) = KA(i, j) * KX(i, j);
        Gram(i, n + j) = KA(i, j) * mu(i);
        Gram(n + i, j) = KA(i, j) * mu(j);
        Gram(n + i, n + j) = KA(i, j) * mu_norm2;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gram_eig(Gram, Eigen::EigenvaluesOnly);
    const double cond = gram_eig.eigenvalues().maxCoeff() / gram_eig.eigenvalues().minCoeff();
    if (!(cond > 0.0) || cond > 1e8) {
      ++skipped;
      continue;
    }

    std::uniform_real_distribution<double> u(1e-4, 1e-1);
    const double lambda = u(rng) * KA.trace() / n;
    const Eigen::MatrixXd H =
        KA * (KA + n * lambda * Eigen::MatrixXd::Identity(n, n)).partialPivLu().inverse();
    const Eigen::VectorXd w = random_weights(n, rng, 0.0, 3.0);

    const Eigen::MatrixXd B = H * w.asDiagonal() * F1 - F2;
    const Eigen::MatrixXd BtB = B.transpose() * B / static_cast<double>(n);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(BtB, Gram, Eigen::EigenvaluesOnly);
    const double brute = ges.eigenvalues().maxCoeff();

    const BalanceFactor f = psd_factor(assemble_gf(pd.grams));
    const BalanceProblem p = build_problem(pd.grams, f, lambda, 0.0);
    const double closed = balance_objective(p, w).Q_part;
    worst = std::max(worst, std::abs(closed - brute) / std::abs(brute));
    ++accepted;
  }
  if (accepted < instances) worst = std::numeric_limits<double>::infinity();
  return finish("representer supremum", worst, tol,
                std::to_string(accepted) + " instances, " + std::to_string(skipped) +
                    " skipped as ill-conditioned, worst relative error " + fmt(worst));
}

CheckResult convexity(int problems, int triples, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_n(8, 16);
  std::uniform_real_distribution<double> ut(0.0, 1.0);
  double worst = 0.0;  // largest violation / (1 + |f|), negative values clipped to 0
  int count = 0;
  for (int k = 0; k < problems; ++k) {
    const PreparedData pd = small_dataset(pick_n(rng), seed * 1000 + static_cast<std::uint64_t>(k));
    const BalanceFactor f = psd_factor(assemble_gf(pd.grams));
    const BalanceProblem p = random_problem(pd, rng, f);
    const int per = triples / problems + (k < triples % problems ? 1 : 0);
    for (int t = 0; t < per; ++t) {
      const Eigen::VectorXd w1 = random_weights(p.n(), rng, 0.0, 3.0);
      const Eigen::VectorXd w2 = random_weights(p.n(), rng, 0.0, 3.0);
      const double s = ut(rng);
      const double fm = balance_objective(p, s * w1 + (1.0 - s) * w2).value;
      const double chord = s * balance_objective(p, w1).value + (1.0 - s) * balance_objective(p, w2).value;
      worst = std::max(worst, (fm - chord) / (1.0 + std::abs(fm)));
      ++count;
    }
  }
  return finish("convexity", worst, tol,
                std::to_string(count) + " triples over " + std::to_string(problems) +
                    " problems, worst scaled violation " + fmt(worst));
}

CheckResult gradient(int points, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_n(6, 12);
  double worst = 0.0;
  int done = 0;
  int skipped = 0;
  for (std::uint64_t k = 0; done < points && k < 20ull * points; ++k) {
    const PreparedData pd = small_dataset(pick_n(rng), seed * 1000 + k);
    const BalanceFactor f = psd_factor(assemble_gf(pd.grams));
    const BalanceProblem p = random_problem(pd, rng, f);
    const Eigen::VectorXd w = random_weights(p.n(), rng, 0.3, 2.5);

    const Eigen::VectorXd s = imbalance_matrix(p, w).jacobiSvd().singularValues();
    if (s.size() > 1 && (s(0) - s(1)) / s(0) < 1e-4) {
      ++skipped;
      continue;
    }
    const Eigen::VectorXd g = balance_gradient(p, w);
    Eigen::VectorXd fd(p.n());
    for (Eigen::Index j = 0; j < p.n(); ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(w(j)));
      Eigen::VectorXd wp = w, wm = w;
      wp(j) += h;
      wm(j) -= h;
      fd(j) = (balance_objective(p, wp).value - balance_objective(p, wm).value) / (2.0 * h);
    }
    worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff() / g.cwiseAbs().maxCoeff());
    ++done;
  }
  if (done < points) worst = std::numeric_limits<double>::infinity();
  return finish("gradient", worst, tol,
                std::to_string(done) + " points (" + std::to_string(skipped) +
                    " near-degenerate draws skipped), worst relative error " + fmt(worst));
}

CheckResult loocv(int instances, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_n(5, 12);
  std::normal_distribution<double> z01(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const int n = pick_n(rng);
    Eigen::MatrixXd P(n, 2);
    for (int i = 0; i < n; ++i) P.row(i) << z01(rng), z01(rng);
    Eigen::MatrixXd G(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) G(i, j) = std::exp(-(P.row(i) - P.row(j)).squaredNorm());
    }
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = std::sin(P(i, 0)) + 0.3 * z01(rng);

    for (double lambda : relative_lambda_grid(G, 1e-6, 1.0, 10)) {
      // Refit without subject i under the same penalty n * lambda.
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        std::vector<int> keep;
        for (int j = 0; j < n; ++j) {
          if (j != i) keep.push_back(j);
        }
        const int m = n - 1;
        Eigen::MatrixXd Gk(m, m);
        Eigen::VectorXd zk(m), gi(m);
        for (int a = 0; a < m; ++a) {
          zk(a) = z(keep[static_cast<std::size_t>(a)]);
          gi(a) = G(i, keep[static_cast<std::size_t>(a)]);
          for (int b = 0; b < m; ++b) Gk(a, b) = G(keep[static_cast<std::size_t>(a)], keep[static_cast<std::size_t>(b)]);
        }
        Gk.diagonal().array() += n * lambda;
        const Eigen::VectorXd alpha = Gk.fullPivLu().solve(zk);
        const double r = z(i) - gi.dot(alpha);
        sum += r * r;
      }
      const double refit = sum / n;
      const double closed = loocv_error(G, z, lambda);
      worst = std::max(worst, std::abs(closed - refit) / refit);
    }
  }
  return finish("loocv", worst, tol,
                std::to_string(instances) + " instances x 10 lambdas, worst relative error " + fmt(worst));
}

CheckResult oracle_weight_identity(int samples, std::uint64_t seed, double tol) {
  // Proposal: X ~ N(0, I), A_k ~ N(0, 2 (1 + c_k^2)) independently. Its tails
  // dominate the target, so w* f rho / q has finite variance.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z01(0.0, 1.0);
  double s_one = 0.0, s_sq = 0.0, s_cos = 0.0;
  double a[4], x[4];
  for (int i = 0; i < samples; ++i) {
    double ratio = 1.0;  // rho_X(x) rho_{A|X}(a | x) / q(a, x)
    for (int k = 0; k < 4; ++k) {
      const double c = kDesignSlopes[static_cast<std::size_t>(k)];
      const double vq = 2.0 * (1.0 + c * c);
      x[k] = z01(rng);
      a[k] = std::sqrt(vq) * z01(rng);
      ratio *= normal_pdf(a[k], c * x[k], 1.0) / normal_pdf(a[k], 0.0, vq);
    }
    const double v = oracle_weight({a, 4}, {x, 4}) * ratio;
    s_one += v;
    s_sq += v * x[0] * x[0];
    s_cos += v * (1.0 + std::cos(x[2]));
  }
  const double m = samples;
  const double e_one = std::abs(s_one / m - 1.0);
  const double e_sq = std::abs(s_sq / m - 1.0);
  const double truth_cos = 1.0 + std::exp(-0.5);
  const double e_cos = std::abs(s_cos / m - truth_cos) / truth_cos;
  const double worst = std::max({e_one, e_sq, e_cos});
  return finish("oracle weight identity", worst, tol,
                std::to_string(samples) + " draws; relative errors f=1: " + fmt(e_one) +
                    ", f=x1^2: " + fmt(e_sq) + ", f=1+cos(x3): " + fmt(e_cos));
}

CheckResult psd_reconstruction(int datasets, std::uint64_t seed, double tol_rel) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_n(10, 40);
  std::uniform_int_distribution<int> pick_setting(1, 3);
  double worst = 0.0;  // error / bound
  for (int k = 0; k < datasets; ++k) {
    const PreparedData pd =
        small_dataset(pick_n(rng), seed * 1000 + static_cast<std::uint64_t>(k), pick_setting(rng));
    const Eigen::MatrixXd GF = assemble_gf(pd.grams);
    const BalanceFactor f = psd_factor(GF, tol_rel);
    const double err = (f.M * f.M.transpose() - GF).cwiseAbs().maxCoeff();
    const double bound = std::max(10.0 * tol_rel * f.lambda_max, 1e-10);
    worst = std::max(worst, err / bound);
  }
  return finish("psd reconstruction", worst, 1.0,
                std::to_string(datasets) + " datasets, worst error/bound " + fmt(worst));
}

CheckResult simd_equivalence(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z01(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const simd::Isa original = simd::active_isa();
  double worst = 0.0;
  std::string isas;
  for (std::size_t len = 0; len <= 133; ++len) {
    std::vector<double> a(len), b(len), w(len);
    for (std::size_t i = 0; i < len; ++i) {
      a[i] = z01(rng);
      b[i] = z01(rng);
      w[i] = u(rng);
    }
    const double r1 = simd::scalar::weighted_sq_diff(a.data(), b.data(), w.data(), len);
    const double r2 = simd::scalar::weighted_dot(a.data(), b.data(), w.data(), len);
    const double r3 = simd::scalar::sq_euclidean(a.data(), b.data(), len);
    for (simd::Isa isa : simd::available_isas()) {
      simd::force_isa(isa);
      const double s1 = simd::weighted_sq_diff(a, b, w);
      const double s2 = simd::weighted_dot(a, b, w);
      const double s3 = simd::sq_euclidean(a, b);
      const double scale = 1.0 + std::abs(r1) + std::abs(r2) + std::abs(r3);
      worst = std::max({worst, std::abs(s1 - r1) / scale, std::abs(s2 - r2) / scale,
                        std::abs(s3 - r3) / scale});
    }
  }
  simd::force_isa(original);
  for (simd::Isa isa : simd::available_isas()) {
    if (!isas.empty()) isas += ", ";
    isas += simd::isa_name(isa);
  }
  return finish("simd equivalence", worst, 1e-13, "variants " + isas + ", worst scaled difference " + fmt(worst));
}

std::vector<CheckResult> fast_suite(std::uint64_t seed) {
  return {simd_equivalence(seed),
          loocv(20, seed + 1),
          psd_reconstruction(20, seed + 2),
          representer_supremum(20, seed + 3),
          gradient(100, seed + 4),
          convexity(10, 1000, seed + 5),
          oracle_weight_identity(100000, seed + 6)};
}

}  // namespace cfb::checks
