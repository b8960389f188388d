#include "cfb/simulate.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "cfb/error.hpp"
#include "cfb/io.hpp"
#include "cfb/tuning.hpp"

namespace cfb {
namespace {

constexpr std::array<std::string_view, 5> kEstimators{"nw", "fpc-baseline", "cfb", "reg", "oracle"};

double nonlinear_effect(double a1) { return 0.5 * a1 * a1 + 4.0 * std::sin(a1); }

// Child stream `stream` of replicate `r` under the root seed.
std::mt19937_64 make_stream(std::uint64_t root, std::uint64_t r, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32),
                    static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

TreatmentSet trajectories(const Eigen::MatrixXd& coefs, const std::vector<double>& grid) {
  std::vector<DenseTrajectory> items;
  items.reserve(static_cast<std::size_t>(coefs.rows()));
  for (Eigen::Index i = 0; i < coefs.rows(); ++i) {
    const Eigen::RowVectorXd row = coefs.row(i);
    items.push_back(fourier_trajectory({row.data(), 4}, grid));
  }
  return TreatmentSet(std::move(items));
}

void summarize(EstimatorSummary& s) {
  auto stats = [](const std::vector<double>& v, double& mean, double& se) {
    double sum = 0.0;
    int k = 0;
    for (double x : v) {
      if (std::isfinite(x)) {
        sum += x;
        ++k;
      }
    }
    mean = k > 0 ? sum / k : std::numeric_limits<double>::quiet_NaN();
    double ss = 0.0;
    for (double x : v) {
      if (std::isfinite(x)) ss += (x - mean) * (x - mean);
    }
    se = k > 1 ? std::sqrt(ss / (k - 1)) / std::sqrt(static_cast<double>(k))
               : std::numeric_limits<double>::quiet_NaN();
  };
  stats(s.empirical, s.empirical_mean, s.empirical_se);
  stats(s.oos, s.oos_mean, s.oos_se);
}

struct ReplicateResult {
  std::map<std::string, std::pair<double, double>> mse;  // empirical, oos
  std::map<std::string, std::string> errors;
};

ReplicateResult run_replicate(const SimConfig& cfg, std::uint64_t r) {
  ReplicateResult out;
  const Dataset data = gen_replicate(cfg, r);
  const EvalPoints eval = gen_eval_points(cfg, r);

  auto wants = [&](std::string_view name) {
    return std::find(cfg.estimators.begin(), cfg.estimators.end(), name) != cfg.estimators.end();
  };
  auto record = [&](const std::string& name, auto&& fit) {
    try {
      const FteModel m = fit();
      out.mse[name] = {empirical_mse(m, data), oos_mse(m, eval)};
    } catch (const std::exception& e) {
      out.errors[name] = e.what();
    }
  };

  std::optional<PreparedData> prepared;
  try {
    prepared = prepare_data(data.treatments, data.X, data.Y, cfg.estimator);
  } catch (const std::exception& e) {
    for (const auto& name : cfg.estimators) out.errors[name] = std::string("prepare: ") + e.what();
    return out;
  }
  const PreparedData& pd = *prepared;

  if (wants("nw")) record("nw", [&] { return nw_fit(pd, cfg.estimator); });

  std::optional<FpcBaselineFit> baseline;
  std::string baseline_error;
  if (wants("fpc-baseline") || wants("cfb")) {
    try {
      baseline = fpc_baseline(pd.treatments, pd.X, pd.Y, cfg.estimator.fpc_variance);
    } catch (const std::exception& e) {
      baseline_error = e.what();
    }
  }
  if (wants("fpc-baseline")) {
    if (baseline) {
      record("fpc-baseline", [&] { return baseline->model; });
    } else {
      out.errors["fpc-baseline"] = baseline_error;
    }
  }

  std::optional<RegFit> reg;
  std::string reg_error;
  if (wants("reg") || wants("cfb")) {
    try {
      reg = reg_fit(pd, cfg.estimator);
    } catch (const std::exception& e) {
      reg_error = e.what();
    }
  }
  if (wants("reg")) {
    if (reg) {
      record("reg", [&] { return reg->model; });
    } else {
      out.errors["reg"] = reg_error;
    }
  }

  if (wants("cfb")) {
    if (reg) {
      CfbShared shared;
      shared.reg = &*reg;
      const Eigen::VectorXd unit = Eigen::VectorXd::Ones(pd.n());
      shared.baseline_weights = baseline ? &baseline->weights : &unit;
      record("cfb", [&] { return fit_cfb(pd, cfg.estimator, shared); });
    } else {
      out.errors["cfb"] = "reg: " + reg_error;
    }
  }

  if (wants("oracle")) {
    record("oracle", [&] {
      Eigen::VectorXd w(pd.n());
      for (Eigen::Index i = 0; i < pd.n(); ++i) {
        const Eigen::RowVectorXd a = data.coefs.row(i);
        const Eigen::RowVectorXd x = data.X.row(i);
        w(i) = oracle_weight({a.data(), 4}, {x.data(), 4});
      }
      return weighted_fit(pd, w, cfg.estimator, "oracle");
    });
  }
  return out;
}

}  // namespace

void SimConfig::validate() const {
  if (setting < 1 || setting > 3) {
    throw InvalidArgument("setting must be 1, 2 or 3, got " + std::to_string(setting));
  }
  if (n < 10) throw InvalidArgument("n must be at least 10");
  if (n_eval < 1) throw InvalidArgument("n_eval must be at least 1");
  if (replicates < 1) throw InvalidArgument("replicates must be at least 1");
  if (grid_points < 2) throw InvalidArgument("grid must have at least 2 points");
  if (threads < 0) throw InvalidArgument("threads must be nonnegative");
  if (estimators.empty()) throw InvalidArgument("no estimators selected");
  for (const auto& e : estimators) {
    if (std::find(kEstimators.begin(), kEstimators.end(), e) == kEstimators.end()) {
      throw InvalidArgument("unknown estimator '" + e + "'");
    }
  }
}

std::span<const std::string_view> known_estimators() { return kEstimators; }

double psi(std::span<const double> x) {
  return x[1] * x[0] * x[0] + x[3] * x[3] * std::sin(2.0 * x[2]);
}

double true_tau(int setting, std::span<const double> a) {
  switch (setting) {
    case 1:
      return 2.0 * a[0] + 0.5 * a[1];
    case 2:
    case 3:
      return nonlinear_effect(a[0]);
    default:
      throw InvalidArgument("unknown setting " + std::to_string(setting));
  }
}

double outcome_mean(int setting, std::span<const double> a, std::span<const double> x) {
  const double p = psi(x);
  switch (setting) {
    case 1:
      return 15.0 * p + true_tau(1, a);
    case 2:
      return 10.0 * p + true_tau(2, a);
    case 3:
      return (1.0 + 2.0 * p / 3.0) * true_tau(3, a);
    default:
      throw InvalidArgument("unknown setting " + std::to_string(setting));
  }
}

double setting1_mu(double t) {
  const double s2 = std::numbers::sqrt2;
  const double w = 2.0 * std::numbers::pi * t;
  return 2.0 * s2 * std::sin(w) + s2 * std::cos(w) + 0.5 * s2 * std::sin(2.0 * w) +
         0.5 * s2 * std::cos(2.0 * w);
}

std::vector<double> uniform_grid(int points) {
  if (points < 2) throw InvalidArgument("uniform_grid: need at least 2 points");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int j = 0; j < points; ++j) g[static_cast<std::size_t>(j)] = static_cast<double>(j) / (points - 1);
  return g;
}

DenseTrajectory fourier_trajectory(std::span<const double> a, std::span<const double> grid) {
  std::vector<double> values(grid.size(), 0.0);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double v = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      v += a[k] * std::numbers::sqrt2 *
           std::sin(2.0 * std::numbers::pi * static_cast<double>(k + 1) * grid[j]);
    }
    values[j] = v;
  }
  return DenseTrajectory(std::vector<double>(grid.begin(), grid.end()), std::move(values));
}

Dataset gen_replicate(const SimConfig& cfg, std::uint64_t replicate) {
  std::mt19937_64 rng = make_stream(cfg.seed, replicate, 0);
  std::normal_distribution<double> z(0.0, 1.0);
  Dataset d;
  const Eigen::Index n = cfg.n;
  d.X.resize(n, 4);
  d.coefs.resize(n, 4);
  d.Y.resize(n);
  d.tau.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < 4; ++k) d.X(i, k) = z(rng);
    for (int k = 0; k < 4; ++k) d.coefs(i, k) = kDesignSlopes[static_cast<std::size_t>(k)] * d.X(i, k) + z(rng);
    const Eigen::RowVectorXd a = d.coefs.row(i);
    const Eigen::RowVectorXd x = d.X.row(i);
    d.tau(i) = true_tau(cfg.setting, {a.data(), 4});
    d.Y(i) = outcome_mean(cfg.setting, {a.data(), 4}, {x.data(), 4}) + z(rng);
  }
  d.treatments = trajectories(d.coefs, uniform_grid(cfg.grid_points));
  return d;
}

EvalPoints gen_eval_points(const SimConfig& cfg, std::uint64_t replicate) {
  std::mt19937_64 rng = make_stream(cfg.seed, replicate, 1);
  std::normal_distribution<double> z(0.0, 1.0);
  EvalPoints e;
  const Eigen::Index n = cfg.n_eval;
  e.coefs.resize(n, 4);
  e.tau.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < 4; ++k) {
      const double c = kDesignSlopes[static_cast<std::size_t>(k)];
      e.coefs(i, k) = std::sqrt(1.0 + c * c) * z(rng);
    }
    const Eigen::RowVectorXd a = e.coefs.row(i);
    e.tau(i) = true_tau(cfg.setting, {a.data(), 4});
  }
  e.treatments = trajectories(e.coefs, uniform_grid(cfg.grid_points));
  return e;
}

double empirical_mse(const FteModel& model, const Dataset& data) {
  const Eigen::VectorXd pred = model.predict(data.treatments);
  return (pred - data.tau).squaredNorm() / static_cast<double>(data.tau.size());
}

double oos_mse(const FteModel& model, const EvalPoints& points) {
  const Eigen::VectorXd pred = model.predict(points.treatments);
  return (pred - points.tau).squaredNorm() / static_cast<double>(points.tau.size());
}

SimReport run_study(const SimConfig& cfg) {
  cfg.validate();
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  std::vector<ReplicateResult> results(reps);
  unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(reps));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) {
      results[r] = run_replicate(cfg, r);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }

  SimReport report;
  report.config = cfg;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& name : cfg.estimators) {
    EstimatorSummary s;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto it = results[r].mse.find(name);
      if (it != results[r].mse.end()) {
        s.empirical.push_back(it->second.first);
        s.oos.push_back(it->second.second);
      } else {
        s.empirical.push_back(nan);
        s.oos.push_back(nan);
        ++s.failed;
        const auto err = results[r].errors.find(name);
        s.failures.push_back("replicate " + std::to_string(r) + ": " +
                             (err != results[r].errors.end() ? err->second : "unknown failure"));
      }
    }
    summarize(s);
    report.estimators[name] = std::move(s);
  }
  return report;
}

std::string report_csv(const SimReport& report) {
  std::ostringstream os;
  os << "setting,estimator,metric,replicate,value\n";
  for (const auto& name : report.config.estimators) {
    const auto& s = report.estimators.at(name);
    for (const auto& [metric, values] :
         {std::pair{"empirical_mse", &s.empirical}, std::pair{"oos_mse", &s.oos}}) {
      for (std::size_t r = 0; r < values->size(); ++r) {
        os << report.config.setting << ',' << name << ',' << metric << ',' << r << ','
           << format_double((*values)[r]) << '\n';
      }
    }
  }
  return os.str();
}

std::string report_markdown(const SimReport& report) {
  const SimConfig& c = report.config;
  std::ostringstream os;
  char buf[128];
  os << "# Simulation setting " << c.setting << "\n\n";
  os << "n = " << c.n << ", replicates = " << c.replicates << ", evaluation points = " << c.n_eval
     << ", grid = " << c.grid_points << ", seed = " << c.seed << "\n\n";
  os << "Values are mean (standard error) over replicates.\n\n";
  os << "| estimator | empirical MSE | out-of-sample MSE | failed |\n";
  os << "|---|---|---|---|\n";
  for (const auto& name : c.estimators) {
    const auto& s = report.estimators.at(name);
    const std::string label = name == "fpc-baseline" ? "fpc-baseline (FCBPS-style)" : name;
    os << "| " << label << " | ";
    std::snprintf(buf, sizeof buf, "%.2f (%.2f)", s.empirical_mean, s.empirical_se);
    os << buf << " | ";
    std::snprintf(buf, sizeof buf, "%.2f (%.2f)", s.oos_mean, s.oos_se);
    os << buf << " | " << s.failed << " |\n";
  }
  return os.str();
}

}  // namespace cfb
