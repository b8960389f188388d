// cfb: simulation studies, fitting on CSV data, weight export and prediction.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cfb/checks.hpp"
#include "cfb/error.hpp"
#include "cfb/estimators.hpp"
#include "cfb/io.hpp"
#include "cfb/simulate.hpp"
#include "cfb/tuning.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void emit(const std::string& content, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
  } else {
    cfb::write_file(out_path, content);
  }
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  int setting = 1;
  int n = 200;
  int reps = 200;
  int n_eval = 100;
  int grid = 101;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string estimators = "nw,fpc-baseline,cfb,reg";
  std::string out;
  bool export_data = false;
};

std::string dataset_treatments_csv(const cfb::Dataset& d) {
  std::string s = "id,t,value\n";
  const auto& items = d.treatments.dense();
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t k = 0; k < items[i].size(); ++k) {
      s += "s" + std::to_string(i + 1) + "," + cfb::format_double(items[i].grid()[k]) + "," +
           cfb::format_double(items[i].values()[k]) + "\n";
    }
  }
  return s;
}

std::string dataset_covariates_csv(const cfb::Dataset& d) {
  std::string s = "id,x1,x2,x3,x4\n";
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    s += "s" + std::to_string(i + 1);
    for (Eigen::Index k = 0; k < d.X.cols(); ++k) s += "," + cfb::format_double(d.X(i, k));
    s += "\n";
  }
  return s;
}

std::vector<std::string> dataset_ids(const cfb::Dataset& d) {
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < d.Y.size(); ++i) ids.push_back("s" + std::to_string(i + 1));
  return ids;
}

int cmd_simulate(const SimulateArgs& a) {
  cfb::SimConfig cfg;
  cfg.setting = a.setting;
  cfg.n = a.n;
  cfg.replicates = a.reps;
  cfg.n_eval = a.n_eval;
  cfg.grid_points = a.grid;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  cfg.estimators = split_list(a.estimators);
  try {
    cfg.validate();
  } catch (const cfb::InvalidArgument& e) {
    throw UsageError(e.what());
  }

  fs::create_directories(a.out);
  const std::string stem = "setting" + std::to_string(cfg.setting);
  if (a.export_data) {
    const cfb::Dataset d = cfb::gen_replicate(cfg, 0);
    const fs::path dir = fs::path(a.out) / (stem + "_data");
    fs::create_directories(dir);
    cfb::write_file(dir / "treatments.csv", dataset_treatments_csv(d));
    cfb::write_file(dir / "covariates.csv", dataset_covariates_csv(d));
    cfb::write_file(dir / "outcomes.csv", cfb::id_value_csv(dataset_ids(d), d.Y, "y"));
    cfb::write_file(dir / "tau.csv", cfb::id_value_csv(dataset_ids(d), d.tau, "tau"));
  }

  const cfb::SimReport report = cfb::run_study(cfg);
  cfb::write_file(fs::path(a.out) / (stem + "_results.csv"), cfb::report_csv(report));
  cfb::write_file(fs::path(a.out) / (stem + "_summary.md"), cfb::report_markdown(report));
  std::cout << cfb::report_markdown(report);
  for (const auto& name : cfg.estimators) {
    for (const auto& f : report.estimators.at(name).failures) {
      std::cerr << "warning: " << name << " " << f << "\n";
    }
  }
  return kExitOk;
}

// --- fit / weights / predict ------------------------------------------------

struct FitArgs {
  std::string treatments;
  std::string covariates;
  std::string outcomes;
  std::string config;
  std::string out;
  std::string estimator = "cfb";
  bool intersect = false;
  bool dump_config = false;
};

int cmd_fit(const FitArgs& a) {
  cfb::RunConfig rc;
  if (!a.config.empty()) rc = cfb::load_run_config(a.config);
  if (a.dump_config) {
    std::cout << cfb::run_config_json(rc);
    return kExitOk;
  }
  if (a.treatments.empty() || a.covariates.empty() || a.outcomes.empty() || a.out.empty()) {
    throw UsageError("fit requires --treatments, --covariates, --outcomes and --out");
  }
  const auto treat = cfb::read_treatments(fs::path(a.treatments), rc.embedding_kernel);
  const auto cov = cfb::read_covariates(fs::path(a.covariates));
  const auto out = cfb::read_outcomes(fs::path(a.outcomes));
  cfb::JoinedData data = cfb::join_tables(treat, cov, out, a.intersect);
  for (const auto& id : data.dropped) std::cerr << "warning: dropped id '" << id << "'\n";

  cfb::ModelFile file;
  file.ids = data.ids;
  if (a.estimator == "fpc-baseline") {
    file.model = cfb::fpc_baseline(data.treatments, data.X, data.Y, rc.estimator.fpc_variance).model;
  } else {
    const cfb::PreparedData pd =
        cfb::prepare_data(std::move(data.treatments), std::move(data.X), std::move(data.Y), rc.estimator);
    if (a.estimator == "cfb") {
      file.model = cfb::fit_cfb(pd, rc.estimator);
    } else if (a.estimator == "nw") {
      file.model = cfb::nw_fit(pd, rc.estimator);
    } else if (a.estimator == "reg") {
      file.model = cfb::reg_fit(pd, rc.estimator).model;
    } else {
      throw UsageError("unknown estimator '" + a.estimator + "' (cfb, nw, reg, fpc-baseline)");
    }
  }
  cfb::save_model(file, a.out);

  const cfb::FteModel& m = file.model;
  std::cout << "estimator " << m.estimator << "\n";
  std::cout << "n " << file.ids.size() << "\n";
  std::cout << "lambda " << cfb::format_double(m.lambda) << "\n";
  if (m.tuning) {
    std::cout << "eta " << cfb::format_double(m.tuning->eta)
              << (m.tuning->eta_from_converged ? "" : " (no eta converged)") << "\n";
    std::cout << "baseline " << m.tuning->baseline_source << "\n";
  }
  return kExitOk;
}

int cmd_weights(const std::string& model_path, const std::string& out) {
  const cfb::ModelFile f = cfb::load_model(model_path);
  if (f.model.weights.size() == 0) {
    throw cfb::DataError("model '" + f.model.estimator + "' carries no response weights");
  }
  emit(cfb::id_value_csv(f.ids, f.model.weights, "weight"), out);
  return kExitOk;
}

bool blank_file(const fs::path& path) {
  const std::string s = cfb::read_file(path);
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

int cmd_predict(const std::string& model_path, const std::string& at, const std::string& out) {
  const cfb::ModelFile f = cfb::load_model(model_path);
  if (blank_file(at)) {
    emit("id,tau_hat\n", out);
    return kExitOk;
  }
  cfb::KernelSpec base;
  if (const auto* k = std::get_if<cfb::KernelExpansion>(&f.model.body)) {
    if (!k->centers.is_dense() && !k->centers.empty()) base = k->centers.samples().front().base_kernel();
  }
  const auto table = cfb::read_treatments(fs::path(at), base);
  const Eigen::VectorXd pred = f.model.predict(table.treatments);
  emit(cfb::id_value_csv(table.ids, pred, "tau_hat"), out);
  return kExitOk;
}

int cmd_selftest(std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : cfb::checks::fast_suite(seed)) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    ok = ok && r.pass;
  }
  return ok ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariate-balancing estimation of functional treatment effects"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a replicate simulation study");
  simulate->add_option("--setting", sim.setting, "Outcome model 1, 2 or 3")->capture_default_str();
  simulate->add_option("--n", sim.n, "Subjects per replicate")->capture_default_str();
  simulate->add_option("--reps", sim.reps, "Replicates")->capture_default_str();
  simulate->add_option("--n-eval", sim.n_eval, "Out-of-sample evaluation points")->capture_default_str();
  simulate->add_option("--grid", sim.grid, "Trajectory grid points on [0, 1]")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Root seed")->capture_default_str();
  simulate->add_option("--threads", sim.threads, "Worker threads, 0 = all cores")->capture_default_str();
  simulate->add_option("--estimators", sim.estimators, "Comma list of nw, fpc-baseline, cfb, reg, oracle")
      ->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_flag("--export-data", sim.export_data, "Also write replicate 0 as input CSVs");

  FitArgs fit;
  auto* fitc = app.add_subcommand("fit", "Fit an effect model on CSV data");
  fitc->add_option("--treatments", fit.treatments, "CSV id,t,value (dense) or id,t (sample sets)");
  fitc->add_option("--covariates", fit.covariates, "CSV id,<covariates>");
  fitc->add_option("--outcomes", fit.outcomes, "CSV id,y");
  fitc->add_option("--config", fit.config,
                   "JSON run config; defaults: gaussian_normalized kernels with median-heuristic "
                   "bandwidths, 10-point relative lambda grid, eta grid 1e-4..10, unbounded weights");
  fitc->add_option("--estimator", fit.estimator, "cfb, nw, reg or fpc-baseline")->capture_default_str();
  fitc->add_option("--out", fit.out, "Model file to write");
  fitc->add_flag("--intersect", fit.intersect, "Drop ids missing from any input instead of failing");
  fitc->add_flag("--dump-config", fit.dump_config, "Print the effective config and exit");

  std::string model_path, at, out;
  auto* weights = app.add_subcommand("weights", "Write the fitted response weights as CSV");
  weights->add_option("--model", model_path, "Model file")->required();
  weights->add_option("--out", out, "Output CSV (default stdout)");

  auto* predict = app.add_subcommand("predict", "Evaluate a fitted model at new treatments");
  predict->add_option("--model", model_path, "Model file")->required();
  predict->add_option("--at", at, "Treatment CSV in the model's representation")->required();
  predict->add_option("--out", out, "Output CSV (default stdout)");

  std::uint64_t selftest_seed = 20240601;
  auto* selftest = app.add_subcommand("selftest", "Run the numerical property checks");
  selftest->add_option("--seed", selftest_seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (fitc->parsed()) return cmd_fit(fit);
    if (weights->parsed()) return cmd_weights(model_path, out);
    if (predict->parsed()) return cmd_predict(model_path, at, out);
    if (selftest->parsed()) return cmd_selftest(selftest_seed);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const cfb::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const cfb::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
