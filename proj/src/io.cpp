#include "cfb/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace cfb {
namespace {

using nlohmann::json;

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw ParseError(source + ":" + std::to_string(line) + ": " + msg);
}

// Header plus data rows; blank lines are skipped. A UTF-8 BOM is tolerated.
std::pair<std::vector<std::string>, std::vector<CsvRow>> read_csv(std::istream& in,
                                                                   const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (header.empty()) {
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size()) {
      fail(source, lineno,
           "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    rows.push_back({lineno, std::move(fields)});
  }
  if (header.empty()) throw ParseError(source + ": missing header row");
  return {std::move(header), std::move(rows)};
}

double parse_number(const std::string& s, const std::string& source, std::size_t line) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    fail(source, line, "not a number: '" + s + "'");
  }
  if (!std::isfinite(v)) fail(source, line, "non-finite value '" + s + "'");
  return v;
}

void check_id(const std::string& id, const std::string& source, std::size_t line) {
  if (id.empty()) fail(source, line, "empty id");
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

// --- JSON helpers ---------------------------------------------------------

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double get_num(const json& j, double if_null = std::numeric_limits<double>::quiet_NaN()) {
  if (j.is_null()) return if_null;
  if (!j.is_number()) throw DataError("expected a number, got " + j.dump());
  return j.get<double>();
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

Eigen::VectorXd vec_from(const json& a) {
  if (!a.is_array()) throw DataError("expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = get_num(a[i]);
  return v;
}

std::vector<double> dvec_from(const json& a) {
  const Eigen::VectorXd v = vec_from(a);
  return {v.data(), v.data() + v.size()};
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!obj.is_object()) throw DataError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw DataError(where + ": unknown key '" + key + "'");
    }
  }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw DataError(where + ": missing key '" + key + "'");
  return *it;
}

json kernel_json(const KernelSpec& k) {
  return {{"kind", std::string(kernel_kind_name(k.kind))}, {"bandwidth", k.bandwidth},
          {"offset", k.offset}};
}

KernelSpec kernel_from(const json& j, const std::string& where) {
  check_keys(j, {"kind", "bandwidth", "offset"}, where);
  KernelSpec k;
  k.kind = parse_kernel_kind(require(j, "kind", where).get<std::string>());
  if (j.contains("bandwidth")) k.bandwidth = get_num(j["bandwidth"]);
  if (j.contains("offset")) k.offset = get_num(j["offset"]);
  k.validate();
  return k;
}

json kernel_config_json(const KernelConfig& k) {
  json j = {{"kind", std::string(kernel_kind_name(k.kind))}, {"offset", k.offset}};
  j["bandwidth"] = k.bandwidth ? json(*k.bandwidth) : json("auto");
  return j;
}

KernelConfig kernel_config_from(const json& j, const std::string& where) {
  check_keys(j, {"kind", "bandwidth", "offset"}, where);
  KernelConfig k;
  k.kind = parse_kernel_kind(require(j, "kind", where).get<std::string>());
  if (j.contains("bandwidth")) {
    const json& b = j["bandwidth"];
    if (b.is_string()) {
      if (b.get<std::string>() != "auto") throw DataError(where + ": bandwidth must be a number or \"auto\"");
    } else {
      k.bandwidth = get_num(b);
      KernelSpec{k.kind, *k.bandwidth, 1.0}.validate();
    }
  }
  if (j.contains("offset")) k.offset = get_num(j["offset"]);
  return k;
}

json treatments_json(const TreatmentSet& set) {
  json items = json::array();
  if (set.is_dense()) {
    for (const auto& d : set.dense()) {
      items.push_back({{"grid", std::vector<double>(d.grid().begin(), d.grid().end())},
                       {"values", std::vector<double>(d.values().begin(), d.values().end())}});
    }
    return {{"representation", "dense"}, {"items", items}};
  }
  const auto& s = set.samples();
  for (const auto& x : s) items.push_back(std::vector<double>(x.points().begin(), x.points().end()));
  json j = {{"representation", "sample_set"}, {"items", items}};
  if (!s.empty()) j["base_kernel"] = kernel_json(s.front().base_kernel());
  return j;
}

TreatmentSet treatments_from(const json& j) {
  check_keys(j, {"representation", "items", "base_kernel"}, "centers");
  const std::string rep = require(j, "representation", "centers").get<std::string>();
  const json& items = require(j, "items", "centers");
  if (rep == "dense") {
    std::vector<DenseTrajectory> out;
    for (const auto& it : items) {
      check_keys(it, {"grid", "values"}, "centers.items");
      out.emplace_back(dvec_from(it.at("grid")), dvec_from(it.at("values")));
    }
    return TreatmentSet(std::move(out));
  }
  if (rep == "sample_set") {
    std::vector<SampleSet> out;
    if (!items.empty()) {
      const KernelSpec base = kernel_from(require(j, "base_kernel", "centers"), "centers.base_kernel");
      for (const auto& it : items) out.emplace_back(dvec_from(it), base);
    }
    return TreatmentSet(std::move(out));
  }
  throw RepresentationError("unknown treatment representation '" + rep + "'");
}

json tuning_json(const TuningReport& t) {
  json etas = json::array();
  for (const auto& c : t.etas) {
    etas.push_back({{"eta", c.eta},
                    {"v", num(c.v_value)},
                    {"objective", num(c.objective)},
                    {"Q", num(c.Q_part)},
                    {"R", num(c.R_part)},
                    {"iterations", c.iterations},
                    {"converged", c.converged},
                    {"degenerate", c.degenerate},
                    {"message", c.message}});
  }
  json lg = json::array();
  json ll = json::array();
  for (double v : t.lambda_grid) lg.push_back(num(v));
  for (double v : t.lambda_loo) ll.push_back(num(v));
  return {{"lambda_grid", lg},
          {"lambda_loo", ll},
          {"lambda", num(t.lambda)},
          {"etas", etas},
          {"eta", num(t.eta)},
          {"eta_from_converged", t.eta_from_converged},
          {"baseline_source", t.baseline_source},
          {"baseline_mean", num(t.baseline_mean)},
          {"baseline_min", num(t.baseline_min)},
          {"baseline_max", num(t.baseline_max)},
          {"reg_lambda", num(t.reg_lambda)},
          {"factor_rank", t.factor_rank},
          {"factor_clamped", t.factor_clamped}};
}

TuningReport tuning_from(const json& j) {
  check_keys(j,
             {"lambda_grid", "lambda_loo", "lambda", "etas", "eta", "eta_from_converged",
              "baseline_source", "baseline_mean", "baseline_min", "baseline_max", "reg_lambda",
              "factor_rank", "factor_clamped"},
             "tuning");
  TuningReport t;
  t.lambda_grid = dvec_from(j.at("lambda_grid"));
  t.lambda_loo = dvec_from(j.at("lambda_loo"));
  t.lambda = get_num(j.at("lambda"));
  for (const auto& c : j.at("etas")) {
    check_keys(c, {"eta", "v", "objective", "Q", "R", "iterations", "converged", "degenerate", "message"},
               "tuning.etas");
    EtaCandidate e;
    e.eta = get_num(c.at("eta"));
    e.v_value = get_num(c.at("v"));
    e.objective = get_num(c.at("objective"));
    e.Q_part = get_num(c.at("Q"));
    e.R_part = get_num(c.at("R"));
    e.iterations = c.at("iterations").get<int>();
    e.converged = c.at("converged").get<bool>();
    e.degenerate = c.at("degenerate").get<bool>();
    e.message = c.at("message").get<std::string>();
    t.etas.push_back(std::move(e));
  }
  t.eta = get_num(j.at("eta"));
  t.eta_from_converged = j.at("eta_from_converged").get<bool>();
  t.baseline_source = j.at("baseline_source").get<std::string>();
  t.baseline_mean = get_num(j.at("baseline_mean"));
  t.baseline_min = get_num(j.at("baseline_min"));
  t.baseline_max = get_num(j.at("baseline_max"));
  t.reg_lambda = get_num(j.at("reg_lambda"));
  t.factor_rank = j.at("factor_rank").get<Eigen::Index>();
  t.factor_clamped = j.at("factor_clamped").get<Eigen::Index>();
  return t;
}

json basis_json(const FpcBasis& b) {
  json ef = json::array();
  for (Eigen::Index k = 0; k < b.eigenfunctions.cols(); ++k) ef.push_back(vec_json(b.eigenfunctions.col(k)));
  return {{"grid", b.grid},         {"mean", vec_json(b.mean)},   {"eigenfunctions", ef},
          {"eigenvalues", vec_json(b.eigenvalues)}, {"retained", b.retained}, {"explained", b.explained}};
}

FpcBasis basis_from(const json& j) {
  check_keys(j, {"grid", "mean", "eigenfunctions", "eigenvalues", "retained", "explained"}, "basis");
  FpcBasis b;
  b.grid = dvec_from(j.at("grid"));
  b.mean = vec_from(j.at("mean"));
  const json& ef = j.at("eigenfunctions");
  b.eigenfunctions.resize(static_cast<Eigen::Index>(b.grid.size()), static_cast<Eigen::Index>(ef.size()));
  for (std::size_t k = 0; k < ef.size(); ++k) {
    const Eigen::VectorXd col = vec_from(ef[k]);
    if (col.size() != b.eigenfunctions.rows()) throw DataError("basis: eigenfunction length mismatch");
    b.eigenfunctions.col(static_cast<Eigen::Index>(k)) = col;
  }
  b.eigenvalues = vec_from(j.at("eigenvalues"));
  b.retained = j.at("retained").get<int>();
  b.explained = get_num(j.at("explained"));
  if (b.mean.size() != b.eigenfunctions.rows() || b.retained != b.eigenfunctions.cols()) {
    throw DataError("basis: inconsistent dimensions");
  }
  return b;
}

}  // namespace

// --- CSV inputs -------------------------------------------------------------

TreatmentTable read_treatments(std::istream& in, const std::string& source,
                               const KernelSpec& base_kernel) {
  auto [header, rows] = read_csv(in, source);
  const bool dense = header == std::vector<std::string>{"id", "t", "value"};
  if (!dense && header != std::vector<std::string>{"id", "t"}) {
    fail(source, 1, "treatment header must be 'id,t,value' (dense) or 'id,t' (sample sets)");
  }
  TreatmentTable out;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<std::pair<double, double>>> points;
  std::vector<std::vector<std::size_t>> lines;
  for (const auto& r : rows) {
    check_id(r.fields[0], source, r.line);
    const double t = parse_number(r.fields[1], source, r.line);
    const double v = dense ? parse_number(r.fields[2], source, r.line) : 0.0;
    auto [it, fresh] = index.try_emplace(r.fields[0], out.ids.size());
    if (fresh) {
      out.ids.push_back(r.fields[0]);
      points.emplace_back();
      lines.emplace_back();
    }
    points[it->second].emplace_back(t, v);
    lines[it->second].push_back(r.line);
  }
  if (dense) {
    std::vector<DenseTrajectory> items;
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& p = points[i];
      std::vector<std::size_t> order(p.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a].first < p[b].first; });
      std::vector<double> grid, values;
      for (std::size_t k = 0; k < order.size(); ++k) {
        if (k > 0 && p[order[k]].first == p[order[k - 1]].first) {
          fail(source, lines[i][order[k]], "duplicate t for id '" + out.ids[i] + "'");
        }
        grid.push_back(p[order[k]].first);
        values.push_back(p[order[k]].second);
      }
      try {
        items.emplace_back(std::move(grid), std::move(values));
      } catch (const DataError& e) {
        fail(source, lines[i].front(), "id '" + out.ids[i] + "': " + e.what());
      }
    }
    out.treatments = TreatmentSet(std::move(items));
  } else {
    std::vector<SampleSet> items;
    for (auto& p : points) {
      std::vector<double> pts;
      for (const auto& [t, _] : p) pts.push_back(t);
      items.emplace_back(std::move(pts), base_kernel);
    }
    out.treatments = TreatmentSet(std::move(items));
  }
  return out;
}

TreatmentTable read_treatments(const std::filesystem::path& path, const KernelSpec& base_kernel) {
  auto in = open_in(path);
  return read_treatments(in, path.string(), base_kernel);
}

CovariateTable read_covariates(std::istream& in, const std::string& source) {
  auto [header, rows] = read_csv(in, source);
  if (header.size() < 2 || header[0] != "id") fail(source, 1, "covariate header must be 'id,<name>...'");
  CovariateTable out;
  out.names.assign(header.begin() + 1, header.end());
  out.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.names.size()));
  std::set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    check_id(r.fields[0], source, r.line);
    if (!seen.insert(r.fields[0]).second) fail(source, r.line, "duplicate id '" + r.fields[0] + "'");
    out.ids.push_back(r.fields[0]);
    for (std::size_t k = 1; k < r.fields.size(); ++k) {
      out.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1)) =
          parse_number(r.fields[k], source, r.line);
    }
  }
  return out;
}

CovariateTable read_covariates(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_covariates(in, path.string());
}

OutcomeTable read_outcomes(std::istream& in, const std::string& source) {
  auto [header, rows] = read_csv(in, source);
  if (header != std::vector<std::string>{"id", "y"}) fail(source, 1, "outcome header must be 'id,y'");
  OutcomeTable out;
  out.Y.resize(static_cast<Eigen::Index>(rows.size()));
  std::set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    check_id(r.fields[0], source, r.line);
    if (!seen.insert(r.fields[0]).second) fail(source, r.line, "duplicate id '" + r.fields[0] + "'");
    out.ids.push_back(r.fields[0]);
    out.Y(static_cast<Eigen::Index>(i)) = parse_number(r.fields[1], source, r.line);
  }
  return out;
}

OutcomeTable read_outcomes(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_outcomes(in, path.string());
}

JoinedData join_tables(const TreatmentTable& a, const CovariateTable& x, const OutcomeTable& y,
                       bool intersect) {
  std::unordered_map<std::string, Eigen::Index> xi, yi;
  for (std::size_t i = 0; i < x.ids.size(); ++i) xi.emplace(x.ids[i], static_cast<Eigen::Index>(i));
  for (std::size_t i = 0; i < y.ids.size(); ++i) yi.emplace(y.ids[i], static_cast<Eigen::Index>(i));
  std::set<std::string> in_a(a.ids.begin(), a.ids.end());

  JoinedData out;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < a.ids.size(); ++i) {
    const std::string& id = a.ids[i];
    if (xi.count(id) && yi.count(id)) {
      keep.push_back(i);
    } else {
      out.dropped.push_back(id);
    }
  }
  for (const auto& id : x.ids) {
    if (!in_a.count(id)) out.dropped.push_back(id);
  }
  for (const auto& id : y.ids) {
    if (!in_a.count(id) && !xi.count(id)) out.dropped.push_back(id);
  }
  if (!intersect && !out.dropped.empty()) {
    throw DataError("id mismatch across input files (first: '" + out.dropped.front() + "', " +
                    std::to_string(out.dropped.size()) + " in total); pass --intersect to drop them");
  }
  if (keep.empty()) throw DataError("no id is present in all three input files");

  out.treatments = a.treatments.subset(keep);
  out.X.resize(static_cast<Eigen::Index>(keep.size()), x.X.cols());
  out.Y.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::string& id = a.ids[keep[k]];
    out.ids.push_back(id);
    out.X.row(static_cast<Eigen::Index>(k)) = x.X.row(xi.at(id));
    out.Y(static_cast<Eigen::Index>(k)) = y.Y(yi.at(id));
  }
  return out;
}

// --- run config -------------------------------------------------------------

RunConfig parse_run_config(const std::string& json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
  try {
    check_keys(j,
               {"schema_version", "kernel_a", "kernel_x", "embedding_kernel", "lambda_grid", "lambda_lo",
                "lambda_hi", "lambda_count", "eta_grid", "box_upper", "factor_tol", "fpc_variance", "solver"},
               "config");
    if (j.contains("schema_version") && j["schema_version"].get<int>() != RunConfig::kSchemaVersion) {
      throw DataError("config: unsupported schema_version " + j["schema_version"].dump());
    }
    RunConfig c;
    EstimatorConfig& e = c.estimator;
    if (j.contains("kernel_a")) e.kernel_a = kernel_config_from(j["kernel_a"], "config.kernel_a");
    if (j.contains("kernel_x")) e.kernel_x = kernel_config_from(j["kernel_x"], "config.kernel_x");
    if (j.contains("embedding_kernel")) {
      c.embedding_kernel = kernel_from(j["embedding_kernel"], "config.embedding_kernel");
    }
    if (j.contains("lambda_grid")) e.lambda_grid = dvec_from(j["lambda_grid"]);
    if (j.contains("lambda_lo")) e.lambda_lo = get_num(j["lambda_lo"]);
    if (j.contains("lambda_hi")) e.lambda_hi = get_num(j["lambda_hi"]);
    if (j.contains("lambda_count")) e.lambda_count = j["lambda_count"].get<int>();
    if (j.contains("eta_grid")) e.eta_grid = dvec_from(j["eta_grid"]);
    if (j.contains("box_upper")) e.box_upper = get_num(j["box_upper"], std::numeric_limits<double>::infinity());
    if (j.contains("factor_tol")) e.factor_tol = get_num(j["factor_tol"]);
    if (j.contains("fpc_variance")) e.fpc_variance = get_num(j["fpc_variance"]);
    if (j.contains("solver")) {
      const json& s = j["solver"];
      check_keys(s, {"max_iter", "gtol", "ftol", "memory"}, "config.solver");
      if (s.contains("max_iter")) e.solver.max_iter = s["max_iter"].get<int>();
      if (s.contains("gtol")) e.solver.gtol = get_num(s["gtol"]);
      if (s.contains("ftol")) e.solver.ftol = get_num(s["ftol"]);
      if (s.contains("memory")) e.solver.memory = s["memory"].get<int>();
    }
    for (double v : e.lambda_grid) {
      if (!(v > 0.0)) throw DataError("config: lambda_grid values must be positive");
    }
    if (!(e.lambda_lo > 0.0 && e.lambda_lo <= e.lambda_hi) || e.lambda_count < 1) {
      throw DataError("config: need 0 < lambda_lo <= lambda_hi and lambda_count >= 1");
    }
    if (e.eta_grid.empty()) throw DataError("config: eta_grid must not be empty");
    for (double v : e.eta_grid) {
      if (!(v > 0.0)) throw DataError("config: eta_grid values must be positive");
    }
    if (!(e.box_upper > 0.0)) throw DataError("config: box_upper must be positive");
    if (!(e.fpc_variance > 0.0 && e.fpc_variance <= 1.0)) {
      throw DataError("config: fpc_variance must be in (0, 1]");
    }
    if (e.solver.max_iter < 1 || e.solver.memory < 1) {
      throw DataError("config: solver.max_iter and solver.memory must be positive");
    }
    return c;
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what());
  } catch (const Error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path), path.string());
}

std::string run_config_json(const RunConfig& c) {
  const EstimatorConfig& e = c.estimator;
  json j = {{"schema_version", RunConfig::kSchemaVersion},
            {"kernel_a", kernel_config_json(e.kernel_a)},
            {"kernel_x", kernel_config_json(e.kernel_x)},
            {"embedding_kernel", kernel_json(c.embedding_kernel)},
            {"lambda_grid", e.lambda_grid},
            {"lambda_lo", e.lambda_lo},
            {"lambda_hi", e.lambda_hi},
            {"lambda_count", e.lambda_count},
            {"eta_grid", e.eta_grid},
            {"box_upper", num(e.box_upper)},
            {"factor_tol", e.factor_tol},
            {"fpc_variance", e.fpc_variance},
            {"solver",
             {{"max_iter", e.solver.max_iter},
              {"gtol", e.solver.gtol},
              {"ftol", e.solver.ftol},
              {"memory", e.solver.memory}}}};
  return j.dump(2) + "\n";
}

// --- model files ------------------------------------------------------------

std::string model_json(const ModelFile& file) {
  const FteModel& m = file.model;
  json body;
  if (const auto* k = std::get_if<KernelExpansion>(&m.body)) {
    body = {{"type", "kernel_expansion"},
            {"kernel", kernel_json(k->kernel)},
            {"centers", treatments_json(k->centers)},
            {"coef", vec_json(k->coef)}};
  } else {
    const auto& lin = std::get<LinearFpcModel>(m.body);
    body = {{"type", "linear_fpc"}, {"basis", basis_json(lin.basis)}, {"beta", vec_json(lin.beta)}};
  }
  json j = {{"format", "cfb-model"},
            {"schema_version", ModelFile::kSchemaVersion},
            {"estimator", m.estimator},
            {"lambda", num(m.lambda)},
            {"ids", file.ids},
            {"weights", vec_json(m.weights)},
            {"fitted", vec_json(m.fitted)},
            {"body", body},
            {"tuning", m.tuning ? tuning_json(*m.tuning) : json(nullptr)}};
  return j.dump() + "\n";
}

ModelFile parse_model(const std::string& json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
  try {
    check_keys(j,
               {"format", "schema_version", "estimator", "lambda", "ids", "weights", "fitted", "body",
                "tuning"},
               "model");
    if (require(j, "format", "model") != "cfb-model") throw DataError("not a model file");
    if (require(j, "schema_version", "model").get<int>() != ModelFile::kSchemaVersion) {
      throw DataError("unsupported model schema_version " + j["schema_version"].dump());
    }
    ModelFile f;
    FteModel& m = f.model;
    m.estimator = require(j, "estimator", "model").get<std::string>();
    m.lambda = get_num(require(j, "lambda", "model"));
    f.ids = require(j, "ids", "model").get<std::vector<std::string>>();
    m.weights = vec_from(require(j, "weights", "model"));
    m.fitted = vec_from(require(j, "fitted", "model"));
    const json& body = require(j, "body", "model");
    const std::string type = require(body, "type", "body").get<std::string>();
    if (type == "kernel_expansion") {
      check_keys(body, {"type", "kernel", "centers", "coef"}, "body");
      KernelExpansion k;
      k.kernel = kernel_from(require(body, "kernel", "body"), "body.kernel");
      k.centers = treatments_from(require(body, "centers", "body"));
      k.coef = vec_from(require(body, "coef", "body"));
      if (static_cast<std::size_t>(k.coef.size()) != k.centers.size()) {
        throw DataError("body: coef length does not match the number of centers");
      }
      m.body = std::move(k);
    } else if (type == "linear_fpc") {
      check_keys(body, {"type", "basis", "beta"}, "body");
      LinearFpcModel lin;
      lin.basis = basis_from(require(body, "basis", "body"));
      lin.beta = vec_from(require(body, "beta", "body"));
      if (lin.beta.size() != lin.basis.retained + 1) throw DataError("body: beta length mismatch");
      m.body = std::move(lin);
    } else {
      throw DataError("unknown model body type '" + type + "'");
    }
    if (!j["tuning"].is_null()) m.tuning = tuning_from(j["tuning"]);
    if (!f.ids.empty() && static_cast<Eigen::Index>(f.ids.size()) != m.fitted.size()) {
      throw DataError("ids and fitted values differ in length");
    }
    return f;
  } catch (const json::exception& e) {
    throw ParseError(source + ": " + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

void save_model(const ModelFile& file, const std::filesystem::path& path) {
  write_file(path, model_json(file));
}

ModelFile load_model(const std::filesystem::path& path) {
  return parse_model(read_file(path), path.string());
}

// --- output helpers ---------------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string id_value_csv(const std::vector<std::string>& ids, const Eigen::VectorXd& values,
                         const std::string& column) {
  if (static_cast<Eigen::Index>(ids.size()) != values.size()) {
    throw InvalidArgument("id_value_csv: ids and values differ in length");
  }
  std::string out = "id," + column + "\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i];
    out += ',';
    out += format_double(values(static_cast<Eigen::Index>(i)));
    out += '\n';
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace cfb
