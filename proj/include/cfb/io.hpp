#pragma once

// File formats: long-format CSV inputs keyed by subject id, JSON run configs
// and JSON model files that embed the training treatments.

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cfb/error.hpp"
#include "cfb/estimators.hpp"
#include "cfb/model.hpp"

namespace cfb {

/// Data file problem, with the offending file and line in the message.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

struct TreatmentTable {
  std::vector<std::string> ids;  // order of first appearance
  TreatmentSet treatments;
};

/// Header `id,t,value` gives dense trajectories (rows of one id sorted by t),
/// header `id,t` gives sample sets embedded with `base_kernel`.
TreatmentTable read_treatments(std::istream& in, const std::string& source,
                               const KernelSpec& base_kernel);
TreatmentTable read_treatments(const std::filesystem::path& path, const KernelSpec& base_kernel);

struct CovariateTable {
  std::vector<std::string> ids;
  std::vector<std::string> names;
  Eigen::MatrixXd X;
};

/// Header `id,<name>...`, one row per id.
CovariateTable read_covariates(std::istream& in, const std::string& source);
CovariateTable read_covariates(const std::filesystem::path& path);

struct OutcomeTable {
  std::vector<std::string> ids;
  Eigen::VectorXd Y;
};

/// Header `id,y`, one row per id.
OutcomeTable read_outcomes(std::istream& in, const std::string& source);
OutcomeTable read_outcomes(const std::filesystem::path& path);

struct JoinedData {
  std::vector<std::string> ids;  // treatment-file order
  TreatmentSet treatments;
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  std::vector<std::string> dropped;  // ids missing from at least one file
};

/// Aligns the three tables by id. With `intersect` false any id missing from
/// one of the files is a DataError; otherwise such ids are dropped. An empty
/// result is always a DataError.
JoinedData join_tables(const TreatmentTable& a, const CovariateTable& x, const OutcomeTable& y,
                       bool intersect);

/// Run configuration for `fit`. Unknown keys are rejected.
struct RunConfig {
  static constexpr int kSchemaVersion = 1;
  EstimatorConfig estimator;
  KernelSpec embedding_kernel = KernelSpec::gaussian_normalized(1.0);  // sample-set inputs
};

RunConfig parse_run_config(const std::string& json_text, const std::string& source);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_json(const RunConfig& cfg);

struct ModelFile {
  static constexpr int kSchemaVersion = 1;
  FteModel model;
  std::vector<std::string> ids;  // training ids aligned with weights and fitted
};

std::string model_json(const ModelFile& file);
ModelFile parse_model(const std::string& json_text, const std::string& source);

void save_model(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

/// %.17g, with nan / inf / -inf spelled out.
std::string format_double(double v);

/// `id,<column>` CSV with 17-significant-digit values.
std::string id_value_csv(const std::vector<std::string>& ids, const Eigen::VectorXd& values,
                         const std::string& column);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace cfb
