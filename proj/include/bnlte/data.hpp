#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bnlte {

enum class Role { Free, Root, Sink };

Role role_from_string(const std::string& s);
std::string role_to_string(Role r);

// Standardized observation matrix plus per-variable metadata.
//
// `values` is column z-scored; the raw scale is recoverable through
// `standardization` (per-column mean and sd of the raw data, sd with the
// n-1 divisor). Diagnosis and age are optional side columns that never enter
// the model likelihood.
struct Dataset {
  Eigen::MatrixXd values;
  std::vector<std::string> variable_names;
  std::vector<Role> roles;
  std::vector<std::string> diagnosis;               // empty if absent
  Eigen::VectorXd age;                              // size 0 if absent
  std::vector<std::pair<double, double>> standardization;

  int n() const { return static_cast<int>(values.rows()); }
  int p() const { return static_cast<int>(values.cols()); }
  bool has_diagnosis() const { return !diagnosis.empty(); }
  bool has_age() const { return age.size() > 0; }

  int index_of(const std::string& name) const;
  std::vector<int> root_indices() const;
  std::vector<int> sink_indices() const;
};

// Column-wise z-scoring. Throws on constant columns (named in the message)
// and on non-finite entries (with row/column indices).
Dataset standardize(const Eigen::MatrixXd& raw,
                    std::vector<std::string> names, std::vector<Role> roles);

// CSV ingestion: header row carries variable names; the sidecar JSON
// declares roles and which columns hold diagnosis / age. Remaining columns
// are standardized model variables.
Dataset load_dataset_csv(const std::string& csv_path,
                         const std::string& sidecar_path);

// Writes the dataset on the raw scale (inverse of standardize) together
// with diagnosis/age columns, plus the sidecar.
void write_dataset_csv(const Dataset& data, const std::string& csv_path,
                       const std::string& sidecar_path);

}  // namespace bnlte
