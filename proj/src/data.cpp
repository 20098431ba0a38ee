#include "bnlte/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "bnlte/io.hpp"

namespace bnlte {

Role role_from_string(const std::string& s) {
  if (s == "root") return Role::Root;
  if (s == "sink") return Role::Sink;
  if (s == "free") return Role::Free;
  throw std::invalid_argument("unknown role '" + s +
                              "' (expected root/sink/free)");
}

std::string role_to_string(Role r) {
  switch (r) {
    case Role::Root: return "root";
    case Role::Sink: return "sink";
    case Role::Free: return "free";
  }
  return "free";
}

int Dataset::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < variable_names.size(); ++i) {
    if (variable_names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> Dataset::root_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] == Role::Root) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> Dataset::sink_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] == Role::Sink) out.push_back(static_cast<int>(i));
  }
  return out;
}

Dataset standardize(const Eigen::MatrixXd& raw, std::vector<std::string> names,
                    std::vector<Role> roles) {
  const auto n = raw.rows();
  const auto p = raw.cols();
  if (n < 2 || p < 2) {
    throw std::invalid_argument("standardize: need at least 2 rows and 2 columns");
  }
  if (static_cast<Eigen::Index>(names.size()) != p) {
    throw std::invalid_argument("standardize: name count mismatch");
  }
  if (roles.empty()) roles.assign(static_cast<std::size_t>(p), Role::Free);
  if (static_cast<Eigen::Index>(roles.size()) != p) {
    throw std::invalid_argument("standardize: role count mismatch");
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!std::isfinite(raw(i, j))) {
        throw std::runtime_error("missing or non-finite value at row " +
                                 std::to_string(i) + ", column " +
                                 std::to_string(j) + " (" +
                                 names[static_cast<std::size_t>(j)] + ")");
      }
    }
  }

  Dataset data;
  data.values.resize(n, p);
  data.variable_names = std::move(names);
  data.roles = std::move(roles);
  data.standardization.resize(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = raw.col(j).mean();
    const double ss = (raw.col(j).array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd <= 0.0) {
      throw std::runtime_error("constant column: " +
                               data.variable_names[static_cast<std::size_t>(j)]);
    }
    data.values.col(j) = (raw.col(j).array() - mean) / sd;
    data.standardization[static_cast<std::size_t>(j)] = {mean, sd};
  }
  return data;
}

Dataset load_dataset_csv(const std::string& csv_path,
                         const std::string& sidecar_path) {
  const auto table = io::read_csv(csv_path);
  const auto sidecar = nlohmann::json::parse(io::read_text(sidecar_path));

  std::string diagnosis_col;
  std::string age_col;
  if (sidecar.contains("diagnosis_column")) {
    diagnosis_col = sidecar.at("diagnosis_column").get<std::string>();
  }
  if (sidecar.contains("age_column")) {
    age_col = sidecar.at("age_column").get<std::string>();
  }

  std::vector<int> value_cols;
  int diag_idx = -1;
  int age_idx = -1;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (!diagnosis_col.empty() && table.header[c] == diagnosis_col) {
      diag_idx = static_cast<int>(c);
    } else if (!age_col.empty() && table.header[c] == age_col) {
      age_idx = static_cast<int>(c);
    } else {
      value_cols.push_back(static_cast<int>(c));
    }
  }
  if (!diagnosis_col.empty() && diag_idx < 0) {
    throw std::runtime_error("diagnosis column '" + diagnosis_col +
                             "' not found in " + csv_path);
  }
  if (!age_col.empty() && age_idx < 0) {
    throw std::runtime_error("age column '" + age_col + "' not found in " +
                             csv_path);
  }

  const auto n = table.rows.size();
  const auto p = value_cols.size();
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(n),
                      static_cast<Eigen::Index>(p));
  std::vector<std::string> names;
  names.reserve(p);
  for (auto c : value_cols) {
    names.push_back(table.header[static_cast<std::size_t>(c)]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const auto c = static_cast<std::size_t>(value_cols[j]);
      raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          io::parse_cell(table.rows[i][c], i, c);
    }
  }

  std::vector<Role> roles(p, Role::Free);
  if (sidecar.contains("roles")) {
    const auto& role_map = sidecar.at("roles");
    for (std::size_t j = 0; j < p; ++j) {
      if (role_map.contains(names[j])) {
        roles[j] = role_from_string(role_map.at(names[j]).get<std::string>());
      }
    }
  }

  Dataset data = standardize(raw, names, roles);
  if (diag_idx >= 0) {
    data.diagnosis.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      data.diagnosis.push_back(table.rows[i][static_cast<std::size_t>(diag_idx)]);
    }
  }
  if (age_idx >= 0) {
    data.age.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      data.age[static_cast<Eigen::Index>(i)] = io::parse_cell(
          table.rows[i][static_cast<std::size_t>(age_idx)], i,
          static_cast<std::size_t>(age_idx));
    }
  }
  return data;
}

void write_dataset_csv(const Dataset& data, const std::string& csv_path,
                       const std::string& sidecar_path) {
  std::ostringstream csv;
  std::vector<std::string> header = data.variable_names;
  if (data.has_diagnosis()) header.push_back("DIAGNOSIS");
  if (data.has_age()) header.push_back("AGE");
  csv << io::format_csv_row(header);

  csv.precision(17);
  for (int i = 0; i < data.n(); ++i) {
    std::vector<std::string> cells;
    cells.reserve(header.size());
    for (int j = 0; j < data.p(); ++j) {
      const auto& [mean, sd] = data.standardization[static_cast<std::size_t>(j)];
      std::ostringstream cell;
      cell.precision(17);
      cell << data.values(i, j) * sd + mean;
      cells.push_back(cell.str());
    }
    if (data.has_diagnosis()) cells.push_back(data.diagnosis[static_cast<std::size_t>(i)]);
    if (data.has_age()) {
      std::ostringstream cell;
      cell.precision(17);
      cell << data.age[i];
      cells.push_back(cell.str());
    }
    csv << io::format_csv_row(cells);
  }
  io::write_text_atomic(csv_path, csv.str());

  nlohmann::json sidecar;
  nlohmann::json roles = nlohmann::json::object();
  for (std::size_t j = 0; j < data.variable_names.size(); ++j) {
    roles[data.variable_names[j]] = role_to_string(data.roles[j]);
  }
  sidecar["roles"] = roles;
  if (data.has_diagnosis()) sidecar["diagnosis_column"] = "DIAGNOSIS";
  if (data.has_age()) sidecar["age_column"] = "AGE";
  io::write_text_atomic(sidecar_path, sidecar.dump(2) + "\n");
}

}  // namespace bnlte
