#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

namespace bnlte::io {

// Whole-file atomic write: content goes to a sibling temp file which is then
// renamed over the target.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);

// Numeric cell parse with row/column context in the error message.
double parse_cell(const std::string& cell, std::size_t row, std::size_t col);

std::string format_csv_row(const std::vector<std::string>& cells);

// JSON <-> Eigen glue. Matrices serialize as row-major nested arrays.
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);
nlohmann::json int_matrix_to_json(const Eigen::MatrixXi& m);
Eigen::MatrixXi int_matrix_from_json(const nlohmann::json& j);

}  // namespace bnlte::io
