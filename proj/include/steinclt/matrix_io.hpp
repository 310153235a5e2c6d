#pragma once

#include <Eigen/Dense>
#include <string>

namespace steinclt::io {

/// Header-free dense numeric CSV (RFC 4180, dot decimal).
Eigen::MatrixXd read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m);
std::string csv_row(const Eigen::VectorXd& v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace steinclt::io
