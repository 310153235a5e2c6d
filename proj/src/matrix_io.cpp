#include "steinclt/matrix_io.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "steinclt/errors.hpp"

namespace steinclt::io {

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw IoError("bad numeric cell '" + cell + "' in " + path);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty matrix file " + path);
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::string csv_row(const Eigen::VectorXd& v) {
  std::ostringstream out;
  out.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out << ",";
    out << v[i];
  }
  return out.str();
}

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << m(i, j);
    }
    out << "\n";
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
}

}  // namespace steinclt::io
