#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "kph/harness.hpp"

namespace kph::harness {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings
  if (!out) throw IOError("cannot open '" + path + "' for writing");
  return out;
}

void write_rows(std::ofstream& out, const std::string& header,
                const Eigen::MatrixXd& rows, const std::string& path) {
  out << header << '\n';
  for (int i = 0; i < rows.rows(); ++i) {
    for (int j = 0; j < rows.cols(); ++j) {
      if (j) out << ',';
      out << fmt(rows(i, j));
    }
    out << '\n';
  }
  if (!out) throw IOError("write to '" + path + "' failed");
}

std::string schema_header(int n, int m, const char* state_stem,
                          const char* energy_label) {
  std::ostringstream h;
  h << 't';
  for (int i = 1; i <= n; ++i) h << ',' << state_stem << i;
  for (int i = 1; i <= m; ++i) h << ",u" << i;
  for (int i = 1; i <= m; ++i) h << ",y" << i;
  h << ',' << energy_label;
  return h.str();
}

}  // namespace

void export_trajectory(const Trajectory& tr, const std::string& path) {
  const int n = static_cast<int>(tr.states.rows());
  const int m = static_cast<int>(tr.inputs.rows());
  const int cols = 1 + n + 2 * m + 1;
  Eigen::MatrixXd rows(tr.times.size(), cols);
  for (int k = 0; k < tr.times.size(); ++k) {
    int c = 0;
    rows(k, c++) = tr.times(k);
    for (int i = 0; i < n; ++i) rows(k, c++) = tr.states(i, k);
    for (int i = 0; i < m; ++i) rows(k, c++) = tr.inputs(i, k);
    for (int i = 0; i < m; ++i) rows(k, c++) = tr.outputs(i, k);
    rows(k, c++) = tr.energies(k);
  }
  auto out = open_out(path);
  write_rows(out, schema_header(n, m, "x", "H"), rows, path);
}

void export_lifted_trajectory(const LiftedTrajectory& tr, const std::string& path) {
  const int n = static_cast<int>(tr.psis.rows());
  const int m = static_cast<int>(tr.inputs.rows());
  const int cols = 1 + n + 2 * m + 1;
  Eigen::MatrixXd rows(tr.times.size(), cols);
  for (int k = 0; k < tr.times.size(); ++k) {
    int c = 0;
    rows(k, c++) = tr.times(k);
    for (int i = 0; i < n; ++i) rows(k, c++) = tr.psis(i, k);
    for (int i = 0; i < m; ++i) rows(k, c++) = tr.inputs(i, k);
    for (int i = 0; i < m; ++i) rows(k, c++) = tr.outputs(i, k);
    rows(k, c++) = tr.storages(k);
  }
  auto out = open_out(path);
  write_rows(out, schema_header(n, m, "psi", "Hlift"), rows, path);
}

void write_table(const std::string& path, const std::vector<std::string>& columns,
                 const Eigen::MatrixXd& rows) {
  if (static_cast<int>(columns.size()) != rows.cols())
    throw DimensionError("table has a different number of labels and columns");
  std::ostringstream h;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) h << ',';
    h << columns[i];
  }
  auto out = open_out(path);
  write_rows(out, h.str(), rows, path);
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IOError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> labels;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) labels.push_back(cell);
  }
  int n = 0, m = 0;
  for (const auto& l : labels) {
    if (l.size() > 1 && l[0] == 'x') ++n;
    if (l.size() > 1 && l[0] == 'u') ++m;
  }
  if (labels.empty() || labels.front() != "t" || labels.back() != "H" ||
      static_cast<int>(labels.size()) != 1 + n + 2 * m + 1)
    throw IOError("'" + path + "' does not follow the trajectory schema");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0')
        throw IOError("'" + path + "' has a non-numeric cell: " + cell);
      row.push_back(v);
    }
    if (row.size() != labels.size())
      throw IOError("'" + path + "' has a row of the wrong length");
    rows.push_back(std::move(row));
  }

  const int K = static_cast<int>(rows.size());
  Trajectory tr;
  tr.times.resize(K);
  tr.states.resize(n, K);
  tr.inputs.resize(m, K);
  tr.outputs.resize(m, K);
  tr.energies.resize(K);
  for (int k = 0; k < K; ++k) {
    int c = 0;
    tr.times(k) = rows[k][c++];
    for (int i = 0; i < n; ++i) tr.states(i, k) = rows[k][c++];
    for (int i = 0; i < m; ++i) tr.inputs(i, k) = rows[k][c++];
    for (int i = 0; i < m; ++i) tr.outputs(i, k) = rows[k][c++];
    tr.energies(k) = rows[k][c++];
  }
  return tr;
}

}  // namespace kph::harness
