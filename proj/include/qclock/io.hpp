#pragma once

// File formats shared by fixtures, the CLI, and downstream plotting:
//  - matrices/vectors as JSON {"rows":n,"cols":m,"re":[...],"im":[...]}, row-major
//  - CSV with '.' decimal separator and 17 significant digits (round-trip safe)

#include "qclock/analysis.hpp"
#include "qclock/clock.hpp"
#include "qclock/hilbert.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qclock {

inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline nlohmann::json matrix_to_json(const ComplexMatrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> re, im;
  re.reserve(static_cast<std::size_t>(m.size()));
  im.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      re.push_back(m(r, c).real());
      im.push_back(m(r, c).imag());
    }
  j["re"] = re;
  j["im"] = im;
  return j;
}

inline nlohmann::json vector_to_json(const StateVector& v) {
  return matrix_to_json(ComplexMatrix(v));
}

inline ComplexMatrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || re.size() != static_cast<std::size_t>(rows * cols) ||
      im.size() != re.size())
    throw std::invalid_argument("matrix_from_json: inconsistent shape");
  ComplexMatrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c, ++k) m(r, c) = Complex(re[k], im[k]);
  return m;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string clock_trace_csv(const ClockTrace& trace) {
  std::string s = "t,t_expect,t_stddev\n";
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    s += format_g17(trace.times[i]);
    s += ',';
    s += format_g17(trace.t_expect[i]);
    s += ',';
    s += format_g17(trace.t_stddev[i]);
    s += '\n';
  }
  return s;
}

inline std::string consistency_grid_csv(const ConsistencyGrid& grid) {
  std::string s = "theta,phi,delta0,delta1\n";
  for (std::size_t i = 0; i < grid.thetas.size(); ++i)
    for (std::size_t j = 0; j < grid.phis.size(); ++j) {
      const std::size_t idx = i * grid.phis.size() + j;
      s += format_g17(grid.thetas[i]);
      s += ',';
      s += format_g17(grid.phis[j]);
      s += ',';
      s += format_g17(grid.delta0[idx]);
      s += ',';
      s += format_g17(grid.delta1[idx]);
      s += '\n';
    }
  return s;
}

inline nlohmann::json zeros_to_json(const ConsistencyGrid& grid) {
  nlohmann::json j;
  j["tolerance"] = grid.zero_tolerance;
  j["zeros"] = nlohmann::json::array();
  for (const auto& z : grid.zeros) j["zeros"].push_back({{"theta", z.theta}, {"phi", z.phi}});
  return j;
}

}  // namespace qclock
