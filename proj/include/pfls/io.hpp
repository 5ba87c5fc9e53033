/**
 * @file   io.hpp
 *
 * @brief  Load-displacement series (CSV) and legacy ASCII VTK snapshots.
 */
#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfls/lscheme.hpp"

namespace pfls {

inline constexpr const char* series_csv_header = "t,u_top,Fx,Fy,outer_iters,converged,maxL,min_phi";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// 17 significant digits, enough to round-trip any double.
inline std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_for_writing(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace detail

inline void write_series_csv(const std::vector<StepReport>& reports, std::ostream& out) {
  out << series_csv_header << '\n';
  for (const auto& r : reports) {
    out << detail::exact(r.t) << ',' << detail::exact(r.u_top) << ',' << detail::exact(r.Fx) << ','
        << detail::exact(r.Fy) << ',' << r.outer_iterations << ',' << (r.converged ? 1 : 0) << ','
        << detail::exact(r.max_L) << ',' << detail::exact(r.min_phi) << '\n';
  }
}

inline void write_series_csv(const std::vector<StepReport>& reports, const std::string& path) {
  if (reports.empty()) throw std::invalid_argument("write_series_csv: no reports");
  auto out = detail::open_for_writing(path);
  write_series_csv(reports, out);
  detail::finish(out, path);
}

/// Inverse of write_series_csv. `step` and the residual fields are not
/// stored and come back zero.
inline std::vector<StepReport> read_series_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != series_csv_header) throw IoError("series csv: unexpected header");
  std::vector<StepReport> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cols.push_back(cell);
    if (cols.size() != 8) throw IoError("series csv line " + std::to_string(line_no) + ": expected 8 columns");
    try {
      StepReport r;
      r.t = std::stod(cols[0]);
      r.u_top = std::stod(cols[1]);
      r.Fx = std::stod(cols[2]);
      r.Fy = std::stod(cols[3]);
      r.outer_iterations = std::stoi(cols[4]);
      r.converged = std::stoi(cols[5]) != 0;
      r.max_L = std::stod(cols[6]);
      r.min_phi = std::stod(cols[7]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw IoError("series csv line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return out;
}

/// Legacy VTK 3.0 unstructured grid with point data phi, u (z = 0), Xi, L.
inline void write_vtk(const FieldState& state, const Mesh& mesh, std::ostream& out,
                      const std::string& title = "pfls state") {
  const std::size_t n = mesh.nodes.size();
  if (static_cast<std::size_t>(state.phi.size()) != n || static_cast<std::size_t>(state.u.size()) != 2 * n ||
      static_cast<std::size_t>(state.xi.size()) != n || static_cast<std::size_t>(state.L.size()) != n)
    throw std::invalid_argument("write_vtk: state does not match the mesh");
  if (title.find('\n') != std::string::npos || title.size() > 255)
    throw std::invalid_argument("write_vtk: title must be one line of at most 255 characters");

  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n << " double\n";
  for (const auto& p : mesh.nodes) out << detail::exact(p.x) << ' ' << detail::exact(p.y) << " 0\n";
  out << "CELLS " << mesh.cells.size() << ' ' << 5 * mesh.cells.size() << '\n';
  for (const auto& c : mesh.cells) out << "4 " << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << c[3] << '\n';
  out << "CELL_TYPES " << mesh.cells.size() << '\n';
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) out << "9\n";  // VTK_QUAD

  auto scalars = [&](const char* name, const Vector& v) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) out << detail::exact(v[i]) << '\n';
  };
  out << "POINT_DATA " << n << '\n';
  scalars("phi", state.phi);
  out << "VECTORS u double\n";
  for (std::size_t i = 0; i < n; ++i)
    out << detail::exact(state.u[static_cast<Eigen::Index>(2 * i)]) << ' '
        << detail::exact(state.u[static_cast<Eigen::Index>(2 * i + 1)]) << " 0\n";
  scalars("Xi", state.xi);
  scalars("L", state.L);
}

inline void write_vtk(const FieldState& state, const Mesh& mesh, const std::string& path,
                      const std::string& title = "pfls state") {
  auto out = detail::open_for_writing(path);
  write_vtk(state, mesh, out, title);
  detail::finish(out, path);
}

}  // namespace pfls
