// Reference computations shared by the unit and acceptance tests. None of
// these reuse the code paths they are compared against.
#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pfls/subsolvers.hpp"

namespace oracle {

/// Sum of the unconstrained elasticity residual over the dofs of the nodes
/// tagged `tag`, with L = 0: the reaction the support exerts on the body.
inline std::array<double, 2> reaction_force(const pfls::PhaseFieldModel& model, const pfls::FieldState& state,
                                            pfls::BoundaryTag tag) {
  pfls::FieldState s = state;
  s.L = pfls::Vector::Zero(state.phi.size());
  const pfls::Vector r = model.elasticity_residual_raw(s, s);
  std::array<double, 2> f{0.0, 0.0};
  for (auto node : pfls::boundary_nodes(model.mesh(), tag)) {
    f[0] += r[static_cast<Eigen::Index>(2 * node)];
    f[1] += r[static_cast<Eigen::Index>(2 * node + 1)];
  }
  return f;
}

/// Eigenvalues of a symmetric 2x2 matrix by cyclic Jacobi rotations.
inline std::array<double, 2> jacobi_eigenvalues(double xx, double yy, double xy) {
  double a = xx, b = yy, c = xy;
  for (int sweep = 0; sweep < 50 && std::abs(c) > 1e-300; ++sweep) {
    const double theta = 0.5 * std::atan2(2.0 * c, a - b);
    const double cs = std::cos(theta), sn = std::sin(theta);
    const double a2 = cs * cs * a + 2.0 * cs * sn * c + sn * sn * b;
    const double b2 = sn * sn * a - 2.0 * cs * sn * c + cs * cs * b;
    const double c2 = (cs * cs - sn * sn) * c + cs * sn * (b - a);
    a = a2;
    b = b2;
    c = c2;
  }
  return a >= b ? std::array<double, 2>{a, b} : std::array<double, 2>{b, a};
}

/// Result of parsing a legacy VTK unstructured grid.
struct VtkFile {
  std::string title;
  std::vector<std::array<double, 3>> points;
  std::vector<std::vector<long>> cells;
  std::vector<int> cell_types;
  std::map<std::string, std::vector<double>> point_data;  // flattened
  std::map<std::string, int> components;
};

/// Strict reader for the subset of the legacy ASCII format used by the
/// writer. Throws std::runtime_error with a description on any violation.
inline VtkFile parse_vtk(std::istream& in) {
  auto fail = [](const std::string& msg) { throw std::runtime_error("vtk: " + msg); };
  VtkFile f;
  std::string line;
  if (!std::getline(in, line)) fail("empty file");
  if (line.rfind("# vtk DataFile Version ", 0) != 0) fail("bad magic line '" + line + "'");
  const std::string version = line.substr(23);
  if (version != "2.0" && version != "3.0") fail("unsupported version " + version);
  if (!std::getline(in, f.title)) fail("missing title");
  if (f.title.size() > 256) fail("title longer than 256 characters");
  if (!std::getline(in, line) || line != "ASCII") fail("expected ASCII");

  auto word = [&](const char* what) {
    std::string w;
    if (!(in >> w)) fail(std::string("unexpected end of file, expected ") + what);
    return w;
  };
  auto integer = [&](const char* what) {
    const std::string w = word(what);
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(w, &used);
    } catch (...) {
      fail(std::string("expected integer ") + what + ", got '" + w + "'");
    }
    if (used != w.size()) fail(std::string("expected integer ") + what + ", got '" + w + "'");
    return v;
  };
  auto real = [&](const char* what) {
    const std::string w = word(what);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(w, &used);
    } catch (...) {
      fail(std::string("expected number ") + what + ", got '" + w + "'");
    }
    if (used != w.size() || !std::isfinite(v)) fail(std::string("bad number ") + what + " '" + w + "'");
    return v;
  };
  auto data_type = [&]() {
    const std::string t = word("data type");
    static const std::set<std::string> ok{"float", "double", "int", "unsigned_int", "long", "short"};
    if (!ok.count(t)) fail("unknown data type '" + t + "'");
  };

  if (word("DATASET") != "DATASET" || word("dataset type") != "UNSTRUCTURED_GRID")
    fail("expected DATASET UNSTRUCTURED_GRID");
  if (word("POINTS") != "POINTS") fail("expected POINTS");
  const long n = integer("point count");
  if (n < 0) fail("negative point count");
  data_type();
  f.points.resize(static_cast<std::size_t>(n));
  for (auto& p : f.points)
    for (auto& x : p) x = real("coordinate");

  if (word("CELLS") != "CELLS") fail("expected CELLS");
  const long m = integer("cell count");
  const long size = integer("cell list size");
  long consumed = 0;
  for (long c = 0; c < m; ++c) {
    const long k = integer("cell size");
    if (k <= 0) fail("cell with no points");
    std::vector<long> ids;
    for (long j = 0; j < k; ++j) {
      const long id = integer("point index");
      if (id < 0 || id >= n) fail("cell " + std::to_string(c) + " references point " + std::to_string(id));
      ids.push_back(id);
    }
    consumed += k + 1;
    f.cells.push_back(std::move(ids));
  }
  if (consumed != size) fail("CELLS size field " + std::to_string(size) + " != " + std::to_string(consumed));

  if (word("CELL_TYPES") != "CELL_TYPES") fail("expected CELL_TYPES");
  if (integer("cell type count") != m) fail("CELL_TYPES count differs from CELLS");
  for (long c = 0; c < m; ++c) {
    const int t = static_cast<int>(integer("cell type"));
    const std::map<int, std::size_t> sizes{{1, 1}, {3, 2}, {5, 3}, {9, 4}};
    const auto it = sizes.find(t);
    if (it == sizes.end()) fail("unexpected cell type " + std::to_string(t));
    if (it->second != f.cells[static_cast<std::size_t>(c)].size()) fail("cell type does not match point count");
    f.cell_types.push_back(t);
  }

  std::string w;
  if (!(in >> w)) return f;
  if (w != "POINT_DATA") fail("expected POINT_DATA, got '" + w + "'");
  if (integer("point data count") != n) fail("POINT_DATA count differs from POINTS");
  while (in >> w) {
    const std::string name = word("attribute name");
    if (f.point_data.count(name)) fail("duplicate attribute " + name);
    int ncomp = 0;
    if (w == "SCALARS") {
      data_type();
      // optional component count precedes LOOKUP_TABLE
      std::string next = word("LOOKUP_TABLE");
      ncomp = 1;
      if (next != "LOOKUP_TABLE") {
        ncomp = std::stoi(next);
        if (ncomp < 1 || ncomp > 4) fail("bad component count");
        next = word("LOOKUP_TABLE");
      }
      if (next != "LOOKUP_TABLE") fail("expected LOOKUP_TABLE");
      word("table name");
    } else if (w == "VECTORS") {
      data_type();
      ncomp = 3;
    } else {
      fail("unsupported attribute '" + w + "'");
    }
    auto& values = f.point_data[name];
    for (long i = 0; i < n * ncomp; ++i) values.push_back(real("attribute value"));
    f.components[name] = ncomp;
  }
  return f;
}

inline VtkFile parse_vtk_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("vtk: cannot open " + path);
  return parse_vtk(in);
}

/// Fresh scratch directory below the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pfls_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
