/**
 * @file   mesh.hpp
 *
 * @brief  Quadrilateral meshes for the phase-field fracture solver: the
 *         structured unit-square generator, geometric slits realized by
 *         node duplication, the line-oriented `quadmesh 1` file format and
 *         boundary queries.
 */
#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pfls {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

enum class BoundaryTag { left, right, bottom, top, slit_lower, slit_upper, other };

inline constexpr std::array<BoundaryTag, 7> all_boundary_tags{
    BoundaryTag::left,       BoundaryTag::right,      BoundaryTag::bottom, BoundaryTag::top,
    BoundaryTag::slit_lower, BoundaryTag::slit_upper, BoundaryTag::other};

inline std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::left: return "left";
    case BoundaryTag::right: return "right";
    case BoundaryTag::bottom: return "bottom";
    case BoundaryTag::top: return "top";
    case BoundaryTag::slit_lower: return "slit_lower";
    case BoundaryTag::slit_upper: return "slit_upper";
    case BoundaryTag::other: return "other";
  }
  return "other";
}

inline std::optional<BoundaryTag> parse_boundary_tag(std::string_view name) {
  for (auto tag : all_boundary_tags)
    if (to_string(tag) == name) return tag;
  return std::nullopt;
}

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Boundary edge. `nodes` follow the counterclockwise order of the owning
/// cell, so the outward normal is the edge direction rotated clockwise.
struct BoundaryFacet {
  std::array<std::size_t, 2> nodes{};
  BoundaryTag tag = BoundaryTag::other;
  std::size_t cell = 0;
  int local_edge = 0;  // edge k joins local vertices k and (k+1)%4
};

using Cell = std::array<std::size_t, 4>;

struct Mesh {
  std::vector<Point> nodes;
  std::vector<Cell> cells;
  std::vector<BoundaryFacet> boundary_facets;
  /// (lower, upper) index pairs created by slit insertion.
  std::vector<std::pair<std::size_t, std::size_t>> duplicates;
  double h = 0.0;
};

namespace detail {

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double cell_diameter(const Mesh& mesh, const Cell& c) {
  double d = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) d = std::max(d, distance(mesh.nodes[c[a]], mesh.nodes[c[b]]));
  return d;
}

inline double min_cell_diameter(const Mesh& mesh) {
  double h = std::numeric_limits<double>::infinity();
  for (const auto& c : mesh.cells) h = std::min(h, cell_diameter(mesh, c));
  return mesh.cells.empty() ? 0.0 : h;
}

/// Cross product of the two edges meeting at each corner; all positive for a
/// convex counterclockwise quadrilateral. Returns the index of the first
/// non-positive corner, if any.
inline std::optional<int> first_bad_corner(const Mesh& mesh, const Cell& c) {
  for (int k = 0; k < 4; ++k) {
    const Point& p = mesh.nodes[c[k]];
    const Point& next = mesh.nodes[c[(k + 1) % 4]];
    const Point& prev = mesh.nodes[c[(k + 3) % 4]];
    const double cross = (next.x - p.x) * (prev.y - p.y) - (next.y - p.y) * (prev.x - p.x);
    if (!(cross > 0.0)) return k;
  }
  return std::nullopt;
}

using EdgeKey = std::pair<std::size_t, std::size_t>;

inline EdgeKey edge_key(std::size_t a, std::size_t b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

/// Undirected edge -> list of (cell, local edge).
inline std::map<EdgeKey, std::vector<std::pair<std::size_t, int>>> edge_owners(const Mesh& mesh) {
  std::map<EdgeKey, std::vector<std::pair<std::size_t, int>>> owners;
  for (std::size_t c = 0; c < mesh.cells.size(); ++c)
    for (int k = 0; k < 4; ++k)
      owners[edge_key(mesh.cells[c][k], mesh.cells[c][(k + 1) % 4])].emplace_back(c, k);
  return owners;
}

inline Point centroid(const Mesh& mesh, const Cell& c) {
  Point p;
  for (auto n : c) {
    p.x += 0.25 * mesh.nodes[n].x;
    p.y += 0.25 * mesh.nodes[n].y;
  }
  return p;
}

inline double domain_diameter(const Mesh& mesh) {
  if (mesh.nodes.empty()) return 0.0;
  double x0 = mesh.nodes[0].x, x1 = x0, y0 = mesh.nodes[0].y, y1 = y0;
  for (const auto& p : mesh.nodes) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return std::hypot(x1 - x0, y1 - y0);
}

}  // namespace detail

/// Structured mesh of the unit square [0,1]^2 (mm): a 2x2 base grid refined
/// uniformly `refinements` times, i.e. (2*2^r)^2 cells.
inline Mesh generate_unit_square_mesh(int refinements) {
  if (refinements < 0) throw MeshError("refinements must be nonnegative");
  const std::size_t n = std::size_t{2} << refinements;
  const double dx = 1.0 / static_cast<double>(n);
  const auto id = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };

  Mesh mesh;
  mesh.nodes.reserve((n + 1) * (n + 1));
  for (std::size_t j = 0; j <= n; ++j)
    for (std::size_t i = 0; i <= n; ++i)
      mesh.nodes.push_back({static_cast<double>(i) * dx, static_cast<double>(j) * dx});

  mesh.cells.reserve(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      mesh.cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});

  const auto cell_of = [n](std::size_t i, std::size_t j) { return j * n + i; };
  for (std::size_t i = 0; i < n; ++i) {
    mesh.boundary_facets.push_back({{id(i, 0), id(i + 1, 0)}, BoundaryTag::bottom, cell_of(i, 0), 0});
    mesh.boundary_facets.push_back(
        {{id(i + 1, n), id(i, n)}, BoundaryTag::top, cell_of(i, n - 1), 2});
  }
  for (std::size_t j = 0; j < n; ++j) {
    mesh.boundary_facets.push_back(
        {{id(n, j), id(n, j + 1)}, BoundaryTag::right, cell_of(n - 1, j), 1});
    mesh.boundary_facets.push_back({{id(0, j + 1), id(0, j)}, BoundaryTag::left, cell_of(0, j), 3});
  }
  mesh.h = detail::min_cell_diameter(mesh);
  return mesh;
}

/// Axis-aligned straight slit. For a horizontal slit the lower side is the
/// one with smaller y; for a vertical slit, the one with smaller x.
struct SlitSpec {
  Point start;
  Point end;
};

/// Cuts the mesh along `slit`. Nodes on the segment are duplicated, except
/// endpoints lying in the interior of the domain (crack tips). Cells on the
/// lower side keep the original nodes, cells on the upper side get the
/// copies, and the two crack faces become slit_lower / slit_upper facets.
inline Mesh insert_slit(const Mesh& mesh, const SlitSpec& slit) {
  const double len = detail::distance(slit.start, slit.end);
  if (len == 0.0) return mesh;

  const double tol = 1e-12 * std::max(1.0, detail::domain_diameter(mesh));
  const bool horizontal = std::abs(slit.start.y - slit.end.y) <= tol;
  const bool vertical = std::abs(slit.start.x - slit.end.x) <= tol;
  if (!horizontal && !vertical) throw MeshError("slit segment must be axis-aligned");

  // Parameterize along the slit: s = coordinate along, level = fixed coordinate.
  const double level = horizontal ? slit.start.y : slit.start.x;
  const double s0 = horizontal ? std::min(slit.start.x, slit.end.x) : std::min(slit.start.y, slit.end.y);
  const double s1 = horizontal ? std::max(slit.start.x, slit.end.x) : std::max(slit.start.y, slit.end.y);
  const auto along = [horizontal](const Point& p) { return horizontal ? p.x : p.y; };
  const auto across = [horizontal](const Point& p) { return horizontal ? p.y : p.x; };

  std::vector<std::pair<double, std::size_t>> on_segment;
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    const Point& p = mesh.nodes[i];
    if (std::abs(across(p) - level) <= tol && along(p) >= s0 - tol && along(p) <= s1 + tol)
      on_segment.emplace_back(along(p), i);
  }
  std::sort(on_segment.begin(), on_segment.end());
  if (on_segment.size() < 2 || std::abs(on_segment.front().first - s0) > tol ||
      std::abs(on_segment.back().first - s1) > tol)
    throw MeshError("slit endpoints do not coincide with mesh nodes");

  auto owners = detail::edge_owners(mesh);
  std::vector<std::pair<std::size_t, std::size_t>> slit_edges;
  for (std::size_t k = 0; k + 1 < on_segment.size(); ++k) {
    const auto a = on_segment[k].second, b = on_segment[k + 1].second;
    auto it = owners.find(detail::edge_key(a, b));
    if (it == owners.end() || it->second.size() != 2)
      throw MeshError("slit segment does not follow interior mesh edges");
    slit_edges.emplace_back(a, b);
  }

  std::set<std::size_t> on_boundary;
  for (const auto& f : mesh.boundary_facets) {
    on_boundary.insert(f.nodes[0]);
    on_boundary.insert(f.nodes[1]);
  }

  Mesh out = mesh;
  std::map<std::size_t, std::size_t> upper_copy;
  for (std::size_t k = 0; k < on_segment.size(); ++k) {
    const auto node = on_segment[k].second;
    const bool endpoint = (k == 0 || k + 1 == on_segment.size());
    if (endpoint && !on_boundary.count(node)) continue;  // tip stays shared
    upper_copy[node] = out.nodes.size();
    out.duplicates.emplace_back(node, out.nodes.size());
    out.nodes.push_back(mesh.nodes[node]);
  }

  std::vector<bool> is_upper(mesh.cells.size(), false);
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    const double side = across(detail::centroid(mesh, mesh.cells[c]));
    if (side <= level) continue;
    is_upper[c] = true;
    for (auto& n : out.cells[c]) {
      auto it = upper_copy.find(n);
      if (it != upper_copy.end()) n = it->second;
    }
  }

  for (auto& f : out.boundary_facets) {
    const Cell& c = out.cells[f.cell];
    f.nodes = {c[f.local_edge], c[(f.local_edge + 1) % 4]};
  }
  for (const auto& [a, b] : slit_edges) {
    for (const auto& [cell, k] : owners.at(detail::edge_key(a, b))) {
      const Cell& c = out.cells[cell];
      out.boundary_facets.push_back({{c[k], c[(k + 1) % 4]},
                                     is_upper[cell] ? BoundaryTag::slit_upper : BoundaryTag::slit_lower,
                                     cell,
                                     k});
    }
  }
  out.h = detail::min_cell_diameter(out);
  return out;
}

/// Nodes incident to facets carrying `tag`, ascending.
inline std::vector<std::size_t> boundary_nodes(const Mesh& mesh, BoundaryTag tag) {
  std::set<std::size_t> nodes;
  for (const auto& f : mesh.boundary_facets)
    if (f.tag == tag) nodes.insert(f.nodes.begin(), f.nodes.end());
  return {nodes.begin(), nodes.end()};
}

inline std::vector<std::size_t> boundary_nodes(const Mesh& mesh, std::string_view tag) {
  auto parsed = parse_boundary_tag(tag);
  if (!parsed) throw MeshError("unknown boundary tag '" + std::string(tag) + "'");
  return boundary_nodes(mesh, *parsed);
}

// ---------------------------------------------------------------------------
// quadmesh 1 text format

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-empty line with comments stripped, split on whitespace.
  std::optional<std::vector<std::string>> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
      std::istringstream ss(line);
      std::vector<std::string> tokens;
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return tokens;
    }
    return std::nullopt;
  }

  std::vector<std::string> expect(std::size_t count, std::string_view what) {
    auto tokens = next();
    if (!tokens) fail("unexpected end of file, expected " + std::string(what));
    if (tokens->size() != count) fail("expected " + std::string(what));
    return *tokens;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw MeshError("line " + std::to_string(line_no_) + ": " + msg);
  }

  int line() const { return line_no_; }

  double to_double(const std::string& tok) const {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("invalid number '" + tok + "'");
    return v;
  }

  std::size_t to_index(const std::string& tok) const {
    std::size_t v = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) fail("invalid index '" + tok + "'");
    return v;
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

}  // namespace detail

inline Mesh read_mesh(std::istream& in) {
  detail::LineReader reader(in);
  auto header = reader.expect(2, "header 'quadmesh 1'");
  if (header[0] != "quadmesh" || header[1] != "1") reader.fail("expected header 'quadmesh 1'");

  Mesh mesh;
  auto count = [&](std::string_view keyword) {
    auto tok = reader.expect(2, std::string(keyword) + " <count>");
    if (tok[0] != keyword) reader.fail("expected '" + std::string(keyword) + "'");
    return reader.to_index(tok[1]);
  };

  const auto n_nodes = count("nodes");
  mesh.nodes.reserve(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    auto tok = reader.expect(2, "node coordinates 'x y'");
    mesh.nodes.push_back({reader.to_double(tok[0]), reader.to_double(tok[1])});
  }

  const auto n_cells = count("cells");
  mesh.cells.reserve(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    auto tok = reader.expect(4, "four node indices");
    Cell cell{};
    for (int k = 0; k < 4; ++k) {
      cell[k] = reader.to_index(tok[k]);
      if (cell[k] >= mesh.nodes.size()) reader.fail("node index out of range in cell " + std::to_string(c));
    }
    mesh.cells.push_back(cell);
    if (auto bad = detail::first_bad_corner(mesh, cell))
      reader.fail("cell " + std::to_string(c) + " is inverted or not convex (corner " +
                  std::to_string(*bad) + ")");
  }

  const auto owners = detail::edge_owners(mesh);
  const auto n_facets = count("bfacets");
  for (std::size_t f = 0; f < n_facets; ++f) {
    auto tok = reader.expect(3, "'i j tagname'");
    const auto a = reader.to_index(tok[0]), b = reader.to_index(tok[1]);
    auto tag = parse_boundary_tag(tok[2]);
    if (!tag) reader.fail("unknown boundary tag '" + tok[2] + "'");
    auto it = owners.find(detail::edge_key(a, b));
    if (it == owners.end()) reader.fail("boundary facet " + std::to_string(f) + " is not a cell edge");
    if (it->second.size() != 1)
      reader.fail("boundary facet " + std::to_string(f) + " is shared by more than one cell");
    const auto [cell, k] = it->second.front();
    const Cell& c = mesh.cells[cell];
    mesh.boundary_facets.push_back({{c[k], c[(k + 1) % 4]}, *tag, cell, k});
  }
  if (reader.next()) reader.fail("trailing content after boundary facets");

  // Recover slit pairs: coincident nodes.
  std::map<std::pair<double, double>, std::size_t> seen;
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    auto [it, inserted] = seen.emplace(std::pair{mesh.nodes[i].x, mesh.nodes[i].y}, i);
    if (!inserted) mesh.duplicates.emplace_back(it->second, i);
  }
  mesh.h = detail::min_cell_diameter(mesh);
  return mesh;
}

inline Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file '" + path + "'");
  try {
    return read_mesh(in);
  } catch (const MeshError& e) {
    throw MeshError(path + ": " + e.what());
  }
}

inline void write_mesh(const Mesh& mesh, std::ostream& out) {
  out << "quadmesh 1\n";
  out << "nodes " << mesh.nodes.size() << '\n';
  for (const auto& p : mesh.nodes) out << detail::format_double(p.x) << ' ' << detail::format_double(p.y) << '\n';
  out << "cells " << mesh.cells.size() << '\n';
  for (const auto& c : mesh.cells) out << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << c[3] << '\n';
  out << "bfacets " << mesh.boundary_facets.size() << '\n';
  for (const auto& f : mesh.boundary_facets)
    out << f.nodes[0] << ' ' << f.nodes[1] << ' ' << to_string(f.tag) << '\n';
}

inline void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file '" + path + "'");
  write_mesh(mesh, out);
  if (!out) throw MeshError("write failed for '" + path + "'");
}

}  // namespace pfls
