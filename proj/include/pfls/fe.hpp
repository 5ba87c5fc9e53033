/**
 * @file   fe.hpp
 *
 * @brief  Bilinear (Q1) finite-element machinery: reference basis, 2x2 Gauss
 *         quadrature, geometry mapping, degree-of-freedom numbering and
 *         Dirichlet constraints.
 */
#pragma once

#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfls/mesh.hpp"

namespace pfls {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

struct ShapeValues {
  std::array<double, 4> values{};
  std::array<std::array<double, 2>, 4> gradients{};  // d/dxi, d/deta
};

/// Reference vertices in counterclockwise order.
inline constexpr std::array<std::array<double, 2>, 4> reference_vertices{
    {{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}}};

inline ShapeValues shape_values(double xi, double eta) {
  ShapeValues s;
  for (int a = 0; a < 4; ++a) {
    const double xa = reference_vertices[a][0], ya = reference_vertices[a][1];
    s.values[a] = 0.25 * (1.0 + xa * xi) * (1.0 + ya * eta);
    s.gradients[a] = {0.25 * xa * (1.0 + ya * eta), 0.25 * ya * (1.0 + xa * xi)};
  }
  return s;
}

struct Quadrature {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
};

inline Quadrature gauss_2x2() {
  const double g = 1.0 / std::sqrt(3.0);
  return {{{-g, -g}, {g, -g}, {g, g}, {-g, g}}, {1.0, 1.0, 1.0, 1.0}};
}

/// Two-point Gauss rule on [-1,1].
inline constexpr std::array<double, 2> gauss_line_points{-0.57735026918962576451, 0.57735026918962576451};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MappedGradients {
  std::array<std::array<double, 2>, 4> gradients{};
  double det_jacobian = 0.0;
};

/// Physical gradients J^{-T} grad_ref of the four basis functions.
inline MappedGradients map_gradients(const std::array<Point, 4>& corners,
                                     const std::array<std::array<double, 2>, 4>& ref_gradients) {
  double j00 = 0.0, j01 = 0.0, j10 = 0.0, j11 = 0.0;  // J = d(x,y)/d(xi,eta)
  for (int a = 0; a < 4; ++a) {
    j00 += corners[a].x * ref_gradients[a][0];
    j01 += corners[a].x * ref_gradients[a][1];
    j10 += corners[a].y * ref_gradients[a][0];
    j11 += corners[a].y * ref_gradients[a][1];
  }
  MappedGradients out;
  out.det_jacobian = j00 * j11 - j01 * j10;
  if (!(out.det_jacobian > 0.0)) throw GeometryError("non-positive Jacobian determinant");
  const double inv = 1.0 / out.det_jacobian;
  for (int a = 0; a < 4; ++a) {
    const double gx = ref_gradients[a][0], gy = ref_gradients[a][1];
    out.gradients[a] = {inv * (j11 * gx - j10 * gy), inv * (-j01 * gx + j00 * gy)};
  }
  return out;
}

inline std::array<Point, 4> cell_corners(const Mesh& mesh, const Cell& cell) {
  return {mesh.nodes[cell[0]], mesh.nodes[cell[1]], mesh.nodes[cell[2]], mesh.nodes[cell[3]]};
}

/// Basis values, physical gradients and JxW at every quadrature point of
/// every cell, computed once per mesh.
class FeSpace {
 public:
  static constexpr int n_qp = 4;

  struct QPoint {
    std::array<double, 4> N{};
    std::array<std::array<double, 2>, 4> dN{};
    double JxW = 0.0;
  };

  explicit FeSpace(const Mesh& mesh) : mesh_(&mesh) {
    const auto quad = gauss_2x2();
    qpoints_.resize(mesh.cells.size() * n_qp);
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
      const auto corners = cell_corners(mesh, mesh.cells[c]);
      for (int q = 0; q < n_qp; ++q) {
        const auto s = shape_values(quad.points[q][0], quad.points[q][1]);
        MappedGradients g;
        try {
          g = map_gradients(corners, s.gradients);
        } catch (const GeometryError&) {
          throw GeometryError("degenerate cell " + std::to_string(c));
        }
        auto& qp = qpoints_[c * n_qp + q];
        qp.N = s.values;
        qp.dN = g.gradients;
        qp.JxW = g.det_jacobian * quad.weights[q];
      }
    }
  }

  const Mesh& mesh() const { return *mesh_; }
  std::size_t n_cells() const { return mesh_->cells.size(); }
  std::size_t n_nodes() const { return mesh_->nodes.size(); }
  const QPoint& qp(std::size_t cell, int q) const { return qpoints_[cell * n_qp + q]; }

 private:
  const Mesh* mesh_;
  std::vector<QPoint> qpoints_;
};

enum class FieldKind { vector2, scalar };

using ConstraintTable = std::vector<std::optional<double>>;

struct DofMap {
  FieldKind kind = FieldKind::scalar;
  std::size_t n_nodes = 0;

  std::size_t components() const { return kind == FieldKind::vector2 ? 2 : 1; }
  std::size_t n_dofs() const { return components() * n_nodes; }
  std::size_t dof(std::size_t node, std::size_t component = 0) const { return components() * node + component; }
};

inline DofMap vector_dofs(const Mesh& mesh) { return {FieldKind::vector2, mesh.nodes.size()}; }
inline DofMap scalar_dofs(const Mesh& mesh) { return {FieldKind::scalar, mesh.nodes.size()}; }

/// One Dirichlet prescription: component `component` of every node on
/// facets tagged `tag` is set to `rate * t`.
struct BcRule {
  BoundaryTag tag = BoundaryTag::other;
  int component = 0;
  double rate = 0.0;  // mm/s
};

/// Rules in precedence order: where several rules claim the same node
/// component, the first one wins.
struct BcSpec {
  std::vector<BcRule> rules;
};

/// Single edge notched shear: bottom clamped; top u_y = 0, u_x = t*ubar;
/// left/right u_y = 0; lower slit face u_y = 0.
inline BcSpec shear_test_bcs(double ubar) {
  return {{{BoundaryTag::bottom, 0, 0.0},
           {BoundaryTag::bottom, 1, 0.0},
           {BoundaryTag::top, 0, ubar},
           {BoundaryTag::top, 1, 0.0},
           {BoundaryTag::left, 1, 0.0},
           {BoundaryTag::right, 1, 0.0},
           {BoundaryTag::slit_lower, 1, 0.0}}};
}

/// Three-point bending on an imported mesh: facets tagged `left` pin the
/// left support, `right` is a roller, `top` carries the downward load.
inline BcSpec three_point_bending_bcs(double ubar) {
  return {{{BoundaryTag::left, 0, 0.0},
           {BoundaryTag::left, 1, 0.0},
           {BoundaryTag::right, 1, 0.0},
           {BoundaryTag::top, 1, -ubar}}};
}

inline ConstraintTable build_constraints(const Mesh& mesh, const DofMap& dofs, const BcSpec& bcs, double t) {
  if (t < 0.0) throw std::invalid_argument("loading time must be nonnegative");
  if (dofs.kind != FieldKind::vector2) throw std::invalid_argument("constraints apply to the displacement field");
  ConstraintTable table(dofs.n_dofs());
  for (const auto& rule : bcs.rules) {
    for (auto node : boundary_nodes(mesh, rule.tag)) {
      auto& slot = table[dofs.dof(node, static_cast<std::size_t>(rule.component))];
      if (!slot) slot = rule.rate * t;
    }
  }
  return table;
}

/// Replaces constrained rows by identity rows carrying the prescribed value
/// and eliminates the constrained columns symmetrically into the rhs.
inline void apply_dirichlet(SparseMatrix& matrix, Vector& rhs, const ConstraintTable& constraints) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != rhs.size() ||
      static_cast<std::size_t>(rhs.size()) != constraints.size())
    throw std::invalid_argument("apply_dirichlet: dimension mismatch");
  bool any = false;
  for (const auto& c : constraints) any = any || c.has_value();
  if (!any) return;

  for (Eigen::Index col = 0; col < matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
      const auto r = static_cast<std::size_t>(it.row()), c = static_cast<std::size_t>(it.col());
      if (constraints[c] && !constraints[r]) rhs[it.row()] -= it.value() * *constraints[c];
    }
  }
  for (Eigen::Index col = 0; col < matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
      const auto r = static_cast<std::size_t>(it.row()), c = static_cast<std::size_t>(it.col());
      if (constraints[r] || constraints[c]) it.valueRef() = (r == c) ? 1.0 : 0.0;
    }
  }
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    if (!constraints[i]) continue;
    const auto idx = static_cast<Eigen::Index>(i);
    if (matrix.coeff(idx, idx) != 1.0) matrix.coeffRef(idx, idx) = 1.0;
    rhs[idx] = *constraints[i];
  }
}

/// Consistent scalar mass matrix (used for checks and load vectors).
inline SparseMatrix assemble_mass(const FeSpace& fe, const std::vector<double>* weight = nullptr) {
  const auto& mesh = fe.mesh();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(fe.n_cells() * 16);
  for (std::size_t c = 0; c < fe.n_cells(); ++c) {
    const auto& cell = mesh.cells[c];
    for (int q = 0; q < FeSpace::n_qp; ++q) {
      const auto& qp = fe.qp(c, q);
      double w = 1.0;
      if (weight) {
        w = 0.0;
        for (int a = 0; a < 4; ++a) w += qp.N[a] * (*weight)[cell[a]];
      }
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          trip.emplace_back(static_cast<int>(cell[a]), static_cast<int>(cell[b]), w * qp.N[a] * qp.N[b] * qp.JxW);
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(fe.n_nodes()), static_cast<Eigen::Index>(fe.n_nodes()));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

/// Scalar Laplacian (grad w, grad v).
inline SparseMatrix assemble_laplacian(const FeSpace& fe) {
  const auto& mesh = fe.mesh();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(fe.n_cells() * 16);
  for (std::size_t c = 0; c < fe.n_cells(); ++c) {
    const auto& cell = mesh.cells[c];
    for (int q = 0; q < FeSpace::n_qp; ++q) {
      const auto& qp = fe.qp(c, q);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          trip.emplace_back(static_cast<int>(cell[a]), static_cast<int>(cell[b]),
                            (qp.dN[a][0] * qp.dN[b][0] + qp.dN[a][1] * qp.dN[b][1]) * qp.JxW);
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(fe.n_nodes()), static_cast<Eigen::Index>(fe.n_nodes()));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace pfls
