/**
 * @file   surface_load.hpp
 *
 * @brief  Boundary traction integral tau = int_Gamma sigma(u) nu ds over
 *         tagged facets, evaluated with a two-point Gauss rule per facet.
 */
#pragma once

#include <stdexcept>
#include <string>

#include "pfls/subsolvers.hpp"

namespace pfls {

enum class LoadStress {
  degraded,   // g(phi) sigma+ + sigma-
  undegraded  // sigma+ + sigma-
};

struct SurfaceLoad {
  double Fx = 0.0;
  double Fy = 0.0;
};

inline SurfaceLoad surface_load(const FieldState& state, const Mesh& mesh, const MaterialParams& params,
                                BoundaryTag tag = BoundaryTag::top, LoadStress kind = LoadStress::degraded) {
  SurfaceLoad load;
  bool any = false;
  for (const auto& f : mesh.boundary_facets) {
    if (f.tag != tag) continue;
    any = true;
    const auto& cell = mesh.cells[f.cell];
    const auto corners = cell_corners(mesh, cell);
    const auto ue = detail::gather_vector(state.u, cell);
    const auto phie = detail::gather(state.phi, cell);
    const auto& v0 = reference_vertices[f.local_edge];
    const auto& v1 = reference_vertices[(f.local_edge + 1) % 4];
    const Point& p0 = mesh.nodes[f.nodes[0]];
    const Point& p1 = mesh.nodes[f.nodes[1]];
    const double length = std::hypot(p1.x - p0.x, p1.y - p0.y);
    const double nx = (p1.y - p0.y) / length, ny = -(p1.x - p0.x) / length;

    for (double s : gauss_line_points) {
      const double xi = 0.5 * (1.0 - s) * v0[0] + 0.5 * (1.0 + s) * v1[0];
      const double eta = 0.5 * (1.0 - s) * v0[1] + 0.5 * (1.0 + s) * v1[1];
      const auto shape = shape_values(xi, eta);
      FeSpace::QPoint qp;
      qp.N = shape.values;
      qp.dN = map_gradients(corners, shape.gradients).gradients;
      const auto split = stress_split(detail::strain_at(qp, ue), params.mu, params.lambda);
      const double g =
          kind == LoadStress::degraded ? degradation(detail::interpolate(qp.N, phie), params.kappa) : 1.0;
      const SymTensor2 sigma = g * split.tensile + split.compressive;
      const double ds = 0.5 * length;  // unit Gauss weights
      load.Fx += (sigma.xx * nx + sigma.xy * ny) * ds;
      load.Fy += (sigma.xy * nx + sigma.yy * ny) * ds;
    }
  }
  if (!any) throw std::invalid_argument("surface_load: no facets tagged '" + std::string(to_string(tag)) + "'");
  return load;
}

}  // namespace pfls
