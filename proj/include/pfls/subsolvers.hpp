/**
 * @file   subsolvers.hpp
 *
 * @brief  Residuals and Jacobians of the two staggered subproblems and the
 *         Newton solver used for both.
 *
 * Step 1 (displacement), with anchor state (u_a, phi_a) from the previous
 * outer iterate and stabilization L:
 *
 *   a_u(u, v) = (L (u - u_a), v) + (g(phi_a) sigma+(u), e(v)) + (sigma-(u), e(v))
 *
 * Step 2 (phase field), for fixed u, with anchor phi_a and the phase field
 * phi_old of the previous loading step:
 *
 *   a_phi(phi, psi) = (L (phi - phi_a), psi) + Gc eps (grad phi, grad psi)
 *                     - Gc/eps (1 - phi, psi) + (1 - kappa)(phi sigma+(u):e(u), psi)
 *                     + (Xi + gamma [phi - phi_old]^+, psi)
 *
 * The stabilization term is the L^2 form weighted by the nodal L field and
 * uses 2x2 Gauss quadrature like the other volume terms. The penalty term
 * (Xi + gamma [.]^+, psi) is lumped onto the nodes, matching the nodal
 * Xi update.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfls/fe.hpp"
#include "pfls/linear_solver.hpp"
#include "pfls/material.hpp"
#include "pfls/mesh.hpp"

namespace pfls {

/// Nodal fields of the coupled problem. `growth` tracks the stabilization
/// multiplier relative to L0 for the dynamic strategies; L is derived from it.
struct FieldState {
  Vector u;       // 2 per node, interleaved (x, y)
  Vector phi;
  Vector xi;      // augmented Lagrangian multiplier
  Vector L;       // stabilization, L_u = L_phi
  Vector growth;

  /// u = 0, phi = 1, Xi = 0, L = 0.
  static FieldState initial(std::size_t n_nodes) {
    const auto n = static_cast<Eigen::Index>(n_nodes);
    return {Vector::Zero(2 * n), Vector::Ones(n), Vector::Zero(n), Vector::Zero(n), Vector::Ones(n)};
  }
};

enum class JacobianMode { analytic, finite_difference };

namespace detail {

/// Fixed sparsity pattern with direct slots for every element-matrix entry.
class AssemblyPattern {
 public:
  AssemblyPattern() = default;

  AssemblyPattern(const Mesh& mesh, int components) : block_(4 * components) {
    const auto n = static_cast<Eigen::Index>(mesh.nodes.size() * static_cast<std::size_t>(components));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.cells.size() * static_cast<std::size_t>(block_ * block_));
    for (const auto& cell : mesh.cells)
      for (int i = 0; i < block_; ++i)
        for (int j = 0; j < block_; ++j)
          trip.emplace_back(global(cell, i, components), global(cell, j, components), 0.0);
    matrix_.resize(n, n);
    matrix_.setFromTriplets(trip.begin(), trip.end());
    matrix_.makeCompressed();

    slots_.resize(mesh.cells.size() * static_cast<std::size_t>(block_ * block_));
    const int* outer = matrix_.outerIndexPtr();
    const int* inner = matrix_.innerIndexPtr();
    for (std::size_t c = 0; c < mesh.cells.size(); ++c)
      for (int i = 0; i < block_; ++i)
        for (int j = 0; j < block_; ++j) {
          const int row = global(mesh.cells[c], i, components), col = global(mesh.cells[c], j, components);
          const int* pos = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
          slots_[(c * block_ + i) * block_ + j] = static_cast<int>(pos - inner);
        }
  }

  SparseMatrix zero_matrix() const {
    SparseMatrix m = matrix_;
    std::fill(m.valuePtr(), m.valuePtr() + m.nonZeros(), 0.0);
    return m;
  }

  /// Adds a block_ x block_ row-major element matrix.
  void add(SparseMatrix& m, std::size_t cell, const double* element) const {
    double* values = m.valuePtr();
    const int* slot = &slots_[cell * block_ * block_];
    for (int k = 0; k < block_ * block_; ++k) values[slot[k]] += element[k];
  }

 private:
  static int global(const Cell& cell, int local, int components) {
    return static_cast<int>(cell[local / components]) * components + local % components;
  }

  int block_ = 0;
  SparseMatrix matrix_;
  std::vector<int> slots_;
};

inline double interpolate(const std::array<double, 4>& N, const std::array<double, 4>& nodal) {
  return N[0] * nodal[0] + N[1] * nodal[1] + N[2] * nodal[2] + N[3] * nodal[3];
}

template <class V>
std::array<double, 4> gather(const V& field, const Cell& cell) {
  return {field[static_cast<Eigen::Index>(cell[0])], field[static_cast<Eigen::Index>(cell[1])],
          field[static_cast<Eigen::Index>(cell[2])], field[static_cast<Eigen::Index>(cell[3])]};
}

template <class V>
std::array<double, 8> gather_vector(const V& field, const Cell& cell) {
  std::array<double, 8> out{};
  for (int a = 0; a < 4; ++a) {
    out[2 * a] = field[static_cast<Eigen::Index>(2 * cell[a])];
    out[2 * a + 1] = field[static_cast<Eigen::Index>(2 * cell[a] + 1)];
  }
  return out;
}

inline SymTensor2 strain_at(const FeSpace::QPoint& qp, const std::array<double, 8>& ue) {
  Tensor2 grad{};
  for (int a = 0; a < 4; ++a) {
    grad[0][0] += ue[2 * a] * qp.dN[a][0];
    grad[0][1] += ue[2 * a] * qp.dN[a][1];
    grad[1][0] += ue[2 * a + 1] * qp.dN[a][0];
    grad[1][1] += ue[2 * a + 1] * qp.dN[a][1];
  }
  return strain(grad);
}

inline void zero_constrained(Vector& r, const ConstraintTable& constraints) {
  for (std::size_t i = 0; i < constraints.size(); ++i)
    if (constraints[i]) r[static_cast<Eigen::Index>(i)] = 0.0;
}

}  // namespace detail

/// Mesh, discretization and material of one simulation. Holds the cached
/// sparsity patterns and the direct solvers reused across Newton steps.
class PhaseFieldModel {
 public:
  PhaseFieldModel(const Mesh& mesh, MaterialParams params)
      : mesh_(mesh),
        fe_(mesh_),
        udofs_(vector_dofs(mesh_)),
        phidofs_(scalar_dofs(mesh_)),
        params_(params),
        u_pattern_(mesh_, 2),
        phi_pattern_(mesh_, 1) {}

  PhaseFieldModel(const PhaseFieldModel&) = delete;
  PhaseFieldModel& operator=(const PhaseFieldModel&) = delete;

  const Mesh& mesh() const { return mesh_; }
  const FeSpace& fe() const { return fe_; }
  const DofMap& displacement_dofs() const { return udofs_; }
  const DofMap& phase_dofs() const { return phidofs_; }
  const MaterialParams& params() const { return params_; }
  std::size_t n_nodes() const { return mesh_.nodes.size(); }

  JacobianMode jacobian_mode = JacobianMode::analytic;

  // ---- Step 1 ------------------------------------------------------------

  /// Element residual of the displacement form; phi_a / u_a / L are nodal
  /// values on the cell. `stabilize` drops the L term when false.
  std::array<double, 8> elasticity_element_residual(std::size_t c, const std::array<double, 8>& ue,
                                                    const std::array<double, 8>& ua,
                                                    const std::array<double, 4>& phia,
                                                    const std::array<double, 4>& Le) const {
    std::array<double, 8> re{};
    for (int q = 0; q < FeSpace::n_qp; ++q) {
      const auto& qp = fe_.qp(c, q);
      const SymTensor2 e = detail::strain_at(qp, ue);
      const auto split = stress_split(e, params_.mu, params_.lambda);
      const double g = degradation(detail::interpolate(qp.N, phia), params_.kappa);
      const SymTensor2 s = g * split.tensile + split.compressive;
      const double L = detail::interpolate(qp.N, Le);
      double du[2] = {0.0, 0.0};
      for (int a = 0; a < 4; ++a) {
        du[0] += qp.N[a] * (ue[2 * a] - ua[2 * a]);
        du[1] += qp.N[a] * (ue[2 * a + 1] - ua[2 * a + 1]);
      }
      for (int a = 0; a < 4; ++a) {
        const double dx = qp.dN[a][0], dy = qp.dN[a][1];
        re[2 * a] += (s.xx * dx + s.xy * dy + L * qp.N[a] * du[0]) * qp.JxW;
        re[2 * a + 1] += (s.xy * dx + s.yy * dy + L * qp.N[a] * du[1]) * qp.JxW;
      }
    }
    return re;
  }

  /// Row-major 8x8 element Jacobian, analytic split tangent.
  std::array<double, 64> elasticity_element_jacobian(std::size_t c, const std::array<double, 8>& ue,
                                                     const std::array<double, 4>& phia,
                                                     const std::array<double, 4>& Le) const {
    std::array<double, 64> ke{};
    for (int q = 0; q < FeSpace::n_qp; ++q) {
      const auto& qp = fe_.qp(c, q);
      const SymTensor2 e = detail::strain_at(qp, ue);
      const auto tangent = stress_split_tangent(e, params_.mu, params_.lambda);
      const double g = degradation(detail::interpolate(qp.N, phia), params_.kappa);
      const double L = detail::interpolate(qp.N, Le);
      Voigt3 D{};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) D[i][j] = g * tangent.tensile[i][j] + tangent.compressive[i][j];
      // B columns: strain (xx, yy, gamma) produced by unit dof (a, comp)
      std::array<std::array<double, 3>, 8> B{};
      for (int a = 0; a < 4; ++a) {
        B[2 * a] = {qp.dN[a][0], 0.0, qp.dN[a][1]};
        B[2 * a + 1] = {0.0, qp.dN[a][1], qp.dN[a][0]};
      }
      for (int j = 0; j < 8; ++j) {
        double DB[3];
        for (int k = 0; k < 3; ++k) DB[k] = D[k][0] * B[j][0] + D[k][1] * B[j][1] + D[k][2] * B[j][2];
        for (int i = 0; i < 8; ++i) {
          ke[i * 8 + j] += (B[i][0] * DB[0] + B[i][1] * DB[1] + B[i][2] * DB[2]) * qp.JxW;
        }
      }
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          const double m = L * qp.N[a] * qp.N[b] * qp.JxW;
          ke[(2 * a) * 8 + 2 * b] += m;
          ke[(2 * a + 1) * 8 + 2 * b + 1] += m;
        }
    }
    return ke;
  }

  /// Central finite differences of the element residual.
  std::array<double, 64> elasticity_element_jacobian_fd(std::size_t c, const std::array<double, 8>& ue,
                                                        const std::array<double, 8>& ua,
                                                        const std::array<double, 4>& phia,
                                                        const std::array<double, 4>& Le) const {
    double scale = 0.0;
    for (double v : ue) scale = std::max(scale, std::abs(v));
    const double step = 1e-6 * std::max(scale, 1e-3);
    std::array<double, 64> ke{};
    for (int j = 0; j < 8; ++j) {
      auto up = ue, dn = ue;
      up[j] += step;
      dn[j] -= step;
      const auto rp = elasticity_element_residual(c, up, ua, phia, Le);
      const auto rm = elasticity_element_residual(c, dn, ua, phia, Le);
      for (int i = 0; i < 8; ++i) ke[i * 8 + j] = (rp[i] - rm[i]) / (2.0 * step);
    }
    return ke;
  }

  /// Step-1 residual without constraint masking. `iter` supplies u and L,
  /// `anchor` supplies u_a and the phase field entering g.
  Vector elasticity_residual_raw(const FieldState& iter, const FieldState& anchor) const {
    Vector r = Vector::Zero(static_cast<Eigen::Index>(udofs_.n_dofs()));
    for (std::size_t c = 0; c < mesh_.cells.size(); ++c) {
      const auto& cell = mesh_.cells[c];
      const auto re = elasticity_element_residual(c, detail::gather_vector(iter.u, cell),
                                                  detail::gather_vector(anchor.u, cell),
                                                  detail::gather(anchor.phi, cell), detail::gather(iter.L, cell));
      for (int a = 0; a < 4; ++a) {
        r[static_cast<Eigen::Index>(2 * cell[a])] += re[2 * a];
        r[static_cast<Eigen::Index>(2 * cell[a] + 1)] += re[2 * a + 1];
      }
    }
    return r;
  }

  Vector elasticity_residual(const FieldState& iter, const FieldState& anchor,
                             const ConstraintTable& constraints) const {
    Vector r = elasticity_residual_raw(iter, anchor);
    detail::zero_constrained(r, constraints);
    return r;
  }

  /// Step-1 Jacobian before constraint application.
  SparseMatrix elasticity_jacobian(const FieldState& iter, const FieldState& anchor) const {
    SparseMatrix K = u_pattern_.zero_matrix();
    for (std::size_t c = 0; c < mesh_.cells.size(); ++c) {
      const auto& cell = mesh_.cells[c];
      const auto ue = detail::gather_vector(iter.u, cell);
      const auto phia = detail::gather(anchor.phi, cell);
      const auto Le = detail::gather(iter.L, cell);
      const auto ke = jacobian_mode == JacobianMode::analytic
                          ? elasticity_element_jacobian(c, ue, phia, Le)
                          : elasticity_element_jacobian_fd(c, ue, detail::gather_vector(anchor.u, cell), phia, Le);
      u_pattern_.add(K, c, ke.data());
    }
    return K;
  }

  // ---- Step 2 ------------------------------------------------------------

  struct PhaseCellData {
    std::array<double, 4> phi, anchor, old, xi, L;
    std::array<double, FeSpace::n_qp> energy;  // sigma+(u):e(u) at quadrature points
  };

  PhaseCellData phase_cell_data(std::size_t c, const FieldState& iter, const FieldState& anchor,
                                const Vector& phi_old) const {
    const auto& cell = mesh_.cells[c];
    PhaseCellData d{detail::gather(iter.phi, cell), detail::gather(anchor.phi, cell), detail::gather(phi_old, cell),
                    detail::gather(iter.xi, cell),  detail::gather(iter.L, cell),     {}};
    const auto ue = detail::gather_vector(iter.u, cell);
    for (int q = 0; q < FeSpace::n_qp; ++q)
      d.energy[q] = tensile_energy_density(detail::strain_at(fe_.qp(c, q), ue), params_.mu, params_.lambda);
    return d;
  }

  /// Step-2 residual. `iter` supplies u (already solved), phi, Xi and L;
  /// `anchor` supplies the previous outer iterate of phi.
  Vector phasefield_residual(const FieldState& iter, const FieldState& anchor, const Vector& phi_old) const {
    Vector r = Vector::Zero(static_cast<Eigen::Index>(phidofs_.n_dofs()));
    const double Gc = params_.Gc, eps = params_.eps;
    for (std::size_t c = 0; c < mesh_.cells.size(); ++c) {
      const auto& cell = mesh_.cells[c];
      const auto d = phase_cell_data(c, iter, anchor, phi_old);
      for (int q = 0; q < FeSpace::n_qp; ++q) {
        const auto& qp = fe_.qp(c, q);
        const double phi = detail::interpolate(qp.N, d.phi);
        double gx = 0.0, gy = 0.0;
        for (int a = 0; a < 4; ++a) {
          gx += d.phi[a] * qp.dN[a][0];
          gy += d.phi[a] * qp.dN[a][1];
        }
        const double source = detail::interpolate(qp.N, d.L) * (phi - detail::interpolate(qp.N, d.anchor)) +
                              (Gc / eps) * (phi - 1.0) + (1.0 - params_.kappa) * phi * d.energy[q];
        for (int a = 0; a < 4; ++a) {
          const double penalty = d.xi[a] + params_.gamma * positive_part(d.phi[a] - d.old[a]);
          r[static_cast<Eigen::Index>(cell[a])] +=
              ((source + penalty) * qp.N[a] + Gc * eps * (gx * qp.dN[a][0] + gy * qp.dN[a][1])) * qp.JxW;
        }
      }
    }
    return r;
  }

  /// Semismooth Jacobian of the Step-2 residual; the penalty contributes
  /// only where phi > phi_old strictly.
  SparseMatrix phasefield_jacobian(const FieldState& iter, const FieldState& anchor, const Vector& phi_old) const {
    SparseMatrix K = phi_pattern_.zero_matrix();
    const double Gc = params_.Gc, eps = params_.eps;
    for (std::size_t c = 0; c < mesh_.cells.size(); ++c) {
      const auto d = phase_cell_data(c, iter, anchor, phi_old);
      std::array<double, 16> ke{};
      for (int q = 0; q < FeSpace::n_qp; ++q) {
        const auto& qp = fe_.qp(c, q);
        const double reaction =
            detail::interpolate(qp.N, d.L) + Gc / eps + (1.0 - params_.kappa) * d.energy[q];
        for (int a = 0; a < 4; ++a) {
          for (int b = 0; b < 4; ++b)
            ke[a * 4 + b] += (reaction * qp.N[a] * qp.N[b] +
                              Gc * eps * (qp.dN[a][0] * qp.dN[b][0] + qp.dN[a][1] * qp.dN[b][1])) *
                             qp.JxW;
          if (d.phi[a] - d.old[a] > 0.0) ke[a * 4 + a] += params_.gamma * qp.N[a] * qp.JxW;
        }
      }
      phi_pattern_.add(K, c, ke.data());
    }
    return K;
  }

  DirectSolver& displacement_solver() { return u_solver_; }
  DirectSolver& phase_solver() { return phi_solver_; }

 private:
  Mesh mesh_;
  FeSpace fe_;
  DofMap udofs_;
  DofMap phidofs_;
  MaterialParams params_;
  detail::AssemblyPattern u_pattern_;
  detail::AssemblyPattern phi_pattern_;
  DirectSolver u_solver_;
  DirectSolver phi_solver_;
};

// ---------------------------------------------------------------------------
// Newton

struct NewtonOptions {
  double tol = 1e-8;
  int max_iter = 50;
  /// Backtrack (halving) while the residual norm fails to decrease.
  bool monotone_backtracking = true;
  int max_backtracks = 8;
};

struct NewtonReport {
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  std::vector<double> history;  // residual norms, initial guess first
};

/// Newton's method on a problem exposing
///   Vector residual(const Vector&)              (constrained rows zeroed)
///   Vector solve_linearized(const Vector& x, const Vector& rhs)
/// where solve_linearized returns J(x)^{-1} rhs with homogeneous constraints.
template <class Problem>
std::pair<Vector, NewtonReport> newton_solve(Problem& problem, Vector x, const NewtonOptions& opts = {}) {
  NewtonReport report;
  Vector r = problem.residual(x);
  double norm = r.norm();
  report.history.push_back(norm);
  while (!(norm <= opts.tol) && report.iterations < opts.max_iter) {
    const Vector dx = problem.solve_linearized(x, -r);
    double step = 1.0;
    Vector trial = x + dx;
    Vector r_trial = problem.residual(trial);
    double trial_norm = r_trial.norm();
    for (int k = 0; opts.monotone_backtracking && k < opts.max_backtracks && !(trial_norm < norm); ++k) {
      step *= 0.5;
      trial = x + step * dx;
      r_trial = problem.residual(trial);
      trial_norm = r_trial.norm();
    }
    x = std::move(trial);
    r = std::move(r_trial);
    norm = trial_norm;
    ++report.iterations;
    report.history.push_back(norm);
    if (!std::isfinite(norm)) break;
  }
  report.final_residual = norm;
  report.converged = norm <= opts.tol;
  return {std::move(x), std::move(report)};
}

/// Step 1 as a Newton problem over the full displacement vector.
class ElasticityProblem {
 public:
  ElasticityProblem(PhaseFieldModel& model, const FieldState& anchor, const Vector& L,
                    const ConstraintTable& constraints)
      : model_(model), anchor_(anchor), constraints_(constraints) {
    work_.L = L;
  }

  Vector residual(const Vector& u) {
    work_.u = u;
    return model_.elasticity_residual(work_, anchor_, constraints_);
  }

  Vector solve_linearized(const Vector& u, const Vector& rhs) {
    work_.u = u;
    SparseMatrix K = model_.elasticity_jacobian(work_, anchor_);
    Vector b = rhs;
    apply_dirichlet(K, b, homogeneous());
    return model_.displacement_solver().solve(K, b);
  }

 private:
  const ConstraintTable& homogeneous() {
    if (zero_.empty()) {
      zero_.resize(constraints_.size());
      for (std::size_t i = 0; i < constraints_.size(); ++i)
        if (constraints_[i]) zero_[i] = 0.0;
    }
    return zero_;
  }

  PhaseFieldModel& model_;
  const FieldState& anchor_;
  const ConstraintTable& constraints_;
  ConstraintTable zero_;
  FieldState work_;
};

/// Step 2 as a Newton problem over the nodal phase field.
class PhaseFieldProblem {
 public:
  PhaseFieldProblem(PhaseFieldModel& model, const FieldState& iter, const FieldState& anchor, const Vector& phi_old)
      : model_(model), work_(iter), anchor_(anchor), phi_old_(phi_old) {}

  Vector residual(const Vector& phi) {
    work_.phi = phi;
    return model_.phasefield_residual(work_, anchor_, phi_old_);
  }

  Vector solve_linearized(const Vector& phi, const Vector& rhs) {
    work_.phi = phi;
    return model_.phase_solver().solve(model_.phasefield_jacobian(work_, anchor_, phi_old_), rhs);
  }

 private:
  PhaseFieldModel& model_;
  FieldState work_;
  const FieldState& anchor_;
  const Vector& phi_old_;
};

/// Copy of `u` with every constrained entry set to its prescribed value.
inline Vector with_constraints(Vector u, const ConstraintTable& constraints) {
  for (std::size_t i = 0; i < constraints.size(); ++i)
    if (constraints[i]) u[static_cast<Eigen::Index>(i)] = *constraints[i];
  return u;
}

}  // namespace pfls
