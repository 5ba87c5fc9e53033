/**
 * @file   lscheme.hpp
 *
 * @brief  Staggered L-scheme over loading steps with constant, dynamic and
 *         phase-field weighted stabilization and augmented Lagrangian
 *         penalty updates.
 *
 * One outer iteration i at loading time t^n:
 *   1. u^i   from Step 1 with (u^{i-1}, phi^{i-1}) and L^{i-1};
 *   2. phi^i from Step 2 with u^i, anchor phi^{i-1}, Xi^{i-1} and L^{i-1};
 *   3. L^i = a L^{i-1} (dynamic) or (1 - phi^i) a L^{i-1} (weighted);
 *   4. Xi^i = Xi^{i-1} + gamma [phi^i - phi^{n-1}]^+;
 *   5. stop when max(|a_u|, |a_phi|) <= TOL, both forms evaluated at the new
 *      iterates (see outer_residuals).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pfls/subsolvers.hpp"
#include "pfls/surface_load.hpp"

namespace pfls {

enum class Strategy { none, constant, dynamic, dynamic_weighted };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::none: return "none";
    case Strategy::constant: return "constant";
    case Strategy::dynamic: return "dynamic";
    case Strategy::dynamic_weighted: return "dynamic_weighted";
  }
  return "none";
}

inline std::optional<Strategy> parse_strategy(std::string_view name) {
  for (auto s : {Strategy::none, Strategy::constant, Strategy::dynamic, Strategy::dynamic_weighted})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

struct LSchemeConfig {
  Strategy strategy = Strategy::dynamic;
  double L0 = 1e-10;
  double a = 5.0;
  double L_max = 1e6;
  double tol = 1e-6;
  int max_outer = 500;
  bool reset_L_each_step = true;
  bool reset_xi_each_step = true;
  NewtonOptions newton;

  void validate() const {
    const bool dyn = strategy == Strategy::dynamic || strategy == Strategy::dynamic_weighted;
    if (dyn && !(a > 1.0)) throw std::invalid_argument("lscheme: a must exceed 1 for dynamic strategies");
    if (!(L0 >= 0.0 && L0 <= L_max)) throw std::invalid_argument("lscheme: need 0 <= L0 <= L_max");
    if (!(tol > 0.0)) throw std::invalid_argument("lscheme: tol must be positive");
    if (max_outer < 1) throw std::invalid_argument("lscheme: max_outer must be at least 1");
  }
};

/// Growth multipliers (relative to L0) after update i >= 1. Tracking the
/// multiplier instead of L itself keeps L = a^i L0 exact for integer a.
inline Vector update_stabilization(Strategy strategy, int i, const Vector& growth_prev, const Vector& phi,
                                   const LSchemeConfig& cfg) {
  if (i < 1) throw std::invalid_argument("update_stabilization: iteration index starts at 1");
  const double cap = cfg.L0 > 0.0 ? cfg.L_max / cfg.L0 : std::numeric_limits<double>::infinity();
  Vector growth = growth_prev;
  switch (strategy) {
    case Strategy::none:
    case Strategy::constant: break;
    case Strategy::dynamic:
      for (Eigen::Index k = 0; k < growth.size(); ++k) growth[k] = std::min(growth[k] * cfg.a, cap);
      break;
    case Strategy::dynamic_weighted:
      for (Eigen::Index k = 0; k < growth.size(); ++k) {
        const double factor = (1.0 - std::clamp(phi[k], 0.0, 1.0)) * cfg.a;
        growth[k] = std::clamp(growth[k] * factor, 1.0, cap);
      }
      break;
  }
  return growth;
}

/// Nodal L for the given growth multipliers.
inline Vector stabilization_field(Strategy strategy, const Vector& growth, const LSchemeConfig& cfg) {
  switch (strategy) {
    case Strategy::none: return Vector::Zero(growth.size());
    case Strategy::constant: return Vector::Constant(growth.size(), cfg.L0);
    case Strategy::dynamic:
    case Strategy::dynamic_weighted: break;
  }
  Vector L(growth.size());
  for (Eigen::Index k = 0; k < growth.size(); ++k) L[k] = std::min(growth[k] * cfg.L0, cfg.L_max);
  return L;
}

inline Vector update_penalty(const Vector& xi_prev, const Vector& phi, const Vector& phi_prev_step, double gamma) {
  Vector xi = xi_prev;
  for (Eigen::Index k = 0; k < xi.size(); ++k) xi[k] += gamma * positive_part(phi[k] - phi_prev_step[k]);
  return xi;
}

struct StepReport {
  int step = 0;
  double t = 0.0;
  double u_top = 0.0;
  int outer_iterations = 0;
  bool converged = false;
  double residual_u = 0.0;
  double residual_phi = 0.0;
  double max_L = 0.0;
  double Fx = 0.0;
  double Fy = 0.0;
  double min_phi = 1.0;
};

struct OuterResiduals {
  double u = 0.0;
  double phi = 0.0;
  double max() const { return std::max(u, phi); }
};

/// Stopping residuals of an outer iterate. `current` holds (u^i, phi^i,
/// Xi^i) and the L used in the solves of iteration i; `previous` holds
/// (u^{i-1}, phi^{i-1}). Each form keeps its stabilization anchored at the
/// previous iterate and sees every other argument at the new iterate, so the
/// L terms stay as solved while the coupling data are refreshed.
inline OuterResiduals outer_residuals(const PhaseFieldModel& model, const FieldState& current,
                                      const FieldState& previous, const Vector& phi_prev_step,
                                      const ConstraintTable& constraints) {
  FieldState anchor_u = previous;
  anchor_u.phi = current.phi;
  OuterResiduals r;
  r.u = model.elasticity_residual(current, anchor_u, constraints).norm();
  r.phi = model.phasefield_residual(current, previous, phi_prev_step).norm();
  return r;
}

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IterationLog {
  int step = 0;
  int iteration = 0;
  double residual_u = 0.0;
  double residual_phi = 0.0;
  double max_L = 0.0;
};

enum class SolveStage { displacement, phase_field };

/// Optional hooks into the outer loop.
struct OuterObserver {
  std::function<void(const IterationLog&)> on_iteration;
  /// Called after each subproblem solve with the fields it consumed and
  /// produced: (iteration, stage, u_in, phi_in, output).
  std::function<void(int, SolveStage, const Vector&, const Vector&, const Vector&)> on_solve;
  /// Called once Xi^i is formed: (iteration, state holding u^i, phi^i, Xi^i).
  std::function<void(int, const FieldState&)> on_update;
};

struct OuterResult {
  FieldState state;            // L = stabilization used in the final solves
  FieldState previous_iterate;
  StepReport report;
};

inline double max_or_zero(const Vector& v) { return v.size() ? v.maxCoeff() : 0.0; }

inline OuterResult outer_iterate(PhaseFieldModel& model, const FieldState& prev_step, double t,
                                 const ConstraintTable& constraints, const LSchemeConfig& cfg,
                                 const OuterObserver& observer = {}, int step = 0) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(model.n_nodes());
  const Vector& phi_old = prev_step.phi;

  FieldState current = prev_step;
  if (cfg.reset_L_each_step || current.growth.size() != n) current.growth = Vector::Ones(n);
  if (cfg.reset_xi_each_step || current.xi.size() != n) current.xi = Vector::Zero(n);
  current.L = stabilization_field(cfg.strategy, current.growth, cfg);

  OuterResult result;
  result.report.step = step;
  result.report.t = t;
  FieldState previous = current;
  for (int i = 1; i <= cfg.max_outer; ++i) {
    previous = current;

    ElasticityProblem elasticity(model, previous, current.L, constraints);
    auto [u, u_report] = newton_solve(elasticity, with_constraints(previous.u, constraints), cfg.newton);
    if (!u_report.converged)
      throw SolverError("step " + std::to_string(step) + ", outer iteration " + std::to_string(i) +
                        ": displacement Newton stalled at residual " + std::to_string(u_report.final_residual));
    current.u = std::move(u);
    if (observer.on_solve) observer.on_solve(i, SolveStage::displacement, previous.u, previous.phi, current.u);

    PhaseFieldProblem phase(model, current, previous, phi_old);
    auto [phi, phi_report] = newton_solve(phase, previous.phi, cfg.newton);
    if (!phi_report.converged)
      throw SolverError("step " + std::to_string(step) + ", outer iteration " + std::to_string(i) +
                        ": phase-field Newton stalled at residual " + std::to_string(phi_report.final_residual));
    current.phi = std::move(phi);
    if (observer.on_solve) observer.on_solve(i, SolveStage::phase_field, current.u, previous.phi, current.phi);

    const Vector next_growth = update_stabilization(cfg.strategy, i, current.growth, current.phi, cfg);
    current.xi = update_penalty(current.xi, current.phi, phi_old, model.params().gamma);
    if (observer.on_update) observer.on_update(i, current);

    const auto res = outer_residuals(model, current, previous, phi_old, constraints);
    result.report.outer_iterations = i;
    result.report.residual_u = res.u;
    result.report.residual_phi = res.phi;
    result.report.max_L = max_or_zero(current.L);
    if (observer.on_iteration) observer.on_iteration({step, i, res.u, res.phi, result.report.max_L});

    if (res.max() <= cfg.tol) {
      result.report.converged = true;
      current.growth = next_growth;
      break;
    }
    current.growth = next_growth;
    if (i < cfg.max_outer) current.L = stabilization_field(cfg.strategy, current.growth, cfg);
  }
  result.report.min_phi = current.phi.size() ? current.phi.minCoeff() : 1.0;
  result.state = std::move(current);
  result.previous_iterate = std::move(previous);
  return result;
}

struct LoadingSchedule {
  double dt = 1e-4;  // s
  int steps = 150;
  BcSpec bcs;
  double ubar = 1.0;  // mm/s, reported as u_top = t * ubar
  BoundaryTag load_tag = BoundaryTag::top;
  LoadStress load_stress = LoadStress::degraded;
};

struct LoadingResult {
  std::vector<StepReport> reports;
  FieldState final_state;
};

/// Step callback; receives the finished report and converged state.
using StepCallback = std::function<void(const StepReport&, const OuterResult&)>;

inline LoadingResult run_loading_loop(PhaseFieldModel& model, const LoadingSchedule& schedule,
                                      const LSchemeConfig& cfg, const OuterObserver& observer = {},
                                      const StepCallback& on_step = {}) {
  if (schedule.steps < 0) throw std::invalid_argument("loading: step count must be nonnegative");
  if (!(schedule.dt > 0.0)) throw std::invalid_argument("loading: dt must be positive");
  LoadingResult out;
  out.final_state = FieldState::initial(model.n_nodes());
  for (int n = 1; n <= schedule.steps; ++n) {
    const double t = n * schedule.dt;
    const auto constraints = build_constraints(model.mesh(), model.displacement_dofs(), schedule.bcs, t);
    auto result = outer_iterate(model, out.final_state, t, constraints, cfg, observer, n);
    const auto load = surface_load(result.state, model.mesh(), model.params(), schedule.load_tag,
                                   schedule.load_stress);
    result.report.u_top = t * schedule.ubar;
    result.report.Fx = load.Fx;
    result.report.Fy = load.Fy;
    out.reports.push_back(result.report);
    if (on_step) on_step(result.report, result);
    out.final_state = std::move(result.state);
  }
  return out;
}

/// Progress line: step, i, |a_u|, |a_phi|, max L.
inline void log_iteration(std::FILE* stream, const IterationLog& log) {
  std::fprintf(stream, "step %4d  it %4d  |a_u| %.3e  |a_phi| %.3e  maxL %.3e\n", log.step, log.iteration,
               log.residual_u, log.residual_phi, log.max_L);
}

}  // namespace pfls
