// Acceptance suite A1-A11. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "pfls/io.hpp"
#include "pfls/lscheme.hpp"

using namespace pfls;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(const char* id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s (%s)\n", id, ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

SymTensor2 random_tensor(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-10.0, 10.0);
  const double xx = d(rng), yy = d(rng), xy = d(rng);
  return {xx, yy, xy};
}

constexpr double mu = 80.77, lambda = 121.15;

void a1_split_reconstruction() {
  std::mt19937_64 rng(101);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int s = 0; s < 10000; ++s) {
    const auto e = random_tensor(rng);
    const auto split = stress_split(e, mu, lambda);
    const double tr = e.xx + e.yy;
    const double enorm = std::sqrt(e.xx * e.xx + e.yy * e.yy + 2 * e.xy * e.xy);
    const double err = std::max({std::abs(split.tensile.xx + split.compressive.xx - (2 * mu * e.xx + lambda * tr)),
                                 std::abs(split.tensile.yy + split.compressive.yy - (2 * mu * e.yy + lambda * tr)),
                                 std::abs(split.tensile.xy + split.compressive.xy - 2 * mu * e.xy)});
    worst = std::max(worst, err / enorm);
  }
  const double elapsed = seconds_since(t0);
  report("A1", "split reconstruction", worst <= 1e-10 && elapsed < 1.0,
         fmt("max error/|e| %.2e, %.3f s", worst, elapsed));
}

void a2_spectral_correctness() {
  std::mt19937_64 rng(101);  // same sample as A1
  double worst = 0.0, worst_psd = 0.0, worst_nsd = 0.0;
  for (int s = 0; s < 10000; ++s) {
    const auto e = random_tensor(rng);
    const auto ev = oracle::jacobi_eigenvalues(e.xx, e.yy, e.xy);
    const auto p = positive_part_tensor(e);
    const auto pv = oracle::jacobi_eigenvalues(p.xx, p.yy, p.xy);
    worst = std::max({worst, std::abs(pv[0] - std::max(ev[0], 0.0)), std::abs(pv[1] - std::max(ev[1], 0.0))});
    worst_psd = std::max(worst_psd, -pv[1]);
    const auto nv = oracle::jacobi_eigenvalues(e.xx - p.xx, e.yy - p.yy, e.xy - p.xy);
    worst_nsd = std::max(worst_nsd, nv[0]);
  }
  report("A2", "spectral correctness", worst <= 1e-10 && worst_psd <= 1e-10 && worst_nsd <= 1e-10,
         fmt("max eigenvalue error %.2e, ", worst) + fmt("min eig(e+) %.2e, max eig(e-e+) %.2e", -worst_psd, worst_nsd));
}

template <class Residual>
double fd_error(const SparseMatrix& J, const Vector& x, Residual residual, double step, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    Vector d(x.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = n01(rng);
    d.normalize();
    const Vector fd = (residual(Vector(x + step * d)) - residual(Vector(x - step * d))) / (2 * step);
    const Vector an = J * d;
    worst = std::max(worst, (an - fd).norm() / an.norm());
  }
  return worst;
}

void a3_jacobians() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Mesh mesh = generate_unit_square_mesh(1);  // 4x4 cells
  MaterialParams p{mu, lambda, 2.7e-3, 1e-10, 2 * mesh.h, 0.0};
  p.gamma = 1e3 * p.Gc / p.eps;
  PhaseFieldModel model(mesh, p);
  const auto n = static_cast<Eigen::Index>(mesh.nodes.size());
  FieldState iter = FieldState::initial(mesh.nodes.size());
  FieldState anchor = iter;
  Vector old(n);
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    iter.u[i] = 1e-3 * (2 * unit(rng) - 1);
    anchor.u[i] = iter.u[i] + 1e-4 * (2 * unit(rng) - 1);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    iter.phi[i] = 0.1 + 0.8 * unit(rng);
    anchor.phi[i] = 0.1 + 0.8 * unit(rng);
    iter.xi[i] = unit(rng);
    iter.L[i] = 1e-2 * unit(rng);
    old[i] = iter.phi[i] + (unit(rng) < 0.5 ? -1 : 1) * (0.05 + 0.1 * unit(rng));
  }
  FieldState work = iter;
  const double eu = fd_error(model.elasticity_jacobian(iter, anchor), iter.u,
                             [&](const Vector& u) {
                               work.u = u;
                               return Vector(model.elasticity_residual_raw(work, anchor));
                             },
                             1e-8, rng);
  work = iter;
  const double ep = fd_error(model.phasefield_jacobian(iter, anchor, old), iter.phi,
                             [&](const Vector& phi) {
                               work.phi = phi;
                               return Vector(model.phasefield_residual(work, anchor, old));
                             },
                             1e-6, rng);
  report("A3", "Jacobian consistency", eu < 1e-4 && ep < 1e-4,
         fmt("elasticity %.2e, phase field %.2e", eu, ep));
}

Mesh example1_mesh(int r) { return insert_slit(generate_unit_square_mesh(r), {{0.0, 0.5}, {0.5, 0.5}}); }

MaterialParams example1_params(const Mesh& m) {
  MaterialParams p{mu, lambda, 2.7e-3, 1e-10, 2 * m.h, 0.0};
  p.gamma = 1e3 * p.Gc / p.eps;
  return p;
}

void a4_trivial_equilibrium() {
  const Mesh m = example1_mesh(2);
  PhaseFieldModel model(m, example1_params(m));
  const auto constraints = build_constraints(m, model.displacement_dofs(), shear_test_bcs(1.0), 0.0);
  bool ok = true;
  std::string detail;
  for (auto s : {Strategy::none, Strategy::constant, Strategy::dynamic, Strategy::dynamic_weighted}) {
    LSchemeConfig cfg;
    cfg.strategy = s;
    if (s == Strategy::constant) cfg.L0 = 1e-2;
    const auto r = outer_iterate(model, FieldState::initial(m.nodes.size()), 0.0, constraints, cfg);
    const double du = r.state.u.lpNorm<Eigen::Infinity>();
    const double dphi = (r.state.phi.array() - 1.0).abs().maxCoeff();
    const double res = std::max(r.report.residual_u, r.report.residual_phi);
    const bool this_ok = r.report.converged && r.report.outer_iterations == 1 && du == 0.0 && dphi == 0.0 && res < 1e-6;
    ok = ok && this_ok;
    detail += std::string(to_string(s)) + ": " + std::to_string(r.report.outer_iterations) + " it" +
              fmt(", res %.1e; ", res);
  }
  report("A4", "trivial equilibrium", ok, detail.substr(0, detail.size() - 2));
}

struct ShearRun {
  std::vector<StepReport> reports;
  FieldState final_state;
  Mesh mesh;
  MaterialParams params;
  int max_iters = 0;
  bool all_converged = true;
  bool xi_monotone = true;
  bool region_monotone = true;
  bool region_from_tip = false;
  double worst_reaction_mismatch = 0.0;
  double seconds = 0.0;
};

ShearRun run_example1(int r, Strategy strategy, double a, double L0) {
  ShearRun run;
  const auto t0 = Clock::now();
  run.mesh = example1_mesh(r);
  run.params = example1_params(run.mesh);
  PhaseFieldModel model(run.mesh, run.params);
  LSchemeConfig cfg;
  cfg.strategy = strategy;
  cfg.a = a;
  cfg.L0 = L0;
  LoadingSchedule schedule;
  schedule.dt = 1e-4;
  schedule.steps = 150;
  schedule.bcs = shear_test_bcs(1.0);

  Vector last_xi;
  OuterObserver obs;
  obs.on_update = [&](int i, const FieldState& s) {
    if (i > 1) run.xi_monotone = run.xi_monotone && (s.xi.array() >= last_xi.array()).all();
    last_xi = s.xi;
  };
  std::set<std::size_t> cracked;
  const Point tip{0.5, 0.5};
  auto on_step = [&](const StepReport& rep, const OuterResult& res) {
    run.all_converged = run.all_converged && rep.converged;
    run.max_iters = std::max(run.max_iters, rep.outer_iterations);
    std::set<std::size_t> now;
    for (Eigen::Index k = 0; k < res.state.phi.size(); ++k)
      if (res.state.phi[k] < 0.1) now.insert(static_cast<std::size_t>(k));
    if (cracked.empty() && !now.empty())
      for (auto k : now) run.region_from_tip = run.region_from_tip || detail::distance(run.mesh.nodes[k], tip) <= 2 * run.params.eps;
    run.region_monotone = run.region_monotone && std::includes(now.begin(), now.end(), cracked.begin(), cracked.end());
    cracked = std::move(now);
    if (rep.converged) {
      const auto rf = oracle::reaction_force(model, res.state, BoundaryTag::top);
      run.worst_reaction_mismatch =
          std::max(run.worst_reaction_mismatch, std::abs(rep.Fx - rf[0]) / std::max(std::abs(rf[0]), 1e-300));
    }
  };
  auto result = run_loading_loop(model, schedule, cfg, obs, on_step);
  run.reports = std::move(result.reports);
  run.final_state = std::move(result.final_state);
  run.seconds = seconds_since(t0);
  std::printf("   run Ref %d %s a=%g L0=%g: max outer %d, final Fx %.5f, %.0f s\n", r,
              std::string(to_string(strategy)).c_str(), a, L0, run.max_iters, run.reports.back().Fx, run.seconds);
  std::fflush(stdout);
  return run;
}

void a5_crack_propagation(const ShearRun& run) {
  const auto peak = std::max_element(run.reports.begin(), run.reports.end(),
                                     [](const auto& x, const auto& y) { return x.Fx < y.Fx; });
  const double final_fx = run.reports.back().Fx;
  const double min_phi = run.final_state.phi.minCoeff();
  const bool interior_peak = peak != run.reports.begin() && peak + 1 != run.reports.end();
  const double drop = 1.0 - final_fx / peak->Fx;
  const bool ok = run.all_converged && min_phi < 0.1 && run.region_monotone && run.region_from_tip &&
                  interior_peak && drop >= 0.5;
  std::string detail = std::string(run.all_converged ? "all steps converged" : "unconverged steps") +
                       fmt(", min phi %.3g", min_phi) +
                       (run.region_monotone ? ", phi<0.1 region monotone" : ", phi<0.1 region shrank") +
                       (run.region_from_tip ? " from tip" : " not from tip") +
                       fmt(", peak Fx %.4f at step %.0f", peak->Fx, static_cast<double>(peak->step)) +
                       fmt(", final Fx %.4f, drop %.1f%%", final_fx, 100 * drop);
  report("A5", "Example 1 crack propagation", ok, detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  a1_split_reconstruction();
  a2_spectral_correctness();
  a3_jacobians();
  a4_trivial_equilibrium();

  const ShearRun dyn5 = run_example1(4, Strategy::dynamic, 5.0, 1e-10);
  a5_crack_propagation(dyn5);

  const ShearRun dyn20 = run_example1(4, Strategy::dynamic, 20.0, 1e-10);
  const ShearRun constant = run_example1(4, Strategy::constant, 5.0, 1e-2);
  const int max_outer = LSchemeConfig{}.max_outer;
  report("A6", "iteration-count ordering",
         dyn20.max_iters <= dyn5.max_iters && dyn5.max_iters <= constant.max_iters &&
             constant.max_iters <= max_outer && dyn5.max_iters <= 30 && dyn20.max_iters <= 20,
         "a=20: " + std::to_string(dyn20.max_iters) + ", a=5: " + std::to_string(dyn5.max_iters) +
             ", constant: " + std::to_string(constant.max_iters) + ", max_outer " + std::to_string(max_outer));

  const double f5 = dyn5.reports.back().Fx, fc = constant.reports.back().Fx;
  const double rel = std::abs(f5 - fc) / std::abs(fc);
  report("A7", "strategy insensitivity", rel <= 0.05,
         fmt("final Fx dynamic %.5f, constant %.5f", f5, fc) + fmt(", relative difference %.2f%%", 100 * rel));

  const ShearRun fine = run_example1(5, Strategy::dynamic, 5.0, 1e-10);
  const double ratio = static_cast<double>(std::max(fine.max_iters, dyn5.max_iters)) /
                       std::max(1, std::min(fine.max_iters, dyn5.max_iters));
  report("A8", "mesh robustness", ratio <= 2.0 && fine.all_converged,
         "Ref 4: " + std::to_string(dyn5.max_iters) + ", Ref 5: " + std::to_string(fine.max_iters) +
             fmt(", ratio %.2f", ratio));

  {
    LSchemeConfig cfg;
    const Eigen::Index n = 11;
    Vector gd = Vector::Ones(n), gw = Vector::Ones(n);
    Vector phi(n);
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> neg(-1.0, 0.0);
    for (Eigen::Index k = 0; k < n; ++k) phi[k] = k == 0 ? 0.0 : neg(rng);  // clamps to 0
    bool exact = true, identical = true;
    for (int i = 1; i <= 40; ++i) {
      gd = update_stabilization(Strategy::dynamic, i, gd, phi, cfg);
      gw = update_stabilization(Strategy::dynamic_weighted, i, gw, phi, cfg);
      const Vector Ld = stabilization_field(Strategy::dynamic, gd, cfg);
      const Vector Lw = stabilization_field(Strategy::dynamic_weighted, gw, cfg);
      // 5^i * 1e-10 computed in exact integer arithmetic below the cap
      std::uint64_t p5 = 1;
      for (int k = 0; k < std::min(i, 27); ++k) p5 *= 5;
      const double want = i <= 27 ? std::min(static_cast<double>(p5) * 1e-10, 1e6) : 1e6;
      for (Eigen::Index k = 0; k < n; ++k) {
        exact = exact && Ld[k] == want;
        identical = identical && Ld[k] == Lw[k];
      }
    }
    const bool xi = dyn5.xi_monotone && dyn20.xi_monotone && constant.xi_monotone && fine.xi_monotone;
    report("A9", "update laws", exact && identical && xi,
           std::string(exact ? "dynamic L exact" : "dynamic L mismatch") +
               (identical ? ", weighted(phi<=0) bit-identical" : ", weighted differs") +
               (xi ? ", Xi nondecreasing in every step" : ", Xi decreased"));
  }

  report("A10", "load functional vs reaction force", dyn5.worst_reaction_mismatch <= 0.05,
         fmt("max relative difference over converged steps %.3f%%", 100 * dyn5.worst_reaction_mismatch));

  {
    std::ostringstream first, second;
    write_mesh(dyn5.mesh, first);
    std::istringstream in(first.str());
    const Mesh back = read_mesh(in);
    write_mesh(back, second);
    bool mesh_ok = first.str() == second.str() && back.nodes.size() == dyn5.mesh.nodes.size() &&
                   back.cells == dyn5.mesh.cells;
    for (std::size_t k = 0; mesh_ok && k < back.nodes.size(); ++k)
      mesh_ok = back.nodes[k].x == dyn5.mesh.nodes[k].x && back.nodes[k].y == dyn5.mesh.nodes[k].y;

    std::string vtk_detail = "vtk ok";
    bool vtk_ok = true;
    try {
      std::stringstream vtk;
      write_vtk(dyn5.final_state, dyn5.mesh, vtk, "acceptance final state");
      const auto f = oracle::parse_vtk(vtk);
      vtk_ok = f.points.size() == dyn5.mesh.nodes.size() && f.cells.size() == dyn5.mesh.cells.size() &&
               f.point_data.count("phi") && f.point_data.count("u") && f.point_data.count("Xi") &&
               f.point_data.count("L");
      if (!vtk_ok) vtk_detail = "vtk content mismatch";
    } catch (const std::exception& e) {
      vtk_ok = false;
      vtk_detail = e.what();
    }

    std::ostringstream csv;
    write_series_csv(dyn5.reports, csv);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    bool csv_ok = line == "t,u_top,Fx,Fy,outer_iters,converged,maxL,min_phi";
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
      ++rows;
      csv_ok = csv_ok && std::count(line.begin(), line.end(), ',') == 7;
    }
    csv_ok = csv_ok && rows == dyn5.reports.size();
    report("A11", "format fidelity", mesh_ok && vtk_ok && csv_ok,
           std::string(mesh_ok ? "mesh round trip bit-exact" : "mesh round trip differs") + ", " + vtk_detail +
               (csv_ok ? ", csv header and rows ok" : ", csv schema mismatch"));
  }

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
