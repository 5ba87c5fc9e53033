/**
 * @file   simulation.hpp
 *
 * @brief  Full run from a RunConfig: mesh, loading loop, CSV series, VTK
 *         snapshots and a parameter summary in the output directory.
 */
#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "pfls/config.hpp"
#include "pfls/io.hpp"

namespace pfls {

struct RunSummary {
  std::vector<StepReport> reports;
  std::filesystem::path csv;
  std::vector<std::filesystem::path> vtk;
  MaterialParams params;
  double h = 0.0;
  bool all_converged = true;
};

inline std::string vtk_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "state_%05d.vtk", step);
  return buf;
}

inline void write_run_info(const RunConfig& cfg, const MaterialParams& p, const Mesh& mesh, std::ostream& out) {
  using detail::exact;
  out << "nodes " << mesh.nodes.size() << "\ncells " << mesh.cells.size() << "\nh " << exact(mesh.h) << '\n';
  out << "mu " << exact(p.mu) << "\nlambda " << exact(p.lambda) << "\nGc " << exact(p.Gc) << "\nkappa "
      << exact(p.kappa) << "\neps " << exact(p.eps) << "\ngamma " << exact(p.gamma) << '\n';
  const auto& l = cfg.lscheme;
  out << "strategy " << to_string(l.strategy) << "\nL0 " << exact(l.L0) << "\na " << exact(l.a) << "\nL_max "
      << exact(l.L_max) << "\ntol " << exact(l.tol) << "\nmax_outer " << l.max_outer << '\n';
  out << "dt " << exact(cfg.loading.dt) << "\nsteps " << cfg.loading.steps << "\nubar " << exact(cfg.loading.ubar)
      << '\n';
}

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace detail

/// Runs the configured simulation. On a solver failure the series computed
/// so far is written before the exception propagates.
inline RunSummary run_simulation(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const Mesh mesh = build_mesh(cfg);
  RunSummary summary;
  summary.params = resolve_material(cfg.material, mesh);
  summary.h = mesh.h;

  const fs::path dir = cfg.output.directory;
  fs::create_directories(dir);
  {
    const std::string info = (dir / "run_info.txt").string();
    auto out = detail::open_for_writing(info);
    write_run_info(cfg, summary.params, mesh, out);
    detail::finish(out, info);
  }

  std::unique_ptr<std::FILE, detail::FileCloser> log_file;
  std::FILE* log = nullptr;
  if (cfg.output.log == "stderr") {
    log = stderr;
  } else if (cfg.output.log != "none") {
    log_file.reset(std::fopen(cfg.output.log.c_str(), "w"));
    if (!log_file) throw IoError("cannot open log file '" + cfg.output.log + "'");
    log = log_file.get();
  }

  PhaseFieldModel model(mesh, summary.params);
  const auto schedule = loading_schedule(cfg.loading);
  OuterObserver observer;
  if (log) observer.on_iteration = [log](const IterationLog& l) { log_iteration(log, l); };

  summary.csv = dir / cfg.output.csv;
  auto snapshot = [&](const StepReport& r, const FieldState& s) {
    const fs::path p = dir / vtk_name(r.step);
    char title[128];
    std::snprintf(title, sizeof title, "pfls step %d t=%.17g gamma=%.17g", r.step, r.t, summary.params.gamma);
    write_vtk(s, mesh, p.string(), title);
    summary.vtk.push_back(p);
  };

  try {
    const auto result = run_loading_loop(model, schedule, cfg.lscheme, observer,
                                         [&](const StepReport& r, const OuterResult& res) {
                                           summary.reports.push_back(r);
                                           summary.all_converged = summary.all_converged && r.converged;
                                           if (cfg.output.vtk && cfg.output.vtk_every > 0 &&
                                               r.step % cfg.output.vtk_every == 0)
                                             snapshot(r, res.state);
                                         });
    const bool final_written = cfg.output.vtk_every > 0 && !summary.reports.empty() &&
                               summary.reports.back().step % cfg.output.vtk_every == 0;
    if (cfg.output.vtk && !final_written)
      snapshot(summary.reports.empty() ? StepReport{} : summary.reports.back(), result.final_state);
  } catch (...) {
    if (!summary.reports.empty()) write_series_csv(summary.reports, summary.csv.string());
    throw;
  }
  if (!summary.reports.empty()) write_series_csv(summary.reports, summary.csv.string());
  return summary;
}

}  // namespace pfls
