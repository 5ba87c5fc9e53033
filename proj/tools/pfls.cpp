// Command-line driver: run, mesh, check.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "pfls/selfcheck.hpp"
#include "pfls/simulation.hpp"

namespace {

constexpr int exit_failure = 1;
constexpr int exit_usage = 2;
constexpr int exit_unconverged = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<pfls::Override> collect_overrides(const std::vector<std::string>& extras) {
  std::vector<pfls::Override> out;
  for (const auto& arg : extras) {
    auto o = pfls::parse_override(arg);
    if (!o) throw UsageError("unrecognized argument '" + arg + "' (overrides look like --section.key=value)");
    out.push_back(*o);
  }
  return out;
}

int cmd_run(const std::string& path, const std::vector<std::string>& extras) {
  const auto cfg = pfls::parse_config(path, collect_overrides(extras));
  const auto summary = pfls::run_simulation(cfg);
  std::printf("steps %zu  csv %s  vtk files %zu\n", summary.reports.size(), summary.csv.string().c_str(),
              summary.vtk.size());
  if (!summary.all_converged) {
    std::fprintf(stderr, "warning: some loading steps did not converge (see the converged column)\n");
    return exit_unconverged;
  }
  return 0;
}

int cmd_mesh(const std::string& path, std::string out, const std::vector<std::string>& extras) {
  const auto cfg = pfls::parse_config(path, collect_overrides(extras));
  const auto mesh = pfls::build_mesh(cfg);
  if (out.empty()) {
    std::filesystem::create_directories(cfg.output.directory);
    out = (std::filesystem::path(cfg.output.directory) / "mesh.txt").string();
  }
  pfls::write_mesh(mesh, out);
  std::printf("nodes %zu  cells %zu  boundary facets %zu  h %.17g  -> %s\n", mesh.nodes.size(), mesh.cells.size(),
              mesh.boundary_facets.size(), mesh.h, out.c_str());
  return 0;
}

int cmd_check() {
  const auto results = pfls::run_self_checks();
  int passed = 0;
  for (const auto& r : results) {
    std::printf("%s  %s  (%s)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    passed += r.passed ? 1 : 0;
  }
  std::printf("%d/%zu checks passed\n", passed, results.size());
  return passed == static_cast<int>(results.size()) ? 0 : exit_failure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-static phase-field fracture with the staggered L-scheme"};
  app.require_subcommand(1);

  std::string config_path, mesh_out;
  auto* run = app.add_subcommand("run", "run a simulation; extra --section.key=value flags override the file");
  run->add_option("config", config_path, "configuration file")->required();
  run->allow_extras();

  auto* mesh = app.add_subcommand("mesh", "write the configured mesh only");
  mesh->add_option("config", config_path, "configuration file")->required();
  mesh->add_option("-o,--out", mesh_out, "mesh file (default: <output directory>/mesh.txt)");
  mesh->allow_extras();

  app.add_subcommand("check", "run the split, Jacobian and update-law self checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_usage;
  }

  try {
    if (*run) return cmd_run(config_path, run->remaining());
    if (*mesh) return cmd_mesh(config_path, mesh_out, mesh->remaining());
    return cmd_check();
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n%s", e.what(), app.help().c_str());
    return exit_usage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_failure;
  }
}
