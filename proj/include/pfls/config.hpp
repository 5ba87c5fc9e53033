/**
 * @file   config.hpp
 *
 * @brief  Run configuration: INI-style file with sections [mesh],
 *         [material], [lscheme], [loading], [output], command-line
 *         overrides `--section.key=value`, and the PFLS_OUTPUT_DIR
 *         environment variable.
 *
 * Precedence, lowest first: file, PFLS_OUTPUT_DIR, command line.
 */
#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfls/lscheme.hpp"

namespace pfls {

inline constexpr const char* output_dir_env = "PFLS_OUTPUT_DIR";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BcPreset { shear, three_point_bending };

struct MeshSource {
  std::optional<int> refinements;  // generated unit square
  std::optional<SlitSpec> slit;
  std::string file;                // or imported mesh
};

/// Material inputs before the mesh is known. Exactly one of each
/// absolute/relative pair is set after parsing.
struct MaterialInputs {
  double mu = 0.0;
  double lambda = 0.0;
  double Gc = 0.0;  // kN/mm
  std::optional<double> kappa, kappa_over_h;
  std::optional<double> eps, eps_over_h;
  std::optional<double> gamma;
  double gamma_factor = 1e3;  // gamma = factor * Gc / eps when gamma is unset
};

struct LoadingConfig {
  double dt = 1e-4;
  int steps = 150;
  double ubar = 1.0;
  BcPreset bc = BcPreset::shear;
  BoundaryTag load_tag = BoundaryTag::top;
  LoadStress load_stress = LoadStress::degraded;
};

struct OutputConfig {
  std::string directory = "output";
  std::string csv = "series.csv";
  int vtk_every = 0;  // 0: final state only
  bool vtk = true;
  std::string log = "stderr";  // stderr, none, or a file path
};

struct RunConfig {
  MeshSource mesh;
  MaterialInputs material;
  LSchemeConfig lscheme;
  LoadingConfig loading;
  OutputConfig output;
};

struct Override {
  std::string section;
  std::string key;
  std::string value;
};

/// Splits `--section.key=value`; returns nullopt for anything else.
inline std::optional<Override> parse_override(std::string_view arg) {
  if (arg.substr(0, 2) != "--") return std::nullopt;
  arg.remove_prefix(2);
  const auto eq = arg.find('=');
  const auto dot = arg.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq || dot == 0 || dot + 1 == eq)
    return std::nullopt;
  return Override{std::string(arg.substr(0, dot)), std::string(arg.substr(dot + 1, eq - dot - 1)),
                  std::string(arg.substr(eq + 1))};
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Typed access to one section; remembers which keys were consumed.
class Section {
 public:
  Section(std::string name, const boost::property_tree::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool has(const std::string& key) {
    used_.insert(key);
    return tree_ && tree_->find(key) != tree_->not_found();
  }

  std::string text(const std::string& key) {
    if (!has(key)) throw ConfigError("config: missing required key [" + name_ + "] " + key);
    return trim(tree_->get<std::string>(key));
  }

  double number(const std::string& key) {
    const std::string s = text(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
      throw ConfigError("config: [" + name_ + "] " + key + ": expected a number, got '" + s + "'");
    return v;
  }

  int integer(const std::string& key) {
    const std::string s = text(key);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
      throw ConfigError("config: [" + name_ + "] " + key + ": expected an integer, got '" + s + "'");
    return v;
  }

  bool boolean(const std::string& key) {
    const std::string s = text(key);
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw ConfigError("config: [" + name_ + "] " + key + ": expected true or false, got '" + s + "'");
  }

  std::vector<double> numbers(const std::string& key, std::size_t count) {
    std::istringstream in(text(key));
    std::vector<double> v;
    for (std::string tok; in >> tok;) {
      double x = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ConfigError("config: [" + name_ + "] " + key + ": expected numbers, got '" + tok + "'");
      v.push_back(x);
    }
    if (v.size() != count)
      throw ConfigError("config: [" + name_ + "] " + key + ": expected " + std::to_string(count) + " numbers");
    return v;
  }

  template <class T>
  void maybe(const std::string& key, T& target) {
    if (!has(key)) return;
    if constexpr (std::is_same_v<T, double>) target = number(key);
    else if constexpr (std::is_same_v<T, int>) target = integer(key);
    else if constexpr (std::is_same_v<T, bool>) target = boolean(key);
    else if constexpr (std::is_same_v<T, std::string>) target = text(key);
    else if constexpr (std::is_same_v<T, std::optional<double>>) target = number(key);
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_)
      if (!used_.count(key)) throw ConfigError("config: unknown key [" + name_ + "] " + key);
  }

 private:
  std::string name_;
  const boost::property_tree::ptree* tree_;
  std::set<std::string> used_;
};

}  // namespace detail

/// Parses configuration text. Relative mesh paths are resolved against
/// `base_dir`.
inline RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {},
                                   const std::vector<Override>& overrides = {},
                                   const char* env_output_dir = std::getenv(output_dir_env)) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: line " + std::to_string(e.line()) + ": " + e.message());
  }

  const std::set<std::string> sections{"mesh", "material", "lscheme", "loading", "output"};
  for (const auto& [name, sub] : tree) {
    if (!sections.count(name)) {
      if (sub.empty()) throw ConfigError("config: key '" + name + "' outside of any section");
      throw ConfigError("config: unknown section [" + name + "]");
    }
  }
  if (env_output_dir && *env_output_dir) tree.put(pt::ptree::path_type("output/directory", '/'), env_output_dir);
  for (const auto& o : overrides) {
    if (!sections.count(o.section)) throw ConfigError("config: unknown section in override --" + o.section + "." + o.key);
    tree.put(pt::ptree::path_type(o.section + "/" + o.key, '/'), o.value);
  }

  auto section = [&](const std::string& name) {
    const auto it = tree.find(name);
    return detail::Section(name, it == tree.not_found() ? nullptr : &it->second);
  };

  RunConfig cfg;

  auto mesh = section("mesh");
  if (mesh.has("refinements") == mesh.has("file"))
    throw ConfigError("config: [mesh] needs exactly one of refinements, file");
  if (mesh.has("refinements")) {
    cfg.mesh.refinements = mesh.integer("refinements");
    if (*cfg.mesh.refinements < 0) throw ConfigError("config: [mesh] refinements must be nonnegative");
  } else {
    std::filesystem::path p = mesh.text("file");
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    cfg.mesh.file = p.string();
  }
  if (mesh.has("slit") && mesh.text("slit") != "none") {
    if (!cfg.mesh.refinements) throw ConfigError("config: [mesh] slit applies to generated meshes only");
    const auto v = mesh.numbers("slit", 4);
    cfg.mesh.slit = SlitSpec{{v[0], v[1]}, {v[2], v[3]}};
  }
  mesh.reject_unknown();

  auto mat = section("material");
  cfg.material.mu = mat.number("mu");
  cfg.material.lambda = mat.number("lambda");
  if (mat.has("Gc") == mat.has("Gc_N_per_mm"))
    throw ConfigError("config: [material] needs exactly one of Gc, Gc_N_per_mm");
  cfg.material.Gc = mat.has("Gc") ? mat.number("Gc") : 1e-3 * mat.number("Gc_N_per_mm");
  if (mat.has("kappa") == mat.has("kappa_over_h"))
    throw ConfigError("config: [material] needs exactly one of kappa, kappa_over_h");
  mat.maybe("kappa", cfg.material.kappa);
  mat.maybe("kappa_over_h", cfg.material.kappa_over_h);
  if (mat.has("eps") == mat.has("eps_over_h"))
    throw ConfigError("config: [material] needs exactly one of eps, eps_over_h");
  mat.maybe("eps", cfg.material.eps);
  mat.maybe("eps_over_h", cfg.material.eps_over_h);
  if (mat.has("gamma") && mat.has("gamma_factor"))
    throw ConfigError("config: [material] gamma and gamma_factor are mutually exclusive");
  mat.maybe("gamma", cfg.material.gamma);
  mat.maybe("gamma_factor", cfg.material.gamma_factor);
  mat.reject_unknown();

  auto ls = section("lscheme");
  if (ls.has("strategy")) {
    const auto name = ls.text("strategy");
    const auto s = parse_strategy(name);
    if (!s) throw ConfigError("config: [lscheme] strategy: unknown strategy '" + name + "'");
    cfg.lscheme.strategy = *s;
  }
  ls.maybe("L0", cfg.lscheme.L0);
  ls.maybe("a", cfg.lscheme.a);
  ls.maybe("L_max", cfg.lscheme.L_max);
  ls.maybe("tol", cfg.lscheme.tol);
  ls.maybe("max_outer", cfg.lscheme.max_outer);
  ls.maybe("reset_L", cfg.lscheme.reset_L_each_step);
  ls.maybe("reset_xi", cfg.lscheme.reset_xi_each_step);
  ls.maybe("newton_tol", cfg.lscheme.newton.tol);
  ls.maybe("newton_max_iter", cfg.lscheme.newton.max_iter);
  ls.maybe("newton_backtracking", cfg.lscheme.newton.monotone_backtracking);
  ls.reject_unknown();

  auto load = section("loading");
  load.maybe("dt", cfg.loading.dt);
  load.maybe("steps", cfg.loading.steps);
  load.maybe("ubar", cfg.loading.ubar);
  if (load.has("bc")) {
    const auto name = load.text("bc");
    if (name == "shear") cfg.loading.bc = BcPreset::shear;
    else if (name == "three_point_bending") cfg.loading.bc = BcPreset::three_point_bending;
    else throw ConfigError("config: [loading] bc: unknown preset '" + name + "'");
  }
  if (load.has("load_tag")) {
    const auto name = load.text("load_tag");
    const auto tag = parse_boundary_tag(name);
    if (!tag) throw ConfigError("config: [loading] load_tag: unknown tag '" + name + "'");
    cfg.loading.load_tag = *tag;
  }
  if (load.has("load_stress")) {
    const auto name = load.text("load_stress");
    if (name == "degraded") cfg.loading.load_stress = LoadStress::degraded;
    else if (name == "undegraded") cfg.loading.load_stress = LoadStress::undegraded;
    else throw ConfigError("config: [loading] load_stress: expected degraded or undegraded, got '" + name + "'");
  }
  load.reject_unknown();

  auto out = section("output");
  out.maybe("directory", cfg.output.directory);
  out.maybe("csv", cfg.output.csv);
  out.maybe("vtk_every", cfg.output.vtk_every);
  out.maybe("vtk", cfg.output.vtk);
  out.maybe("log", cfg.output.log);
  out.reject_unknown();

  if (cfg.loading.steps < 0) throw ConfigError("config: [loading] steps must be nonnegative");
  if (!(cfg.loading.dt > 0.0)) throw ConfigError("config: [loading] dt must be positive");
  if (cfg.output.vtk_every < 0) throw ConfigError("config: [output] vtk_every must be nonnegative");
  try {
    cfg.lscheme.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& path, const std::vector<Override>& overrides = {},
                              const char* env_output_dir = std::getenv(output_dir_env)) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), std::filesystem::path(path).parent_path(), overrides, env_output_dir);
}

inline Mesh build_mesh(const RunConfig& cfg) {
  if (cfg.mesh.refinements) {
    Mesh m = generate_unit_square_mesh(*cfg.mesh.refinements);
    return cfg.mesh.slit ? insert_slit(m, *cfg.mesh.slit) : m;
  }
  return load_mesh(cfg.mesh.file);
}

/// Material parameters with the h-relative entries resolved on `mesh`.
inline MaterialParams resolve_material(const MaterialInputs& in, const Mesh& mesh) {
  MaterialParams p;
  p.mu = in.mu;
  p.lambda = in.lambda;
  p.Gc = in.Gc;
  p.kappa = in.kappa ? *in.kappa : *in.kappa_over_h * mesh.h;
  p.eps = in.eps ? *in.eps : *in.eps_over_h * mesh.h;
  p.gamma = in.gamma ? *in.gamma : in.gamma_factor * p.Gc / p.eps;
  p.validate();
  return p;
}

inline BcSpec bc_spec(const LoadingConfig& loading) {
  return loading.bc == BcPreset::shear ? shear_test_bcs(loading.ubar) : three_point_bending_bcs(loading.ubar);
}

inline LoadingSchedule loading_schedule(const LoadingConfig& loading) {
  LoadingSchedule s;
  s.dt = loading.dt;
  s.steps = loading.steps;
  s.bcs = bc_spec(loading);
  s.ubar = loading.ubar;
  s.load_tag = loading.load_tag;
  s.load_stress = loading.load_stress;
  return s;
}

}  // namespace pfls
