/**
 * @file   selfcheck.hpp
 *
 * @brief  Property checks run by `pfls check`: split reconstruction,
 *         spectral clamping, Jacobian consistency and the update laws.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pfls/lscheme.hpp"

namespace pfls {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

inline SymTensor2 random_tensor(std::mt19937_64& rng, double range) {
  std::uniform_real_distribution<double> d(-range, range);
  const double xx = d(rng), yy = d(rng), xy = d(rng);
  return {xx, yy, xy};
}

/// max |(J dx) - FD| / |J dx| over `directions` random directions.
template <class Residual, class Jacobian>
double directional_fd_error(const Vector& x, Residual residual, Jacobian jacobian, std::mt19937_64& rng,
                            int directions, double step) {
  std::normal_distribution<double> n01;
  const SparseMatrix J = jacobian(x);
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    Vector d(x.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = n01(rng);
    d /= d.norm();
    const Vector fd = (residual(x + step * d) - residual(x - step * d)) / (2.0 * step);
    const Vector an = J * d;
    worst = std::max(worst, (an - fd).norm() / std::max(an.norm(), 1e-300));
  }
  return worst;
}

}  // namespace detail

inline CheckResult check_split_reconstruction(int samples = 10000, unsigned seed = 1) {
  std::mt19937_64 rng(seed);
  const double mu = 80.77, lambda = 121.15;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto e = detail::random_tensor(rng, 10.0);
    const auto split = stress_split(e, mu, lambda);
    const SymTensor2 full = 2.0 * mu * e + lambda * e.trace() * SymTensor2::identity();
    const SymTensor2 sum = split.tensile + split.compressive;
    const double err = std::max({std::abs(sum.xx - full.xx), std::abs(sum.yy - full.yy), std::abs(sum.xy - full.xy)});
    worst = std::max(worst, err / std::max(e.norm(), 1e-300));
  }
  return {"split reconstruction", worst <= 1e-10, "max error/|e| " + detail::sci(worst)};
}

inline CheckResult check_spectral_clamp(int samples = 10000, unsigned seed = 2) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto e = detail::random_tensor(rng, 10.0);
    // eigenvalues from trace and determinant
    const double m = 0.5 * e.trace();
    const double r = std::hypot(0.5 * (e.xx - e.yy), e.xy);
    const double l1 = std::max(m + r, 0.0), l2 = std::max(m - r, 0.0);
    const auto p = positive_part_tensor(e);
    const double pm = 0.5 * p.trace(), pr = std::hypot(0.5 * (p.xx - p.yy), p.xy);
    worst = std::max({worst, std::abs(pm + pr - l1), std::abs(pm - pr - l2)});
  }
  return {"spectral clamp", worst <= 1e-10, "max eigenvalue error " + detail::sci(worst)};
}

/// 4x4-cell unit square with random state away from kinks.
inline std::vector<CheckResult> check_jacobians(unsigned seed = 3) {
  std::mt19937_64 rng(seed);
  const Mesh mesh = generate_unit_square_mesh(1);
  MaterialParams p{80.77, 121.15, 2.7e-3, 1e-10, 2.0 * mesh.h, 0.0};
  p.gamma = 1e3 * p.Gc / p.eps;
  PhaseFieldModel model(mesh, p);
  const auto n = static_cast<Eigen::Index>(model.n_nodes());

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FieldState iter = FieldState::initial(model.n_nodes());
  for (Eigen::Index i = 0; i < 2 * n; ++i) iter.u[i] = 1e-3 * (2.0 * unit(rng) - 1.0);
  Vector phi_old(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    iter.phi[i] = 0.1 + 0.8 * unit(rng);
    iter.xi[i] = unit(rng);
    iter.L[i] = 1e-2 * unit(rng);
    // keep |phi - phi_old| >= 0.05 so the penalty kink stays out of reach
    phi_old[i] = iter.phi[i] + (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.05 + 0.1 * unit(rng));
  }
  FieldState anchor = iter;
  for (Eigen::Index i = 0; i < 2 * n; ++i) anchor.u[i] += 1e-4 * (2.0 * unit(rng) - 1.0);
  for (Eigen::Index i = 0; i < n; ++i) anchor.phi[i] = 0.1 + 0.8 * unit(rng);

  FieldState work = iter;
  const double eu = detail::directional_fd_error(
      iter.u,
      [&](const Vector& u) {
        work.u = u;
        return model.elasticity_residual_raw(work, anchor);
      },
      [&](const Vector& u) {
        work.u = u;
        return model.elasticity_jacobian(work, anchor);
      },
      rng, 20, 1e-8);
  work = iter;
  const double ep = detail::directional_fd_error(
      iter.phi,
      [&](const Vector& phi) {
        work.phi = phi;
        return model.phasefield_residual(work, anchor, phi_old);
      },
      [&](const Vector& phi) {
        work.phi = phi;
        return model.phasefield_jacobian(work, anchor, phi_old);
      },
      rng, 20, 1e-6);
  return {{"elasticity Jacobian vs finite differences", eu < 1e-4, "max relative error " + detail::sci(eu)},
          {"phase-field Jacobian vs finite differences", ep < 1e-4, "max relative error " + detail::sci(ep)}};
}

inline CheckResult check_update_laws() {
  LSchemeConfig cfg;
  cfg.L0 = 1e-10;
  cfg.a = 5.0;
  cfg.L_max = 1e6;
  const Eigen::Index n = 7;
  Vector growth = Vector::Ones(n), growth_w = Vector::Ones(n);
  const Vector zero = Vector::Zero(n);
  bool ok = true;
  double expected_growth = 1.0;
  for (int i = 1; i <= 40; ++i) {
    growth = update_stabilization(Strategy::dynamic, i, growth, zero, cfg);
    growth_w = update_stabilization(Strategy::dynamic_weighted, i, growth_w, zero, cfg);
    expected_growth *= 5.0;
    const Vector L = stabilization_field(Strategy::dynamic, growth, cfg);
    const double expected = std::min(expected_growth * 1e-10, 1e6);
    for (Eigen::Index k = 0; k < n; ++k) ok = ok && L[k] == expected && growth_w[k] == growth[k];
  }
  return {"update laws", ok, ok ? "dynamic L exact, weighted(phi=0) identical" : "mismatch"};
}

inline std::vector<CheckResult> run_self_checks() {
  std::vector<CheckResult> out{check_split_reconstruction(), check_spectral_clamp()};
  for (auto& r : check_jacobians()) out.push_back(std::move(r));
  out.push_back(check_update_laws());
  return out;
}

}  // namespace pfls
