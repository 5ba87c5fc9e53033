/**
 * @file   material.hpp
 *
 * @brief  Pointwise constitutive kernels of the phase-field fracture model:
 *         small strain, closed-form 2x2 symmetric eigendecomposition, the
 *         spectral tensile/compressive stress split, its tangent, and the
 *         degradation function.
 *
 * Lame parameters are interpreted in plane strain. Units are kN, mm.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace pfls {

struct SymTensor2 {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;

  double trace() const { return xx + yy; }
  /// Frobenius norm.
  double norm() const { return std::sqrt(xx * xx + yy * yy + 2.0 * xy * xy); }

  SymTensor2& operator+=(const SymTensor2& o) {
    xx += o.xx;
    yy += o.yy;
    xy += o.xy;
    return *this;
  }
  friend SymTensor2 operator+(SymTensor2 a, const SymTensor2& b) { return a += b; }
  friend SymTensor2 operator-(const SymTensor2& a, const SymTensor2& b) {
    return {a.xx - b.xx, a.yy - b.yy, a.xy - b.xy};
  }
  friend SymTensor2 operator*(double s, const SymTensor2& a) { return {s * a.xx, s * a.yy, s * a.xy}; }
  friend bool operator==(const SymTensor2&, const SymTensor2&) = default;

  static SymTensor2 identity() { return {1.0, 1.0, 0.0}; }
};

/// Double contraction a:b.
inline double contract(const SymTensor2& a, const SymTensor2& b) {
  return a.xx * b.xx + a.yy * b.yy + 2.0 * a.xy * b.xy;
}

/// Row-major 2x2 tensor, grad[i][j] = d u_i / d x_j.
using Tensor2 = std::array<std::array<double, 2>, 2>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct EigenPair2 {
  double lambda1 = 0.0;  // lambda1 >= lambda2
  double lambda2 = 0.0;
  Vec2 v1{1.0, 0.0};
  Vec2 v2{0.0, 1.0};
};

struct MaterialParams {
  double mu = 0.0;      // kN/mm^2
  double lambda = 0.0;  // kN/mm^2
  double Gc = 0.0;      // kN/mm
  double kappa = 0.0;
  double eps = 0.0;     // mm
  double gamma = 0.0;   // penalty weight

  void validate() const {
    if (!(mu > 0.0)) throw std::invalid_argument("material: mu must be positive");
    if (!(lambda >= 0.0)) throw std::invalid_argument("material: lambda must be nonnegative");
    if (!(Gc > 0.0)) throw std::invalid_argument("material: Gc must be positive");
    if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("material: kappa must lie in (0,1)");
    if (!(eps > 0.0)) throw std::invalid_argument("material: eps must be positive");
    if (!(gamma >= 0.0)) throw std::invalid_argument("material: gamma must be nonnegative");
  }
};

inline SymTensor2 strain(const Tensor2& grad_u) {
  return {grad_u[0][0], grad_u[1][1], 0.5 * (grad_u[0][1] + grad_u[1][0])};
}

inline double positive_part(double x) { return x > 0.0 ? x : 0.0; }

/// Eigenvalues and unit eigenvectors of a symmetric 2x2 tensor. Within
/// 1e-12 * max(1, |e|) of a repeated eigenvalue the axis-aligned basis is
/// returned.
inline EigenPair2 eig_sym2(const SymTensor2& e) {
  const double mean = 0.5 * (e.xx + e.yy);
  const double half_diff = 0.5 * (e.xx - e.yy);
  const double radius = std::hypot(half_diff, e.xy);
  EigenPair2 out;
  out.lambda1 = mean + radius;
  out.lambda2 = mean - radius;
  if (2.0 * radius < 1e-12 * std::max(1.0, e.norm())) return out;
  const double theta = 0.5 * std::atan2(e.xy, half_diff);
  const double c = std::cos(theta), s = std::sin(theta);
  out.v1 = {c, s};
  out.v2 = {-s, c};
  return out;
}

namespace detail {

inline SymTensor2 dyad(const Vec2& v) { return {v.x * v.x, v.y * v.y, v.x * v.y}; }

inline SymTensor2 sym_dyad(const Vec2& a, const Vec2& b) {
  return {2.0 * a.x * b.x, 2.0 * a.y * b.y, a.x * b.y + a.y * b.x};
}

/// a . T . b
inline double sandwich(const Vec2& a, const SymTensor2& t, const Vec2& b) {
  return a.x * (t.xx * b.x + t.xy * b.y) + a.y * (t.xy * b.x + t.yy * b.y);
}

/// Heaviside used for the tangent of [.]^+; the closed branch H(0) = 1 makes
/// the tensile tangent at zero strain equal to the full isotropic tangent.
inline double tensile_indicator(double x) { return x >= 0.0 ? 1.0 : 0.0; }

}  // namespace detail

/// e+ = P Lambda+ P^T.
inline SymTensor2 positive_part_tensor(const SymTensor2& e) {
  const auto eig = eig_sym2(e);
  return positive_part(eig.lambda1) * detail::dyad(eig.v1) + positive_part(eig.lambda2) * detail::dyad(eig.v2);
}

struct StressSplit {
  SymTensor2 tensile;
  SymTensor2 compressive;
};

inline StressSplit stress_split(const SymTensor2& e, double mu, double lambda) {
  const SymTensor2 e_pos = positive_part_tensor(e);
  const double tr = e.trace();
  const double tr_pos = positive_part(tr);
  StressSplit s;
  s.tensile = 2.0 * mu * e_pos + (lambda * tr_pos) * SymTensor2::identity();
  s.compressive = 2.0 * mu * (e - e_pos) + (lambda * (tr - tr_pos)) * SymTensor2::identity();
  return s;
}

inline double degradation(double phi, double kappa) { return (1.0 - kappa) * phi * phi + kappa; }

/// sigma+(e) : e.
inline double tensile_energy_density(const SymTensor2& e, double mu, double lambda) {
  return contract(stress_split(e, mu, lambda).tensile, e);
}

/// 3x3 material tangents in Voigt form (xx, yy, engineering shear) mapping
/// strain increments to stress increments (sigma_xx, sigma_yy, sigma_xy).
using Voigt3 = std::array<std::array<double, 3>, 3>;

struct SplitTangent {
  Voigt3 tensile{};
  Voigt3 compressive{};
};

/// Analytic derivative of the stress split. For distinct eigenvalues the
/// derivative of e+ in direction de is
///   sum_a H(l_a) (v_a.de.v_a) v_a v_a^T
///     + ([l_1]^+ - [l_2]^+)/(l_1 - l_2) (v_1.de.v_2)(v_1 v_2^T + v_2 v_1^T);
/// at a repeated eigenvalue the divided difference becomes H(l).
inline SplitTangent stress_split_tangent(const SymTensor2& e, double mu, double lambda) {
  const auto eig = eig_sym2(e);
  const double h1 = detail::tensile_indicator(eig.lambda1);
  const double h2 = detail::tensile_indicator(eig.lambda2);
  const double gap = eig.lambda1 - eig.lambda2;
  const double divided = gap > 0.0 ? (positive_part(eig.lambda1) - positive_part(eig.lambda2)) / gap
                                   : detail::tensile_indicator(eig.lambda1);
  const double h_tr = detail::tensile_indicator(e.trace());

  const SymTensor2 m1 = detail::dyad(eig.v1), m2 = detail::dyad(eig.v2);
  const SymTensor2 m12 = detail::sym_dyad(eig.v1, eig.v2);
  // unit strain directions for (xx, yy, engineering shear)
  const std::array<SymTensor2, 3> basis{SymTensor2{1.0, 0.0, 0.0}, SymTensor2{0.0, 1.0, 0.0},
                                        SymTensor2{0.0, 0.0, 0.5}};

  SplitTangent t;
  for (int col = 0; col < 3; ++col) {
    const SymTensor2& de = basis[col];
    const SymTensor2 de_pos = (h1 * detail::sandwich(eig.v1, de, eig.v1)) * m1 +
                              (h2 * detail::sandwich(eig.v2, de, eig.v2)) * m2 +
                              (divided * detail::sandwich(eig.v1, de, eig.v2)) * m12;
    const double dtr = de.trace();
    const SymTensor2 ds_pos = 2.0 * mu * de_pos + (lambda * h_tr * dtr) * SymTensor2::identity();
    const SymTensor2 ds_full = 2.0 * mu * de + (lambda * dtr) * SymTensor2::identity();
    const SymTensor2 ds_neg = ds_full - ds_pos;
    t.tensile[0][col] = ds_pos.xx;
    t.tensile[1][col] = ds_pos.yy;
    t.tensile[2][col] = ds_pos.xy;
    t.compressive[0][col] = ds_neg.xx;
    t.compressive[1][col] = ds_neg.yy;
    t.compressive[2][col] = ds_neg.xy;
  }
  return t;
}

}  // namespace pfls
