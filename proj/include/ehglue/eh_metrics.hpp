#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "tensor.hpp"

namespace ehglue {

/// Vector field or covector with jet components.
using VecJ2 = std::array<J2, kDim>;
/// A symmetric 2-tensor field: point -> components with second jets.
using Sym2Field = std::function<Sym2Jet(const Point&)>;

inline std::array<J2, kDim> coordinate_jets(const Point& x) {
  return {J2::variable(0, x[0]), J2::variable(1, x[1]), J2::variable(2, x[2]), J2::variable(3, x[3])};
}

inline J2 jet_radius_squared(const Point& x) {
  J2 r;
  r.v = norm2(x);
  for (int i = 0; i < kDim; ++i) {
    r.g[i] = 2.0 * x[i];
    r.h[sidx(i, i)] = 2.0;
  }
  return r;
}

/// r = |x| with gradient x/r and Hessian (I - x x^T / r^2) / r.
inline J2 jet_radius(const Point& x) {
  const double r2 = norm2(x);
  if (!(r2 > 0.0)) throw DomainError("jet_radius: r = 0 is a coordinate singularity");
  const double r = std::sqrt(r2);
  J2 j;
  j.v = r;
  for (int i = 0; i < kDim; ++i) j.g[i] = x[i] / r;
  for (int i = 0; i < kDim; ++i)
    for (int k = i; k < kDim; ++k) j.h[sidx(i, k)] = ((i == k ? 1.0 : 0.0) - x[i] * x[k] / r2) / r;
  return j;
}

struct EHParams {
  double epsilon = 1.0;

  explicit EHParams(double eps = 1.0) : epsilon(eps) {
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw DomainError("EHParams: epsilon must be finite and >= 0");
  }
  /// Evaluations closer than this to the origin are rejected.
  double r_min() const { return 1e-6 * epsilon; }
};

/// Linear one-forms r dr and r^2 alpha_k (k = 1, 2, 3). Their Cartesian
/// components coincide with those of r d/dr and the vector fields V_k.
inline std::array<VecJ2, 4> frame_forms(const Point& x) {
  const auto X = coordinate_jets(x);
  std::array<VecJ2, 4> b;
  b[0] = {X[0], X[1], X[2], X[3]};
  b[1] = {-X[1], X[0], -X[3], X[2]};
  b[2] = {-X[2], X[3], X[0], -X[1]};
  b[3] = {-X[3], -X[2], X[1], X[0]};
  return b;
}

inline void check_point(const Point& x, double r_min, const char* who) {
  const double r2 = norm2(x);
  if (!(r2 > 0.0)) throw DomainError(std::string(who) + ": evaluation at the origin");
  if (std::sqrt(r2) < r_min) throw DomainError(std::string(who) + ": |x| below the guard radius");
}

/// alpha_1, alpha_2, alpha_3 as covectors with jet components.
inline std::array<VecJ2, 3> alpha_forms(const Point& x) {
  check_point(x, 0.0, "alpha_forms");
  const auto b = frame_forms(x);
  const J2 ir2 = inv(jet_radius_squared(x));
  std::array<VecJ2, 3> a;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < kDim; ++i) a[k][i] = b[k + 1][i] * ir2;
  return a;
}

/// V_1, V_2, V_3 (contravariant components).
inline std::array<VecJ2, 3> vector_fields_V(const Point& x) {
  const auto b = frame_forms(x);
  return {b[1], b[2], b[3]};
}

/// The Euler field r d/dr.
inline VecJ2 euler_field(const Point& x) { return frame_forms(x)[0]; }

namespace detail {

struct EHFrame {
  Sym2Jet qa;  // (r dr)^2 + (r^2 alpha_1)^2
  Sym2Jet qb;  // (r^2 alpha_2)^2 + (r^2 alpha_3)^2
  J2 r2;
};

inline EHFrame eh_frame(const Point& x) {
  const auto b = frame_forms(x);
  EHFrame f;
  f.qa = sym_product(b[0], b[0]) + sym_product(b[1], b[1]);
  f.qb = sym_product(b[2], b[2]) + sym_product(b[3], b[3]);
  f.r2 = jet_radius_squared(x);
  return f;
}

}  // namespace detail

inline Sym2Jet eucl_metric_at(const Point&) { return Sym2Jet::identity(); }

/// Cartesian components of the Eguchi-Hanson metric
/// (qa) / W + W (qb) / r^4, W = sqrt(eps^4 + r^4).
inline Sym2Jet eh_metric_at(const EHParams& p, const Point& x) {
  check_point(x, p.r_min(), "eh_metric");
  if (p.epsilon == 0.0) return Sym2Jet::identity();
  const auto f = detail::eh_frame(x);
  const double e4 = std::pow(p.epsilon, 4);
  const J2 W = sqrt(f.r2 * f.r2 + e4);
  const J2 ir4 = inv(f.r2 * f.r2);
  return inv(W) * f.qa + (W * ir4) * f.qb;
}

/// Pullback of a field by an affine map y = A x + b:
/// (phi^* h)_ij(x) = A_ki A_lj h_kl(A x + b), with jets transformed accordingly.
struct AffineMap {
  Mat4 A{};
  Point b{};

  static AffineMap identity() {
    AffineMap m;
    for (int i = 0; i < kDim; ++i) m.A[i][i] = 1.0;
    return m;
  }
  Point apply(const Point& x) const {
    Point y = b;
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j) y[i] += A[i][j] * x[j];
    return y;
  }
  AffineMap compose(const AffineMap& inner) const {  // this o inner
    AffineMap m;
    m.b = apply(inner.b);
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j) {
        double s = 0.0;
        for (int k = 0; k < kDim; ++k) s += A[i][k] * inner.A[k][j];
        m.A[i][j] = s;
      }
    return m;
  }
  bool is_orthogonal(double tol = 1e-15) const {
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j) {
        double s = 0.0;
        for (int k = 0; k < kDim; ++k) s += A[k][i] * A[k][j];
        if (std::abs(s - (i == j ? 1.0 : 0.0)) > tol) return false;
      }
    return true;
  }
};

/// Jet of f(A x + b) from the jet of f at y = A x + b.
inline J2 pull_jet(const J2& f, const Mat4& A) {
  J2 r;
  r.v = f.v;
  for (int m = 0; m < kDim; ++m) {
    double s = 0.0;
    for (int p = 0; p < kDim; ++p) s += f.g[p] * A[p][m];
    r.g[m] = s;
  }
  for (int m = 0; m < kDim; ++m)
    for (int n = m; n < kDim; ++n) {
      double s = 0.0;
      for (int p = 0; p < kDim; ++p) {
        if (A[p][m] == 0.0) continue;
        for (int q = 0; q < kDim; ++q) s += A[p][m] * A[q][n] * f.hess(p, q);
      }
      r.h[sidx(m, n)] = s;
    }
  return r;
}

inline Sym2Jet pullback(const Sym2Jet& hy, const Mat4& A) {
  std::array<std::array<J2, kDim>, kDim> full;
  for (int k = 0; k < kDim; ++k)
    for (int l = 0; l < kDim; ++l) full[k][l] = pull_jet(hy(k, l), A);
  Sym2Jet r;
  for (int i = 0; i < kDim; ++i)
    for (int j = i; j < kDim; ++j) {
      J2 s;
      for (int k = 0; k < kDim; ++k) {
        if (A[k][i] == 0.0) continue;
        for (int l = 0; l < kDim; ++l) {
          if (A[l][j] == 0.0) continue;
          J2 t = full[k][l];
          t *= A[k][i] * A[l][j];
          s += t;
        }
      }
      r(i, j) = s;
    }
  return r;
}

inline Sym2Field pullback(Sym2Field f, const AffineMap& m) {
  return [f = std::move(f), m](const Point& x) { return pullback(f(m.apply(x)), m.A); };
}

inline AffineMap reflection_x1() {
  AffineMap m = AffineMap::identity();
  m.A[0][0] = -1.0;
  return m;
}

/// The reflected metric: pullback of g_eh under (x1, x2, x3, x4) -> (-x1, x2, x3, x4).
inline Sym2Jet eh_hat_metric_at(const EHParams& p, const Point& x) {
  const AffineMap R = reflection_x1();
  return pullback(eh_metric_at(p, R.apply(x)), R.A);
}

namespace detail {

/// Assemble the tensors
///   f1 (e11 + e22 - e33 - e44) + f2 (e13 + e31 +/- (e24 + e42)) + f3 (e14 + e41 -/+ (e23 + e32)),
/// with the upper signs for T and the lower ones for T-hat.
inline Sym2Jet assemble_T(const J2& f1, const J2& f2, const J2& f3, bool hat) {
  Sym2Jet t;
  t(0, 0) = f1;
  t(1, 1) = f1;
  t(2, 2) = -f1;
  t(3, 3) = -f1;
  t(0, 2) = f2;
  t(1, 3) = hat ? -f2 : f2;
  t(0, 3) = f3;
  t(1, 2) = hat ? f3 : -f3;
  return t;
}

inline Sym2Jet tensor_T_impl(const Point& y, bool hat) {
  check_point(y, 0.0, hat ? "tensor_That" : "tensor_T");
  const auto X = coordinate_jets(y);
  const J2 m6 = -pow(jet_radius_squared(y), -3.0);
  const J2 f1 = (X[0] * X[0] + X[1] * X[1] - X[2] * X[2] - X[3] * X[3]) * m6;
  const double s = hat ? -1.0 : 1.0;
  const J2 f2 = 2.0 * (X[0] * X[2] + s * (X[1] * X[3])) * m6;
  const J2 f3 = 2.0 * (X[0] * X[3] - s * (X[1] * X[2])) * m6;
  return assemble_T(f1, f2, f3, hat);
}

}  // namespace detail

/// Leading asymptotic tensor: g_eh = g_eucl + eps^4 T / 2 + O(eps^8 r^-8).
inline Sym2Jet tensor_T_at(const Point& x) { return detail::tensor_T_impl(x, false); }
inline Sym2Jet tensor_That_at(const Point& x) { return detail::tensor_T_impl(x, true); }

/// The kernel tensors o_1, o_2, o_3 of g_eh (closed forms).
inline Sym2Jet o_tensor_at(int i, const EHParams& p, const Point& x) {
  if (i < 1 || i > 3) throw DomainError("o_tensor: index must be 1, 2 or 3");
  check_point(x, p.r_min(), "o_tensor");
  const double e4 = std::pow(p.epsilon, 4);
  if (e4 == 0.0) return Sym2Jet{};
  const auto b = frame_forms(x);
  const J2 r2 = jet_radius_squared(x);
  const J2 w2 = r2 * r2 + e4;  // eps^4 + r^4
  if (i == 1) {
    const auto f = detail::eh_frame(x);
    const J2 W = sqrt(w2);
    const J2 ca = -e4 * inv(W * w2);
    const J2 cb = e4 * inv(W * r2 * r2);
    return ca * f.qa + cb * f.qb;
  }
  const J2 c = e4 * inv(w2 * r2);
  Sym2Jet o = (i == 2) ? sym_product(b[0], b[2]) - sym_product(b[1], b[3])
                       : sym_product(b[0], b[3]) + sym_product(b[1], b[2]);
  o *= 2.0;
  return c * o;
}

/// g_eh - g_eucl - eps^4 T / 2 evaluated without cancellation: with u = eps^4/r^4
/// and s = sqrt(1 + u),
///   (qa / r^2) u^2 (s+2) / (2 s (s+1)^2) - (qb / r^2) u^2 / (2 (s+1)^2).
inline Sym2 eh_expansion_remainder(const EHParams& p, const Point& x) {
  check_point(x, p.r_min(), "eh_expansion_remainder");
  const double r2 = norm2(x);
  const double u = std::pow(p.epsilon, 4) / (r2 * r2);
  const double s = std::sqrt(1.0 + u);
  const double q = u / (s + 1.0);
  const double ca = q * q * (s + 2.0) / (2.0 * s) / r2;
  const double cb = -q * q / 2.0 / r2;
  const auto f = detail::eh_frame(x);
  Sym2 r;
  for (int k = 0; k < kSym; ++k) r.c[k] = ca * f.qa.c[k].v + cb * f.qb.c[k].v;
  return r;
}

// Field wrappers.
inline Sym2Field eucl_metric() { return eucl_metric_at; }
inline Sym2Field eh_metric(EHParams p) { return [p](const Point& x) { return eh_metric_at(p, x); }; }
inline Sym2Field eh_hat_metric(EHParams p) { return [p](const Point& x) { return eh_hat_metric_at(p, x); }; }
inline Sym2Field tensor_T() { return tensor_T_at; }
inline Sym2Field tensor_That() { return tensor_That_at; }
inline Sym2Field o_tensor(int i, EHParams p) {
  if (i < 1 || i > 3) throw DomainError("o_tensor: index must be 1, 2 or 3");
  return [i, p](const Point& x) { return o_tensor_at(i, p, x); };
}

/// Generators of the symmetry group: four linear maps fixing the origin,
/// four reflections x_i -> 1 - x_i and four translations x_i -> x_i + 2.
inline std::vector<AffineMap> symmetry_generators() {
  std::vector<AffineMap> g;
  auto lin = [&](std::array<std::array<int, 2>, 4> rows) {  // row i: (source index, sign)
    AffineMap m;
    for (int i = 0; i < kDim; ++i) m.A[i][rows[i][0]] = rows[i][1];
    g.push_back(m);
  };
  lin({{{1, 1}, {0, -1}, {2, 1}, {3, 1}}});
  lin({{{0, 1}, {1, 1}, {3, 1}, {2, -1}}});
  lin({{{2, 1}, {3, 1}, {0, 1}, {1, 1}}});
  lin({{{2, -1}, {3, 1}, {0, -1}, {1, 1}}});
  for (int i = 0; i < kDim; ++i) {
    AffineMap m = AffineMap::identity();
    m.A[i][i] = -1.0;
    m.b[i] = 1.0;
    g.push_back(m);
  }
  for (int i = 0; i < kDim; ++i) {
    AffineMap m = AffineMap::identity();
    m.b[i] = 2.0;
    g.push_back(m);
  }
  return g;
}

/// Max over the sample of the Euclidean norm of (phi^* h - h).
inline double symmetry_check(const Sym2Field& field, const AffineMap& map, const std::vector<Point>& sample) {
  double worst = 0.0;
  for (const auto& x : sample) {
    const Sym2 d = pullback(field(map.apply(x)), map.A).value() - field(x).value();
    worst = std::max(worst, euclidean_norm(d));
  }
  return worst;
}

}  // namespace ehglue
