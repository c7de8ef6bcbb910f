#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "curvature.hpp"
#include "eh_metrics.hpp"
#include "errors.hpp"
#include "glue.hpp"
#include "lattice.hpp"
#include "quadrature.hpp"

namespace ehglue {

using ScalarField = std::function<J2(const Point&)>;

/// A quadrature value with its error estimate.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Q_n with error max(|Q_n - Q_coarse|, 64 eps sum |w f|).
template <class F>
Estimate estimate_with(const QuadratureRule& fine, const QuadratureRule& coarse, F&& f) {
  const auto [v, a] = fine.integrate_abs(f);
  const double vc = coarse.integrate(f);
  return {v, std::max(std::abs(v - vc), 64.0 * kEps * a)};
}

}  // namespace detail

template <class F>
Estimate surface_estimate(F&& f, double rho, int order) {
  return detail::estimate_with(s3_quadrature(order, rho), s3_quadrature(std::max(4, order / 2), rho), f);
}

template <class F>
Estimate shell_estimate(F&& f, double r0, double r1, int radial_points, int order) {
  return detail::estimate_with(annulus_quadrature(radial_points, order, r0, r1),
                               annulus_quadrature(std::max(2, radial_points / 2), std::max(4, order / 2), r0, r1), f);
}

// ---------------------------------------------------------------------------
// Distributional Laplacian identities

enum class LaplaceForm { OffDiag, DiagDiff };

struct DistributionalResult {
  double surface = 0.0;        // boundary integral over |x| = delta
  double volume = 0.0;         // interior integral of Lap u times the kernel
  double reconstructed = 0.0;  // (surface - volume) / (pi^2 / 2)
  double error = 0.0;          // quadrature estimate on reconstructed
};

/// Kernel x_i x_j / r^6 (OffDiag) or (x_i^2 - x_j^2) / r^6 (DiagDiff); indices 0-based.
inline J2 laplace_kernel(const Point& x, int i, int j, LaplaceForm form) {
  const auto X = coordinate_jets(x);
  const J2 m6 = pow(jet_radius_squared(x), -3.0);
  return (form == LaplaceForm::OffDiag ? X[i] * X[j] : X[i] * X[i] - X[j] * X[j]) * m6;
}

/// Recovers D_i D_j u(0) (or D_i D_i u(0) - D_j D_j u(0)) from integrals over
/// the ball of radius delta. Indices are 0-based.
inline DistributionalResult distributional_check(const ScalarField& u, int i, int j, LaplaceForm form, double delta,
                                                 int order = 16, int radial_points = 16) {
  if (i < 0 || i >= kDim || j < 0 || j >= kDim || i == j) throw DomainError("distributional_check: need i != j in 0..3");
  if (!(delta > 0.0)) throw DomainError("distributional_check: delta must be positive");
  auto dnu = [](const J2& f, const Point& x) {
    const double r = norm(x);
    double s = 0.0;
    for (int k = 0; k < kDim; ++k) s += f.g[k] * x[k] / r;
    return s;
  };
  const Estimate s = surface_estimate(
      [&](const Point& x) {
        const J2 K = laplace_kernel(x, i, j, form), U = u(x);
        return K.v * dnu(U, x) - U.v * dnu(K, x);
      },
      delta, order);
  const Estimate v = shell_estimate(
      [&](const Point& x) { return u(x).laplacian() * laplace_kernel(x, i, j, form).v; }, 0.0, delta, radial_points,
      order);
  const double c = 0.5 * kPi * kPi;
  return {s.value, v.value, (s.value - v.value) / c, (s.error + v.error) / c};
}

// ---------------------------------------------------------------------------
// Flux through |x| = delta

namespace detail {

/// (<o, D_nu h>_g - <h, D_nu o>_g) times the surface Jacobian of g relative to
/// the Euclidean sphere measure. nu is the g-unit normal to |x| = const.
inline double flux_density(const Point& x, const Geometry& G, const Sym2Jet& o, const Sym2Jet& h) {
  const double r = norm(x);
  Covector dr;
  for (int a = 0; a < kDim; ++a) dr[a] = x[a] / r;
  double n2 = 0.0;
  for (int a = 0; a < kDim; ++a)
    for (int b = 0; b < kDim; ++b) n2 += G.gi(a, b) * dr[a] * dr[b];
  const double nn = std::sqrt(n2);
  Point nu{};
  for (int a = 0; a < kDim; ++a) {
    for (int b = 0; b < kDim; ++b) nu[a] += G.gi(a, b) * dr[b];
    nu[a] /= nn;
  }
  const auto nh = covariant_derivative(G, h), no = covariant_derivative(G, o);
  Sym2 dh, dO;
  for (int k = 0; k < kSym; ++k)
    for (int a = 0; a < kDim; ++a) {
      dh.c[k] += nu[a] * nh[a][k].v;
      dO.c[k] += nu[a] * no[a][k].v;
    }
  const double pairing = pair_with_inverse(G.gi, o.value(), dh) - pair_with_inverse(G.gi, h.value(), dO);
  return pairing * std::sqrt(determinant(G.gv)) * nn;
}

inline Sym2Jet site_kernel(const Point& x, const Site& a) {
  const Point y{x[0] - a[0], x[1] - a[1], x[2] - a[2], x[3] - a[3]};
  return parity_of(a) == Parity::Even ? tensor_T_at(y) : tensor_That_at(y);
}

}  // namespace detail

enum class FluxMode { Full, SingleSite, Leading };

inline const char* flux_mode_name(FluxMode m) {
  switch (m) {
    case FluxMode::Full: return "full";
    case FluxMode::SingleSite: return "single-site";
    default: return "leading";
  }
}

struct FluxReport {
  FluxMode mode = FluxMode::Full;
  double value = 0.0;
  double predicted = 0.0;
  double correction_bound = 0.0;
  double quadrature_error = 0.0;
  double omega = 0.0;         // extrapolated lattice constant used in the prediction
  double omega_cutoff = 0.0;  // cube partial sum at the background cutoff
  Site site{0, 0, 0, 0};     // single-site mode only

  double value_exact_h = 0.0;  // full mode: with h = glued metric - g_eh

  double deviation() const { return std::abs(value - predicted); }
  double budget() const { return correction_bound + quadrature_error; }
  bool within_budget() const { return deviation() <= budget(); }
};

/// Constant in front of eps^12 delta^-10 in the reported correction bound: the
/// coefficient of the exact pairing of o1 with g_eh - g_eucl - eps^4 T / 2.
inline constexpr double kFluxCorrectionConstant = 8.0 * kPi * kPi;

/// Pairing of o1 with h over |x| = delta in the g_eh geometry.
inline Estimate eh_flux(const GlueParams& p, const Sym2Field& h, int order) {
  const EHParams eh(p.epsilon);
  return surface_estimate(
      [&](const Point& x) {
        const Sym2Jet g = eh_metric_at(eh, x);
        return detail::flux_density(x, geometry_at(g), o_tensor_at(1, eh, x), h(x));
      },
      p.delta, order);
}

/// Full mode: h = eps^4 B / 2 (the translates a != 0 near |x| = delta) with the
/// g_eh connection, normal and measure, compared with 32 pi^2 eps^8 omega.
/// value_exact_h adds the pairing with eucl + eps^4 T / 2 - g_eh, so that it
/// uses h = glued metric - g_eh exactly.
inline FluxReport flux_integral(const GluedMetric& m, int order = 24) {
  if (order < 16) throw DomainError("flux_integral: S^3 order must be >= 16");
  const GlueParams& p = m.params();
  const EHParams eh(p.epsilon);
  const double e4 = std::pow(p.epsilon, 4), e8 = e4 * e4;
  const Estimate e = eh_flux(p, [&](const Point& x) { return (0.5 * e4) * m.background_at(x); }, order);
  const Estimate rest = eh_flux(
      p,
      [&](const Point& x) {
        Sym2Jet h = (0.5 * e4) * tensor_T_at(x) - eh_metric_at(eh, x);
        for (int i = 0; i < kDim; ++i) h(i, i) += 1.0;
        return h;
      },
      order);
  FluxReport r;
  r.mode = FluxMode::Full;
  r.value = e.value;
  r.value_exact_h = e.value + rest.value;
  r.quadrature_error = e.error;
  const OmegaTable w = omega_partial(40);
  r.omega = w.extrapolated;
  r.omega_cutoff = omega_partial(p.cutoff).value();
  r.predicted = 32.0 * kPi * kPi * e8 * r.omega;
  r.correction_bound = kFluxCorrectionConstant * std::pow(p.epsilon, 12) * std::pow(p.delta, -10) +
                       32.0 * kPi * kPi * e8 * w.uncertainty;
  return r;
}

enum class SiteGeometry { Euclidean, EguchiHanson };

/// Pairing of T with a single translate tau_a^* T (even a) or tau_a^* T-hat
/// (odd a) over |x| = delta, compared with 64 pi^2 f(a). Euclidean: the flat
/// pairing of the leading terms. EguchiHanson: o1 and the g_eh geometry with
/// h = eps^4/2 times the translate, divided by eps^8/2.
inline FluxReport flux_single_site(const GlueParams& p, const Site& a, int order = 24,
                                   SiteGeometry geom = SiteGeometry::Euclidean) {
  if (order < 16) throw DomainError("flux_single_site: S^3 order must be >= 16");
  if (site_norm2(a) == 0) throw DomainError("flux_single_site: site must be nonzero");
  const double e4 = std::pow(p.epsilon, 4);
  Estimate e;
  if (geom == SiteGeometry::Euclidean) {
    const Geometry flat = geometry_at(Sym2Jet::identity());
    e = surface_estimate(
        [&](const Point& x) { return detail::flux_density(x, flat, tensor_T_at(x), detail::site_kernel(x, a)); },
        p.delta, order);
  } else {
    e = eh_flux(p, [&](const Point& x) { return (0.5 * e4) * detail::site_kernel(x, a); }, order);
    e.value *= 2.0 / (e4 * e4);
    e.error *= 2.0 / (e4 * e4);
  }
  FluxReport r;
  r.mode = FluxMode::SingleSite;
  r.site = a;
  r.value = e.value;
  r.quadrature_error = e.error;
  r.predicted = flux_term_exact(a);
  if (geom == SiteGeometry::EguchiHanson)
    r.correction_bound = 2.0 * kFluxCorrectionConstant * std::pow(p.epsilon, 4) * std::pow(p.delta, -10);
  return r;
}

/// Euclidean pairing of T with the background B over |x| = delta, times eps^8/2;
/// linear in the lattice sum, so it equals 32 pi^2 eps^8 times the cube partial sum.
inline FluxReport flux_leading(const GluedMetric& m, int order = 24) {
  const GlueParams& p = m.params();
  const Geometry flat = geometry_at(Sym2Jet::identity());
  const double e8 = std::pow(p.epsilon, 8);
  const Estimate e = surface_estimate(
      [&](const Point& x) { return 0.5 * e8 * detail::flux_density(x, flat, tensor_T_at(x), m.background_at(x)); },
      p.delta, order);
  FluxReport r;
  r.mode = FluxMode::Leading;
  r.value = e.value;
  r.quadrature_error = e.error;
  r.omega_cutoff = omega_partial(p.cutoff).value();
  r.omega = r.omega_cutoff;
  r.predicted = 32.0 * kPi * kPi * e8 * r.omega_cutoff;
  return r;
}

// ---------------------------------------------------------------------------
// Z-term

/// Z = div_g h - grad tr_g h / 2 as a vector field (index raised with g).
inline Point z_vector(const Sym2Jet& g, const Sym2Jet& h) {
  const DivTrace d = div_trace(g, h);
  return {d.Y[0].v, d.Y[1].v, d.Y[2].v, d.Y[3].v};
}

/// Integral of 2 o1(Z, nu) over |x| = delta with the g_eh measure, for the
/// perturbation field h (default: glued metric minus g_eh).
inline Estimate z_flux(const GlueParams& p, const Sym2Field& h, int order = 24) {
  const EHParams eh(p.epsilon);
  return surface_estimate(
      [&](const Point& x) {
        const Sym2Jet g = eh_metric_at(eh, x);
        const Sym2 gi = inverse(g.value());
        const Point Z = z_vector(g, h(x));
        const double r = norm(x);
        double n2 = 0.0;
        for (int a = 0; a < kDim; ++a)
          for (int b = 0; b < kDim; ++b) n2 += gi(a, b) * x[a] * x[b] / (r * r);
        const double nn = std::sqrt(n2);
        Point nu{};
        for (int a = 0; a < kDim; ++a) {
          for (int b = 0; b < kDim; ++b) nu[a] += gi(a, b) * x[b] / r;
          nu[a] /= nn;
        }
        const Sym2 o = o_tensor_at(1, eh, x).value();
        double s = 0.0;
        for (int a = 0; a < kDim; ++a)
          for (int b = 0; b < kDim; ++b) s += o(a, b) * Z[a] * nu[b];
        return 2.0 * s * std::sqrt(determinant(g.value())) * nn;
      },
      p.delta, order);
}

inline Estimate z_flux(const GluedMetric& m, int order = 24) {
  const EHParams eh(m.params().epsilon);
  return z_flux(m.params(), [&m, eh](const Point& x) { return m(x) - eh_metric_at(eh, x); }, order);
}

/// Sup over |x| = r of |Z|_{g_eh} for h = glued metric - g_eh.
inline double z_sup(const GluedMetric& m, double r, int order = 8) {
  const EHParams eh(m.params().epsilon);
  return sphere_sup(
      [&](const Point& x) {
        const Sym2Jet g = eh_metric_at(eh, x);
        const Point Z = z_vector(g, m(x) - g);
        const Sym2 gv = g.value();
        double s = 0.0;
        for (int a = 0; a < kDim; ++a)
          for (int b = 0; b < kDim; ++b) s += gv(a, b) * Z[a] * Z[b];
        return std::sqrt(std::max(0.0, s));
      },
      r, order);
}

// ---------------------------------------------------------------------------
// Volume projections of the Ricci tensor

struct ProjectionConfig {
  int radial_points = 24;   // Gauss-Legendre points across the cutoff transition
  int sphere_order = 12;    // S^3 order for all shells
  int shoulder_points = 16;  // radial points on 5 delta/6 <= |x| <= delta
  int outer_shells = 48;    // radial points from delta to the inscribed sphere
  int corner_points = 8;    // per-axis product rule on the cube outside |x| = 1/2
};

struct ProjectionReport {
  double value = 0.0;
  double error = 0.0;       // quadrature estimate
  double transition = 0.0;  // contribution of 2 delta/3 <= |x| <= 5 delta/6
  double shoulder = 0.0;    // 5 delta/6 <= |x| <= delta
  double outer = 0.0;       // delta <= |x| <= 1/2
  double corners = 0.0;     // cube outside |x| = 1/2
  double predicted = 0.0;   // 32 pi^2 eps^8 omega (o1) or the eps^8 delta^-6 scale (g)
};

enum class ProjectionKind { O1, Metric };

namespace detail {

/// -2 <k, Ric>_g sqrt(det g) with k = o1bar or the metric itself.
inline double projection_density(const GluedMetric& m, ProjectionKind kind, const Point& x) {
  const GluedMetric::Jets j = m.jets(x);
  const Geometry G = geometry_at(j.g);
  const CurvatureAt c = curvature_from(G);
  const double pair = kind == ProjectionKind::O1 ? pair_with_inverse(G.gi, j.o.value(), c.ricci) : c.scalar;
  return -2.0 * pair * std::sqrt(determinant(G.gv));
}

/// Rule on [-1/2, 1/2]^4 minus the ball |x| <= 1/2. Each of the 8 pyramids
/// where |x_i| is largest is written x = t (+-e_i + y), y in [-1, 1]^3, and the
/// region becomes 1/(2 sqrt(1 + |y|^2)) <= t <= 1/2, so the integrand is smooth
/// on a product domain.
inline QuadratureRule corner_quadrature(int n) {
  auto [y, wy] = gauss_legendre(n, -1.0, 1.0);
  auto [s, ws] = gauss_legendre(n, 0.0, 1.0);
  QuadratureRule q;
  q.kind = QuadKind::Volume;
  for (int axis = 0; axis < kDim; ++axis)
    for (double sign : {1.0, -1.0})
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c) {
            const double Y[3] = {y[a], y[b], y[c]};
            const double t0 = 0.5 / std::sqrt(1.0 + Y[0] * Y[0] + Y[1] * Y[1] + Y[2] * Y[2]);
            for (int k = 0; k < n; ++k) {
              const double t = t0 + (0.5 - t0) * s[k];
              Point x{};
              x[axis] = sign * t;
              for (int m = 0, j = 0; m < kDim; ++m)
                if (m != axis) x[m] = t * Y[j++];
              q.nodes.push_back(x);
              q.weights.push_back(wy[a] * wy[b] * wy[c] * ws[k] * (0.5 - t0) * t * t * t);
            }
          }
  return q;
}

template <class F>
Estimate corner_estimate(F&& f, int n) {
  return estimate_with(corner_quadrature(n), corner_quadrature(std::max(2, n / 2)), f);
}

}  // namespace detail

/// -2 times the integral of <k, Ric> over the cube minus the inner ball, where
/// the glued metric is Ricci flat. The integrand vanishes for |x| < 2 delta/3.
inline ProjectionReport ric_projection(const GluedMetric& m, ProjectionKind kind, const ProjectionConfig& c = {}) {
  const GlueParams& p = m.params();
  if (p.delta >= 0.5) throw DomainError("ric_projection: need delta < 1/2");
  auto f = [&](const Point& x) { return detail::projection_density(m, kind, x); };
  const double a = 2.0 * p.delta / 3.0, b = 5.0 * p.delta / 6.0;
  const Estimate t = shell_estimate(f, a, b, c.radial_points, c.sphere_order);
  const Estimate h = shell_estimate(f, b, p.delta, c.shoulder_points, c.sphere_order);
  const Estimate o = shell_estimate(f, p.delta, 0.5, c.outer_shells, c.sphere_order);
  const Estimate k = detail::corner_estimate(f, c.corner_points);
  ProjectionReport r;
  r.transition = t.value;
  r.shoulder = h.value;
  r.outer = o.value;
  r.corners = k.value;
  CompensatedSum s;
  for (double v : {t.value, h.value, o.value, k.value}) s.add(v);
  r.value = s.value();
  r.error = t.error + h.error + o.error + k.error;
  const double e8 = std::pow(p.epsilon, 8);
  r.predicted = kind == ProjectionKind::O1 ? 32.0 * kPi * kPi * e8 * omega_partial(40).extrapolated
                                           : e8 * std::pow(p.delta, -6);
  return r;
}

/// Integral of <o1, Delta_L h - L_Z g>_g over 2 delta/3 <= |x| <= delta in the
/// g_eh geometry, h = glued metric - g_eh. By Green's identity this equals the
/// exact-h flux minus z_flux.
inline Estimate linearized_annulus(const GluedMetric& m, const ProjectionConfig& c = {}) {
  const GlueParams& p = m.params();
  const EHParams eh(p.epsilon);
  auto f = [&](const Point& x) {
    const Sym2Jet g = eh_metric_at(eh, x);
    const Sym2Jet h = m(x) - g;
    const Geometry G = geometry_at(g);
    const CurvatureAt cg = curvature_from(G);
    const Sym2 lin = lichnerowicz(G, cg, h) - lie_derivative(g, div_trace(G, h).Y);
    return pair_with_inverse(G.gi, o_tensor_at(1, eh, x).value(), lin) * std::sqrt(determinant(G.gv));
  };
  const double a = 2.0 * p.delta / 3.0, b = 5.0 * p.delta / 6.0;
  const Estimate t = shell_estimate(f, a, b, c.radial_points, c.sphere_order);
  const Estimate s = shell_estimate(f, b, p.delta, c.shoulder_points, c.sphere_order);
  return {t.value + s.value, t.error + s.error};
}

inline ProjectionReport ric_projection_o1(const GluedMetric& m, const ProjectionConfig& c = {}) {
  return ric_projection(m, ProjectionKind::O1, c);
}
inline ProjectionReport ric_projection_g(const GluedMetric& m, const ProjectionConfig& c = {}) {
  return ric_projection(m, ProjectionKind::Metric, c);
}

}  // namespace ehglue
