#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "curvature.hpp"
#include "eh_metrics.hpp"
#include "errors.hpp"
#include "fit.hpp"
#include "lattice.hpp"
#include "quadrature.hpp"

namespace ehglue {

struct GlueParams {
  double epsilon = 0.1;
  double delta = 0.3;
  int cutoff = 32;
  int degree = BackgroundModel::kDefaultDegree;

  GlueParams(double eps, double del, int N = 32, int deg = BackgroundModel::kDefaultDegree)
      : epsilon(eps), delta(del), cutoff(N), degree(deg) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("GlueParams: epsilon must be positive");
    if (!(del > 0.0 && del < 1.0)) throw DomainError("GlueParams: delta must lie in (0, 1)");
    if (!(eps < 0.5 * del)) throw DomainError("GlueParams: need epsilon < delta / 2");
    if (N < 1) throw DomainError("GlueParams: lattice cutoff must be >= 1");
  }

  /// The quantitative scale separation eps <= delta^2/10, delta <= 1/10.
  bool scale_separated() const { return epsilon <= delta * delta / 10.0 && delta <= 0.1; }
  void require_scale_separation() const {
    if (!scale_separated()) throw DomainError("GlueParams: need epsilon <= delta^2/10 and delta <= 1/10");
  }
};

enum class Region { Inner, Annulus, Outer };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::Inner: return "inner";
    case Region::Annulus: return "annulus";
    default: return "outer";
  }
}

inline Region region_of(const GlueParams& p, const Point& x) {
  const double r = norm(x);
  if (r <= 0.5 * p.delta) return Region::Inner;
  if (r <= p.delta) return Region::Annulus;
  return Region::Outer;
}

/// Smooth step: 0 for s <= 2/3, 1 for s >= 5/6, with value and first two
/// derivatives in s.
inline Jet2<1> chi_cutoff(double s) {
  using J = Jet2<1>;
  const double u = 6.0 * (s - 2.0 / 3.0);
  if (u <= 0.0) return J::constant(0.0);
  if (u >= 1.0) return J::constant(1.0);
  // e^{-1/u} / (e^{-1/u} + e^{-1/(1-u)}) is the logistic function of z
  const J U = J::variable(0, u);
  const J z = inv(1.0 - U) - inv(U);
  const double e = std::exp(-std::abs(z.v));
  const double lo = e / (1.0 + e), hi = 1.0 / (1.0 + e);
  const double sig = z.v >= 0.0 ? hi : lo, sig_c = z.v >= 0.0 ? lo : hi;  // sigma, 1 - sigma
  const double d1 = sig * sig_c;
  if (d1 == 0.0) return J::constant(sig);
  J c = compose(z, sig, d1, d1 * (sig_c - sig));
  c.g[0] *= 6.0;
  c.h[0] *= 36.0;
  return c;
}

/// chi(|x| / delta) as a jet in x.
inline J2 chi_jet(const Point& x, double delta) {
  const Jet2<1> c = chi_cutoff(norm(x) / delta);
  if (c.g[0] == 0.0 && c.h[0] == 0.0) return J2::constant(c.v);
  const J2 s = jet_radius(x) / delta;
  return compose(s, c.v, c.g[0], c.h[0]);
}

namespace detail {

inline J2 trace_jet(const Sym2Jet& gi, const Sym2Jet& k) {
  J2 t;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) t.fma(gi(i, j), k(i, j));
  return t;
}

}  // namespace detail

/// Trace-free part of k with respect to g, jets included.
inline Sym2Jet trace_free_part(const Sym2Jet& g, const Sym2Jet& k) {
  const J2 t = detail::trace_jet(inverse(g), k);
  return k - (0.25 * t) * g;
}

/// The glued metric and its obstruction tensor on |x| <= 1.
class GluedMetric {
 public:
  explicit GluedMetric(const GlueParams& p)
      : p_(p), eh_(p.epsilon), e4_(std::pow(p.epsilon, 4)), bg_(background_model(p.cutoff, p.degree)) {}
  GluedMetric(const GlueParams& p, std::shared_ptr<const BackgroundModel> bg)
      : p_(p), eh_(p.epsilon), e4_(std::pow(p.epsilon, 4)), bg_(std::move(bg)) {
    if (!bg_) throw DomainError("GluedMetric: null background model");
  }

  const GlueParams& params() const { return p_; }
  const EHParams& eh() const { return eh_; }
  const BackgroundModel& background() const { return *bg_; }

  /// Background field B(x): sum over all nonzero sites within the cutoff.
  Sym2Jet background_at(const Point& x) const { return (*bg_)(x); }

  Sym2Jet inner_branch(const Point& x) const { return eh_metric_at(eh_, x); }

  Sym2Jet outer_branch(const Point& x) const {
    check(x);
    Sym2Jet g = 0.5 * e4_ * (tensor_T_at(x) + background_at(x));
    for (int i = 0; i < kDim; ++i) g(i, i) += 1.0;
    return g;
  }

  /// The interpolating formula, evaluated with both branches at any radius.
  Sym2Jet annulus_formula(const Point& x) const {
    const J2 c = chi_jet(x, p_.delta);
    return (1.0 - c) * inner_branch(x) + c * outer_branch(x);
  }

  Sym2Jet operator()(const Point& x) const {
    check(x);
    switch (region_of(p_, x)) {
      case Region::Inner: return inner_branch(x);
      case Region::Outer: return outer_branch(x);
      default: break;
    }
    const double s = norm(x) / p_.delta;
    if (s <= 2.0 / 3.0) return inner_branch(x);
    return annulus_formula(x);
  }

  /// (eps/2) d/d eps of the glued metric, branchwise.
  Sym2Jet half_eps_derivative(const Point& x) const {
    check(x);
    const Region r = region_of(p_, x);
    if (r == Region::Inner || norm(x) <= 2.0 / 3.0 * p_.delta) return o_tensor_at(1, eh_, x);
    const Sym2Jet outer = e4_ * (tensor_T_at(x) + background_at(x));
    if (r == Region::Outer) return outer;
    const J2 c = chi_jet(x, p_.delta);
    return (1.0 - c) * o_tensor_at(1, eh_, x) + c * outer;
  }

  /// Trace-free part of half_eps_derivative with respect to the glued metric.
  Sym2Jet obstruction(const Point& x) const {
    if (region_of(p_, x) == Region::Inner) {
      check(x);
      return o_tensor_at(1, eh_, x);
    }
    return trace_free_part((*this)(x), half_eps_derivative(x));
  }

  struct Jets {
    Sym2Jet g;  // glued metric
    Sym2Jet o;  // obstruction tensor
  };

  /// Metric and obstruction tensor together, sharing one background evaluation.
  Jets jets(const Point& x) const {
    check(x);
    const double s = norm(x) / p_.delta;
    if (s <= 2.0 / 3.0) return {inner_branch(x), o_tensor_at(1, eh_, x)};
    const Sym2Jet raw = tensor_T_at(x) + background_at(x);
    Sym2Jet outer = 0.5 * e4_ * raw;
    for (int i = 0; i < kDim; ++i) outer(i, i) += 1.0;
    Jets r;
    if (region_of(p_, x) == Region::Outer) {
      r.g = outer;
      r.o = e4_ * raw;
    } else {
      const J2 c = chi_jet(x, p_.delta);
      r.g = (1.0 - c) * inner_branch(x) + c * outer;
      r.o = (1.0 - c) * o_tensor_at(1, eh_, x) + c * (e4_ * raw);
    }
    r.o = trace_free_part(r.g, r.o);
    return r;
  }

  /// Lattice tail proxy at x: |B_N - B_{N/2}| in the max norm (values only).
  double tail_estimate(const Point& x) const {
    if (p_.cutoff < 2) return max_abs(background_at(x).value());
    const BackgroundModel& half = *background_model(p_.cutoff / 2, p_.degree);
    return max_abs(background_at(x).value() - half(x).value());
  }

 private:
  void check(const Point& x) const {
    if (!(norm(x) <= 1.0)) throw DomainError("glued metric: evaluation outside |x| <= 1");
    detail::check_not_lattice_point(x);
  }

  GlueParams p_;
  EHParams eh_;
  double e4_;
  std::shared_ptr<const BackgroundModel> bg_;
};

inline Sym2Field glued_metric(const GlueParams& p) {
  auto m = std::make_shared<const GluedMetric>(p);
  return [m](const Point& x) { return (*m)(x); };
}

inline Sym2Field glued_obstruction(const GlueParams& p) {
  auto m = std::make_shared<const GluedMetric>(p);
  return [m](const Point& x) { return m->obstruction(x); };
}

enum class DecayField { Ricci, LichnerowiczO1 };

inline const char* decay_field_name(DecayField f) { return f == DecayField::Ricci ? "ricci" : "lichnerowicz_o1"; }

/// |F|_g at x for F = Ric or Delta_L o1bar, both with respect to the glued metric.
inline double decay_magnitude(const GluedMetric& m, DecayField f, const Point& x) {
  const Geometry G = geometry_at(m(x));
  const CurvatureAt c = curvature_from(G);
  if (f == DecayField::Ricci) return norm_with_inverse(G.gi, c.ricci);
  return norm_with_inverse(G.gi, lichnerowicz(G, c, m.obstruction(x)));
}

struct DecayScan {
  Region region = Region::Outer;
  std::vector<double> radii;
  std::vector<double> sup;  // sup over the sample sphere at each radius
  double max_value = 0.0;
  double exponent = 0.0;   // outer only
  double prefactor = 0.0;  // outer: fitted C in C r^p; annulus: max / (eps^4 delta^-2)
};

/// Max of f over the S^3 rule nodes on |x| = r, rotated off the coordinate axes.
template <class F>
double sphere_sup(F&& f, double r, int order) {
  const QuadratureRule q = s3_quadrature(order, r);
  const auto vals = parallel_map<double>(q.size(), [&](std::size_t i) {
    const Point& y = q.nodes[i];
    return f(Point{0.8 * y[0] + 0.6 * y[1], -0.6 * y[0] + 0.8 * y[1], y[2], y[3]});
  });
  double mx = 0.0;
  for (double v : vals) mx = std::max(mx, v);
  return mx;
}

/// Sup-over-sphere magnitudes on the given radii. Empty radii select a default
/// sampling of the region.
inline DecayScan decay_scan(DecayField f, const GluedMetric& m, Region region, std::vector<double> radii = {},
                            int sphere_order = 6) {
  const GlueParams& p = m.params();
  if (radii.empty()) {
    if (region == Region::Outer) throw DomainError("decay_scan: outer region needs explicit radii");
    const double lo = region == Region::Inner ? std::max(p.epsilon, p.delta / 8.0) : 0.5 * p.delta;
    const double hi = region == Region::Inner ? 0.5 * p.delta : p.delta;
    const int n = 24;
    for (int i = 0; i < n; ++i) radii.push_back(lo + (hi - lo) * (i + 0.5) / n);
  }
  if (region == Region::Outer && radii.size() < 2) throw DomainError("decay_scan: too few radii for a fit");
  DecayScan s;
  s.region = region;
  s.radii = radii;
  for (double r : radii) {
    const double mx = sphere_sup([&](const Point& x) { return decay_magnitude(m, f, x); }, r, sphere_order);
    s.sup.push_back(mx);
    s.max_value = std::max(s.max_value, mx);
  }
  if (region == Region::Outer) {
    const PowerFit pf = fit_power(s.radii, s.sup);
    s.exponent = pf.exponent;
    s.prefactor = pf.prefactor;
  } else if (region == Region::Annulus) {
    s.prefactor = s.max_value / (std::pow(p.epsilon, 4) / (p.delta * p.delta));
  }
  return s;
}

}  // namespace ehglue
