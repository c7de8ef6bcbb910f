#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curvature.hpp"
#include "eh_metrics.hpp"
#include "flow.hpp"
#include "glue.hpp"
#include "heat.hpp"
#include "lattice.hpp"
#include "obstruction.hpp"
#include "quadrature.hpp"
#include "report.hpp"

// One function per command-line task. Each validates its parameters before
// doing any work and returns a Report whose content depends only on the
// parameters (never on thread count, paths or time).

namespace ehglue::suites {

namespace detail {

/// Portable deterministic doubles in [0, 1).
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : s_(seed) {}
  double operator()() {
    // splitmix64
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1p-53;
  }

 private:
  std::uint64_t s_;
};

/// Points with radii uniform in [r0, r1] and directions from a normalised cube sample.
inline std::vector<Point> sample_points(int n, double r0, double r1, std::uint64_t seed) {
  Uniform u(seed);
  std::vector<Point> pts;
  while (static_cast<int>(pts.size()) < n) {
    Point d{2 * u() - 1, 2 * u() - 1, 2 * u() - 1, 2 * u() - 1};
    const double l = norm(d);
    const double r = r0 + (r1 - r0) * u();
    if (l < 0.2 || l > 1.0) continue;
    pts.push_back((r / l) * d);
  }
  return pts;
}

inline void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

inline Json vec(const std::vector<double>& v) { return Json(v); }

}  // namespace detail

// ---------------------------------------------------------------------------

struct OmegaParams {
  int cutoff = 40;
  void validate() const { detail::require(cutoff >= 8, "cutoff", "must be >= 8"); }
};

inline Report run_omega(const OmegaParams& p) {
  p.validate();
  const OmegaTable t = omega_partial(p.cutoff);
  Report r("omega");
  r.config("cutoff", p.cutoff);
  Json rows = Json::array();
  for (int n = 1; n <= t.N; ++n) rows.push_back(Json{{"n", n}, {"shell", t.shell[n]}, {"partial", t.partial[n]}});
  r.table("shells", rows);
  r.result("omega", t.extrapolated, t.uncertainty);
  r.result("partial_at_cutoff", t.value(), std::abs(t.extrapolated - t.value()));
  r.check("omega_vs_7.70", t.extrapolated, CheckKind::Abs, 7.70, 0.05);
  return r;
}

// ---------------------------------------------------------------------------

struct BackgroundParams {
  int cutoff = 32;
  int degree = BackgroundModel::kDefaultDegree;
  void validate() const {
    detail::require(cutoff >= 1, "cutoff", "must be >= 1");
    detail::require(degree >= 2 && degree % 2 == 0 && degree <= 30, "degree", "must be even in [2, 30]");
  }
};

inline Report run_background(const BackgroundParams& p) {
  p.validate();
  const auto m = background_model(p.cutoff, p.degree);
  Report r("background");
  r.config("cutoff", p.cutoff);
  r.config("degree", p.degree);
  r.exact("coefficients", static_cast<double>(m->coefficient_count()));
  r.note("cache_file", ehglue::detail::background_cache_path("", p.cutoff, p.degree).string());
  double worst = 0.0, worst_ratio = 0.0;
  for (const Point& x : {Point{0.25, 0, 0, 0}, Point{0.1, -0.2, 0.3, 0.05}, Point{-0.3, 0.2, 0.25, -0.1}}) {
    const Sym2 a = (*m)(x).value(), b = background_sum(x, BackgroundKind::Combined, p.cutoff, false, false).value();
    const double d = max_abs(a - b);
    worst = std::max(worst, d);
    worst_ratio = std::max(worst_ratio, d / std::max(m->truncation_estimate(x), 1e-11));
  }
  r.result("max_deviation_from_direct_sum", worst, 0.0);
  r.check("deviation_within_truncation_estimate", worst_ratio, CheckKind::AtMost, 1.0);
  return r;
}

// ---------------------------------------------------------------------------

struct VerifyEhParams {
  bool fast = false;
  int points = 200;
  void validate() const { detail::require(points >= 1, "points", "must be >= 1"); }
};

/// Radial quadrature of the squared g_eh-norm of o_1 over R^4, with S^3 rules
/// of the given order on each shell.
inline QuadResult o1_l2_norm(double e, int order) {
  const EHParams pe(e);
  const QuadratureRule unit = s3_quadrature(order, 1.0);
  auto shell = [&](double rho) {
    CompensatedSum s;
    for (std::size_t i = 0; i < unit.size(); ++i) {
      const Point x = rho * unit.nodes[i];
      const Sym2 gv = eh_metric_at(pe, x).value(), o = o_tensor_at(1, pe, x).value();
      s.add(unit.weights[i] * pair_with_inverse(inverse(gv), o, o) * std::sqrt(determinant(gv)));
    }
    return rho * rho * rho * s.value();
  };
  // The Cartesian chart loses precision like (eps/r)^8 towards the bolt: the
  // ball |x| < a is left out (|o1|^2 <= 4 there, so it is carried in the
  // error). [a, inf) is mapped to u = 1/(1 + (r/eps)^4), r^3 dr = eps^4 du/(4u^2),
  // which makes the integrand smooth and bounded on [0, u(a)].
  const double a = 0.02 * e, e4 = std::pow(e, 4);
  const double ua = 1.0 / (1.0 + std::pow(a / e, 4));
  auto rule = [&](int n) {
    const auto [x, w] = gauss_legendre(n, 0.0, ua);
    CompensatedSum s;
    for (int i = 0; i < n; ++i) {
      const double rho = e * std::pow((1.0 - x[i]) / x[i], 0.25);
      s.add(w[i] * shell(rho) / (rho * rho * rho) * e4 / (4.0 * x[i] * x[i]));
    }
    return s.value();
  };
  QuadResult q;
  q.value = rule(24);
  q.error = std::abs(q.value - rule(12)) + 2.0 * kPi * kPi * std::pow(a, 4) +
            64.0 * std::numeric_limits<double>::epsilon() * std::abs(q.value);
  return q;
}

/// Pointwise identities on g_eh,1 and the L^2 norm of o_1 for eps in {0.5, 1, 2}.
inline Report run_verify_eh(const VerifyEhParams& p) {
  p.validate();
  Report r("verify-eh");
  r.config("fast", p.fast);
  r.config("points", p.points);
  const EHParams eh(1.0);
  const auto pts = detail::sample_points(p.points, 0.3, 5.0, 0x5eed);
  struct Row {
    double trace = 0, div = 0, lich = 0, ricci = 0, det = 0;
  };
  const auto rows = parallel_map<Row>(pts.size(), [&](std::size_t k) {
    const Point& x = pts[k];
    const Sym2Jet g = eh_metric_at(eh, x);
    const Geometry G = geometry_at(g);
    const CurvatureAt c = curvature_from(G);
    Row w;
    w.ricci = norm_with_inverse(G.gi, c.ricci);
    w.det = std::abs(determinant(G.gv) - 1.0);
    for (int i = 1; i <= 3; ++i) {
      const Sym2Jet o = o_tensor_at(i, eh, x);
      const DivTrace d = div_trace(G, o);
      double fo = 0.0, fg = 0.0;
      for (int a = 0; a < kDim; ++a)
        for (int b = 0; b < kDim; ++b) {
          fo += o(a, b).v * o(a, b).v;
          fg += G.gi(a, b) * G.gi(a, b);
        }
      // machine epsilon times the Cauchy-Schwarz bound |g^-1| |o|
      const double scale = std::sqrt(fo * fg);
      w.trace = std::max(w.trace, std::abs(d.trace.v) / (std::numeric_limits<double>::epsilon() * scale));
      for (int j = 0; j < kDim; ++j) w.div = std::max(w.div, std::abs(d.div[j].v));
      w.lich = std::max(w.lich, norm_with_inverse(G.gi, lichnerowicz(G, c, o)));
    }
    return w;
  });
  Row mx;
  for (const Row& w : rows) {
    mx.trace = std::max(mx.trace, w.trace);
    mx.div = std::max(mx.div, w.div);
    mx.lich = std::max(mx.lich, w.lich);
    mx.ricci = std::max(mx.ricci, w.ricci);
    mx.det = std::max(mx.det, w.det);
  }
  r.result("max_trace_over_eps_scale", mx.trace, 0.0);
  r.result("max_div_o", mx.div, 0.0);
  r.result("max_lichnerowicz_o", mx.lich, 0.0);
  r.result("max_ricci", mx.ricci, 0.0);
  r.result("max_det_minus_one", mx.det, 0.0);
  r.check("trace_o_machine_eps", mx.trace, CheckKind::AtMost, 8.0);
  r.check("div_o", mx.div, CheckKind::AtMost, 1e-8);
  r.check("lichnerowicz_o", mx.lich, CheckKind::AtMost, 1e-7);
  r.check("ricci", mx.ricci, CheckKind::AtMost, 1e-9);
  r.check("det_one", mx.det, CheckKind::AtMost, 1e-12);

  for (double e : {0.5, 1.0, 2.0}) {
    const QuadResult q = o1_l2_norm(e, p.fast ? 4 : 6);
    const std::string key = "o1_l2_norm_eps_" + ehglue::detail::format_double(e);
    r.result(key, q.value, q.error);
    r.check(key, q.value, CheckKind::Rel, 2.0 * kPi * kPi * std::pow(e, 4), 1e-6);
  }
  return r;
}

// ---------------------------------------------------------------------------

struct VerifyGlueParams {
  double epsilon = 0.05;
  double delta = 0.3;
  int cutoff = 8;
  bool fast = false;
  void validate() const {
    detail::require(epsilon > 0.0, "epsilon", "must be positive");
    detail::require(delta > 0.0 && delta < 0.5, "delta", "must lie in (0, 1/2)");
    detail::require(epsilon < 0.5 * delta, "epsilon", "must be below delta/2");
    detail::require(cutoff >= 1, "cutoff", "must be >= 1");
  }
};

/// Structural checks on the glued metric: inner region, positivity, symmetry,
/// trace-free obstruction, smoothness across the cutoff edges.
inline Report run_verify_glue(const VerifyGlueParams& p) {
  p.validate();
  Report r("verify-glue");
  r.config("epsilon", p.epsilon);
  r.config("delta", p.delta);
  r.config("cutoff", p.cutoff);
  r.config("fast", p.fast);
  const GluedMetric m(GlueParams(p.epsilon, p.delta, p.cutoff));
  const EHParams eh(p.epsilon);
  const int n = p.fast ? 40 : 200;

  const auto inner = detail::sample_points(n, 0.5 * p.epsilon, 0.6 * p.delta, 11);
  double inner_diff = 0.0;
  for (const Point& x : inner) inner_diff = std::max(inner_diff, max_abs(m(x).value() - eh_metric_at(eh, x).value()));
  r.result("inner_minus_eh", inner_diff, 0.0);
  r.check("inner_region_is_eh", inner_diff, CheckKind::AtMost, 0.0);

  const auto all = detail::sample_points(n, 0.5 * p.epsilon, 0.5, 12);
  double min_eig_proxy = 1e300, trace_ratio = 0.0;
  for (const Point& x : all) {
    Mat4 l;
    const Sym2 gv = m(x).value();
    if (!cholesky(gv, l)) min_eig_proxy = -1.0;
    else
      for (int i = 0; i < kDim; ++i) min_eig_proxy = std::min(min_eig_proxy, l[i][i]);
    const Sym2 gi = inverse(gv), o = m.obstruction(x).value();
    double scale = 0.0;
    for (int a = 0; a < kDim; ++a)
      for (int b = 0; b < kDim; ++b) scale += std::abs(gi(a, b) * o(a, b));
    double tr = 0.0;
    for (int a = 0; a < kDim; ++a)
      for (int b = 0; b < kDim; ++b) tr += gi(a, b) * o(a, b);
    if (scale > 0.0) trace_ratio = std::max(trace_ratio, std::abs(tr) / (std::numeric_limits<double>::epsilon() * scale));
  }
  r.result("min_cholesky_diagonal", min_eig_proxy, 0.0);
  r.check("positive_definite", min_eig_proxy, CheckKind::AtLeast, 0.0);
  r.result("max_trace_obstruction_over_eps_scale", trace_ratio, 0.0);
  r.check("obstruction_trace_free", trace_ratio, CheckKind::AtMost, 64.0);

  const Sym2Field f = [&m](const Point& x) { return m(x); };
  const auto gens = symmetry_generators();
  std::vector<Point> sample;
  detail::Uniform u(13);
  for (double rad : {0.05, 0.15, 0.22, 0.28, 0.35, 0.45}) {
    Point d{2 * u() - 1, 2 * u() - 1, 2 * u() - 1, 2 * u() - 1};
    sample.push_back((rad / norm(d)) * d);
  }
  double sym = 0.0;
  for (int g = 0; g < 4; ++g) sym = std::max(sym, symmetry_check(f, gens[g], sample));
  r.result("max_symmetry_defect", sym, 0.0);
  r.check("invariant_under_linear_generators", sym, CheckKind::AtMost, 1e-10);

  // jets on both sides of the transition edges
  double jump = 0.0;
  const Point dir{0.5, -0.5, 0.5, 0.5};
  for (double s : {2.0 / 3.0, 5.0 / 6.0}) {
    const double rho = s * p.delta;
    const Sym2Jet a = m((rho * (1 - 1e-9)) * dir), b = m((rho * (1 + 1e-9)) * dir);
    for (int k = 0; k < kSym; ++k) {
      jump = std::max(jump, std::abs(a.c[k].v - b.c[k].v));
      for (int i = 0; i < kDim; ++i) jump = std::max(jump, std::abs(a.c[k].g[i] - b.c[k].g[i]));
    }
  }
  r.result("max_jump_at_transition_edges", jump, 0.0);
  r.check("continuous_across_transition", jump, CheckKind::AtMost, 1e-6);
  return r;
}

// ---------------------------------------------------------------------------

struct FluxParams {
  double epsilon = 0.1;
  double delta = 0.3;
  int order = 24;
  int cutoff = 32;
  void validate() const {
    detail::require(epsilon > 0.0, "epsilon", "must be positive");
    detail::require(delta > 0.0 && delta < 0.5, "delta", "must lie in (0, 1/2)");
    detail::require(epsilon < 0.5 * delta, "epsilon", "must be below delta/2");
    detail::require(order >= 16, "order", "must be >= 16");
    detail::require(cutoff >= 1, "cutoff", "must be >= 1");
  }
};

inline Report run_flux(const FluxParams& p) {
  p.validate();
  Report r("flux");
  r.config("epsilon", p.epsilon);
  r.config("delta", p.delta);
  r.config("order", p.order);
  r.config("cutoff", p.cutoff);
  const GlueParams gp(p.epsilon, p.delta, p.cutoff);
  const GluedMetric m(gp);
  const FluxReport f = flux_integral(m, p.order);
  r.result("flux", f.value, f.quadrature_error);
  r.result("flux_exact_h", f.value_exact_h, f.quadrature_error);
  r.result("omega", f.omega, 0.0);
  r.exact("predicted", f.predicted);
  r.exact("correction_bound", f.correction_bound);
  r.check("flux_vs_prediction", f.value, CheckKind::Rel, f.predicted, 0.02);

  const FluxReport odd = flux_single_site(gp, {1, 0, 0, 0}, p.order);
  r.result("single_site_odd", odd.value, odd.quadrature_error);
  r.check("single_site_odd_vs_64pi2", odd.value, CheckKind::Rel, 64.0 * kPi * kPi, 1e-3);
  const FluxReport even = flux_single_site(gp, {1, 1, 0, 0}, p.order);
  r.result("single_site_even", even.value, even.quadrature_error);
  r.check("single_site_even_below_quadrature_estimate", std::abs(even.value), CheckKind::AtMost,
          std::max(even.quadrature_error, 1e-12));
  return r;
}

// ---------------------------------------------------------------------------

struct ZTermParams {
  double epsilon = 0.1;
  double delta = 0.3;
  int order = 24;
  int cutoff = 32;
  void validate() const { FluxParams{epsilon, delta, order, cutoff}.validate(); }
};

inline Report run_zterm(const ZTermParams& p) {
  p.validate();
  Report r("zterm");
  r.config("epsilon", p.epsilon);
  r.config("delta", p.delta);
  r.config("order", p.order);
  r.config("cutoff", p.cutoff);
  const GluedMetric m(GlueParams(p.epsilon, p.delta, p.cutoff));
  const Estimate z = z_flux(m, p.order);
  const double s12 = std::pow(p.epsilon, 12) * std::pow(p.delta, -10);
  r.result("z_flux", z.value, z.error);
  r.exact("eps12_delta-10", s12);
  r.check("z_flux_within_10_eps12_delta-10", std::abs(z.value), CheckKind::AtMost, 10.0 * s12);
  const double sup = z_sup(m, p.delta);
  const double s9 = std::pow(p.epsilon, 8) * std::pow(p.delta, -9);
  r.result("z_sup_at_delta", sup, 0.0);
  r.check("z_sup_within_eps8_delta-9", sup, CheckKind::AtMost, s9);
  // radial profile, reported only
  std::vector<double> rad{0.25, 0.3, 0.35}, sups;
  for (double d : rad) sups.push_back(z_sup(m, d));
  r.table("z_sup_profile", Json{{"radius", rad}, {"sup", sups}});
  r.result("z_sup_slope", fit_power(rad, sups).exponent, 0.0);
  return r;
}

// ---------------------------------------------------------------------------

struct ProjectParams {
  std::vector<double> epsilons{0.05, 0.07, 0.1};
  double delta = 0.3;
  int cutoff = 32;
  int order = 24;  // flux S^3 order
  ProjectionConfig quad{32, 12, 24, 48, 8};
  void validate() const {
    detail::require(epsilons.size() >= 2, "epsilons", "need at least two values");
    for (double e : epsilons) detail::require(e > 0.0 && e < 0.5 * delta, "epsilons", "need 0 < eps < delta/2");
    detail::require(delta > 0.0 && delta < 0.5, "delta", "must lie in (0, 1/2)");
    detail::require(cutoff >= 1, "cutoff", "must be >= 1");
    detail::require(order >= 16, "order", "must be >= 16");
    detail::require(quad.radial_points >= 2 && quad.shoulder_points >= 2 && quad.outer_shells >= 2, "radial-points",
                    "radial rules need >= 2 points");
    detail::require(quad.sphere_order >= 4, "sphere-order", "must be >= 4");
    detail::require(quad.corner_points >= 2, "corner-points", "must be >= 2");
  }
};

/// o1-projection of Ric against the flux route at the largest eps, and the
/// eps-exponent of the projection.
inline Report run_project(const ProjectParams& p) {
  p.validate();
  Report r("project");
  r.config("epsilons", p.epsilons);
  r.config("delta", p.delta);
  r.config("cutoff", p.cutoff);
  r.config("order", p.order);
  r.config("radial_points", p.quad.radial_points);
  r.config("sphere_order", p.quad.sphere_order);
  r.config("shoulder_points", p.quad.shoulder_points);
  r.config("outer_shells", p.quad.outer_shells);
  r.config("corner_points", p.quad.corner_points);
  auto bg = background_model(p.cutoff);
  std::vector<double> values, errors, ratios;
  Json rows = Json::array();
  for (double e : p.epsilons) {
    const GluedMetric m(GlueParams(e, p.delta, p.cutoff), bg);
    const ProjectionReport pr = ric_projection_o1(m, p.quad);
    values.push_back(pr.value);
    errors.push_back(pr.error);
    ratios.push_back(pr.value / pr.predicted);
    rows.push_back(Json{{"epsilon", e},
                        {"value", pr.value},
                        {"error", pr.error},
                        {"predicted", pr.predicted},
                        {"transition", pr.transition},
                        {"shoulder", pr.shoulder},
                        {"outer", pr.outer},
                        {"corners", pr.corners}});
  }
  r.table("projection", rows);
  const double emax = *std::max_element(p.epsilons.begin(), p.epsilons.end());
  const std::size_t imax = std::max_element(p.epsilons.begin(), p.epsilons.end()) - p.epsilons.begin();
  const FluxReport f = flux_integral(GluedMetric(GlueParams(emax, p.delta, p.cutoff), bg), p.order);
  r.result("flux_at_max_eps", f.value, f.quadrature_error);
  r.result("projection_at_max_eps", values[imax], errors[imax]);
  r.check("projection_vs_flux", values[imax], CheckKind::Rel, f.value, 0.03);
  const PowerFit pf = fit_power(p.epsilons, values);
  r.result("eps_exponent", pf.exponent, 0.0);
  r.check("eps_exponent_8", pf.exponent, CheckKind::Abs, 8.0, 0.3);
  return r;
}

// ---------------------------------------------------------------------------

struct DistLaplaceParams {
  std::vector<double> deltas{0.5, 0.25};
  int order = 20;
  int radial_points = 20;
  void validate() const {
    detail::require(!deltas.empty(), "deltas", "need at least one radius");
    for (double d : deltas) detail::require(d > 0.0, "deltas", "must be positive");
    detail::require(order >= 4, "order", "must be >= 4");
    detail::require(radial_points >= 2, "radial-points", "must be >= 2");
  }
};

inline Report run_dist_laplace(const DistLaplaceParams& p) {
  p.validate();
  Report r("dist-laplace");
  r.config("deltas", p.deltas);
  r.config("order", p.order);
  r.config("radial_points", p.radial_points);
  auto x1x2 = [](const Point& x) {
    const auto X = coordinate_jets(x);
    return X[0] * X[1];
  };
  auto diag = [](const Point& x) {
    const auto X = coordinate_jets(x);
    return X[0] * X[0] - X[1] * X[1];
  };
  auto rough = [](const Point& x) {
    const auto X = coordinate_jets(x);
    return exp(X[0] - 0.5 * X[1]) + X[0] * X[1] * X[2];
  };
  Json rows = Json::array();
  double worst_off = 0.0, worst_diag = 0.0;
  std::vector<double> rough_off, rough_diag;
  for (double d : p.deltas) {
    const auto a = distributional_check(x1x2, 0, 1, LaplaceForm::OffDiag, d, p.order, p.radial_points);
    const auto b = distributional_check(diag, 0, 1, LaplaceForm::DiagDiff, d, p.order, p.radial_points);
    const auto c = distributional_check(rough, 0, 1, LaplaceForm::OffDiag, d, p.order, p.radial_points);
    const auto e = distributional_check(rough, 0, 1, LaplaceForm::DiagDiff, d, p.order, p.radial_points);
    worst_off = std::max(worst_off, std::abs(a.reconstructed - 1.0));
    worst_diag = std::max(worst_diag, std::abs(b.reconstructed - 4.0));
    rough_off.push_back(c.reconstructed);
    rough_diag.push_back(e.reconstructed);
    rows.push_back(Json{{"delta", d},
                        {"offdiag_x1x2", a.reconstructed},
                        {"diagdiff_x1sq_minus_x2sq", b.reconstructed},
                        {"nonpolynomial_offdiag", c.reconstructed},
                        {"nonpolynomial_diagdiff", e.reconstructed},
                        {"error", std::max({a.error, b.error, c.error, e.error})}});
  }
  r.table("reconstructions", rows);
  r.check("offdiag_reconstructs_1", worst_off, CheckKind::AtMost, 1e-6);
  r.check("diagdiff_reconstructs_4", worst_diag, CheckKind::AtMost, 1e-6);
  auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
  };
  // exact values: D1 D2 = -1/2, D1^2 - D2^2 = 3/4 (at the origin)
  r.check("radius_independence_offdiag", spread(rough_off), CheckKind::AtMost, 1e-6);
  r.check("radius_independence_diagdiff", spread(rough_diag), CheckKind::AtMost, 1e-6);
  r.check("nonpolynomial_offdiag_value", rough_off.front(), CheckKind::Abs, -0.5, 1e-6);
  r.check("nonpolynomial_diagdiff_value", rough_diag.front(), CheckKind::Abs, 0.75, 1e-6);
  return r;
}

// ---------------------------------------------------------------------------

struct GlueScanParams {
  double epsilon = 0.05;
  double delta = 0.25;
  int cutoff = 32;
  int sphere_order = 8;
  std::vector<double> radii{0.3, 0.35, 0.4, 0.45};
  void validate() const {
    VerifyGlueParams{epsilon, delta, cutoff}.validate();
    detail::require(sphere_order >= 4, "sphere-order", "must be >= 4");
    detail::require(radii.size() >= 2, "radii", "need at least two radii");
    for (double x : radii) detail::require(x >= delta && x <= 0.5, "radii", "must lie in [delta, 1/2]");
  }
};

/// Decay exponents: outer Ricci of the glued metric and the EH expansion remainder.
inline Report run_glue_scan(const GlueScanParams& p) {
  p.validate();
  Report r("glue-scan");
  r.config("epsilon", p.epsilon);
  r.config("delta", p.delta);
  r.config("cutoff", p.cutoff);
  r.config("sphere_order", p.sphere_order);
  r.config("radii", p.radii);
  const GluedMetric m(GlueParams(p.epsilon, p.delta, p.cutoff));
  const DecayScan outer = decay_scan(DecayField::Ricci, m, Region::Outer, p.radii, p.sphere_order);
  r.table("outer_ricci", Json{{"radius", outer.radii}, {"sup", outer.sup}});
  r.result("outer_ricci_slope", outer.exponent, 0.0);
  r.check("outer_ricci_slope_-10", outer.exponent, CheckKind::Abs, -10.0, 0.5);

  // leading expansion alone, for comparison
  const double e4 = std::pow(p.epsilon, 4);
  std::vector<double> lead;
  for (double x : p.radii)
    lead.push_back(sphere_sup(
        [&](const Point& y) {
          Sym2Jet g = 0.5 * e4 * tensor_T_at(y);
          for (int k = 0; k < kDim; ++k) g(k, k) += 1.0;
          const Geometry G = geometry_at(g);
          return norm_with_inverse(G.gi, curvature_from(G).ricci);
        },
        x, p.sphere_order));
  r.result("single_instanton_expansion_slope", fit_power(p.radii, lead).exponent, 0.0);

  const DecayScan ann = decay_scan(DecayField::Ricci, m, Region::Annulus, {}, p.sphere_order);
  r.result("annulus_ricci_over_eps4_delta-2", ann.prefactor, 0.0);
  const DecayScan inner = decay_scan(DecayField::Ricci, m, Region::Inner, {}, p.sphere_order);
  r.result("inner_ricci_max", inner.max_value, 0.0);
  r.check("inner_ricci_flat", inner.max_value, CheckKind::AtMost, 1e-8);

  const EHParams eh1(1.0);
  std::vector<double> rs, vals;
  const Point dir{0.3, -0.5, 0.7, 0.4};
  for (double x = 10; x <= 100.0001; x *= 1.25) {
    rs.push_back(x);
    vals.push_back(euclidean_norm(eh_expansion_remainder(eh1, (x / norm(dir)) * dir)));
  }
  const double rslope = fit_power(rs, vals).exponent;
  r.result("remainder_slope", rslope, 0.0);
  r.check("remainder_slope_-8", rslope, CheckKind::Abs, -8.0, 0.3);
  return r;
}

// ---------------------------------------------------------------------------

struct HeatParams {
  double t_min = 0.3;
  double t_max = 1.5;
  double t_step = 0.1;
  int grid = 17;
  void validate() const {
    detail::require(t_min >= 0.2 && t_min < t_max && t_max <= 2.0, "t-min", "need 0.2 <= t-min < t-max <= 2");
    detail::require(t_step > 0.0, "t-step", "must be positive");
    detail::require(grid >= 2, "grid", "must be >= 2");
  }
};

inline Report run_heat(const HeatParams& p) {
  p.validate();
  Report r("heat");
  r.config("t_min", p.t_min);
  r.config("t_max", p.t_max);
  r.config("t_step", p.t_step);
  r.config("grid", p.grid);
  double worst = 0.0;
  const Point x0{0.1, 0.0, -0.2, 0.3};
  for (const Point& x : detail::sample_points(50, 0.05, 0.9, 21))
    for (KernelSign s : {KernelSign::Plus, KernelSign::Minus}) {
      const double a = heat_kernel(s, {x, x0, 0.25, KernelMethod::Direct});
      const double b = heat_kernel(s, {x, x0, 0.25, KernelMethod::Dual});
      worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-3));
    }
  r.result("direct_dual_max_rel_diff_t0.25", worst, 0.0);
  r.check("direct_dual_agree", worst, CheckKind::AtMost, 1e-12);
  std::vector<double> ts;
  for (int i = 0;; ++i) {
    const double t = p.t_min + i * p.t_step;
    if (t > p.t_max + 1e-12) break;
    ts.push_back(t);
  }
  for (KernelSign s : {KernelSign::Plus, KernelSign::Minus}) {
    const HeatDecayFit f = decay_rate_scan(s, ts, p.grid);
    const std::string k = kernel_sign_name(s);
    r.table(k + "_sup", Json{{"t", f.t}, {"sup", f.sup}});
    r.result(k + "_rate", f.slope, f.rms_residual);
    r.result(k + "_prefactor", f.prefactor, 0.0);
    r.check(k + "_rate_vs_-4pi2", f.slope / (-4.0 * kPi * kPi), CheckKind::Abs, 1.0, 0.05);
  }
  return r;
}

// ---------------------------------------------------------------------------

struct FlowParams {
  double Lambda = 1e3;
  double omega = 0.0;  // 0 selects the lattice value
  double t0 = -1e6;
  long steps = 100000;
  int assumption_points = 2000;
  double t_far = 1e12;
  std::vector<double> proxy_times{-1e4, -1e5, -1e6};
  int proxy_cutoff = 16;
  int proxy_corner_points = 4;
  void validate() const {
    detail::require(Lambda > 0.0, "lambda", "must be positive");
    detail::require(omega >= 0.0, "omega", "must be >= 0");
    detail::require(t0 < -Lambda, "t0", "must be below -lambda");
    detail::require(steps >= 1, "steps", "must be >= 1");
    detail::require(assumption_points >= 2, "assumption-points", "must be >= 2");
    detail::require(t_far > Lambda, "t-far", "must exceed lambda");
    detail::require(proxy_times.size() >= 2, "proxy-times", "need at least two times");
    for (double t : proxy_times) detail::require(t <= -Lambda, "proxy-times", "must be <= -lambda");
    detail::require(proxy_cutoff >= 1, "proxy-cutoff", "must be >= 1");
    detail::require(proxy_corner_points >= 2, "proxy-corner-points", "must be >= 2");
  }
};

struct FlowRun {
  Report report{"flow"};
  std::vector<std::vector<double>> csv;  // t, epsilon, pred_sup_rm, ric_proxy
};

inline FlowRun run_flow_with_csv(const FlowParams& p) {
  p.validate();
  FlowRun out;
  Report& r = out.report;
  r.config("lambda", p.Lambda);
  r.config("omega", p.omega);
  r.config("t0", p.t0);
  r.config("steps", p.steps);
  r.config("assumption_points", p.assumption_points);
  r.config("t_far", p.t_far);
  r.config("proxy_times", p.proxy_times);
  r.config("proxy_cutoff", p.proxy_cutoff);
  r.config("proxy_corner_points", p.proxy_corner_points);
  FlowModel m = FlowModel::with_lattice_omega(p.Lambda);
  if (p.omega > 0.0) m.omega = p.omega;
  r.result("omega", m.omega, p.omega > 0.0 ? 0.0 : omega_partial(40).uncertainty);

  const Trajectory tr = ode_integrate(epsilon_of_t(p.t0, m), p.t0, -p.Lambda, p.steps, m);
  r.result("rk4_max_rel_deviation", tr.max_rel_deviation, 0.0);
  r.check("rk4_vs_closed_form", tr.max_rel_deviation, CheckKind::AtMost, 1e-9);

  const auto grid = log_time_grid(p.Lambda, p.t_far, p.assumption_points);
  const AssumptionReport a = check_closed_form(m, grid);
  r.result("assumption_worst_lower", a.worst_lower, 0.0);
  r.result("assumption_worst_upper", a.worst_upper, 0.0);
  r.result("assumption_worst_derivative", a.worst_derivative, 0.0);
  r.result("assumption_worst_holder", a.worst_holder, 0.0);
  r.check("assumption_clauses", a.all() ? 1.0 : 0.0, CheckKind::AtLeast, 1.0);

  double resid = 0.0;
  for (double t : grid) {
    const double e = epsilon_of_t(t, m), ep = epsilon_prime(t, m);
    const double scale = 32.0 * kPi * kPi * m.omega * std::pow(e, 8);
    resid = std::max(resid, std::abs(modulation_residual(e, ep, m.omega)) / scale);
  }
  r.result("modulation_residual_rel", resid, 0.0);
  r.check("modulation_residual_roundoff", resid, CheckKind::AtMost, 64.0 * std::numeric_limits<double>::epsilon());

  const RiemannBound rb = riemann_sup_eh1();
  r.result("M", rb.M, 0.0);
  double lo = 1e300, hi = 0.0;
  for (double t : log_time_grid(1e4, 1e8, 41)) {
    const BlowupPrediction bp = blowup_prediction(t, rb.M, m);
    lo = std::min(lo, bp.ratio);
    hi = std::max(hi, bp.ratio);
  }
  const double c = blowup_prediction(-p.Lambda, rb.M, m).c;
  r.result("rate_constant_c", c, 0.0);
  r.result("ratio_spread", hi / lo - 1.0, 0.0);
  r.check("ratio_constant_1pct", hi / lo - 1.0, CheckKind::AtMost, 0.01);

  const RicciProxy rp = ricci_decay_proxy(p.proxy_times, m, p.proxy_cutoff, p.proxy_corner_points);
  r.table("ricci_proxy", Json{{"t", rp.t}, {"epsilon", rp.eps}, {"delta", rp.delta}, {"sup", rp.sup}});
  r.result("ricci_proxy_exponent", rp.exponent, 0.0);
  r.check("ricci_proxy_exponent", rp.exponent, CheckKind::AtMost, -0.9);
  bool mono = true;
  for (std::size_t i = 1; i < rp.sup.size(); ++i) mono = mono && ((rp.sup[i] < rp.sup[i - 1]) == (rp.t[i] < rp.t[i - 1]));
  r.check("ricci_proxy_monotone", mono ? 1.0 : 0.0, CheckKind::AtLeast, 1.0);

  for (std::size_t i = 0; i < rp.t.size(); ++i)
    out.csv.push_back({rp.t[i], rp.eps[i], blowup_prediction(rp.t[i], rb.M, m).sup_rm, rp.sup[i]});
  return out;
}

inline Report run_flow(const FlowParams& p) { return run_flow_with_csv(p).report; }

}  // namespace ehglue::suites
