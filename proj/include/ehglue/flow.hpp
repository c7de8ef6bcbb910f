#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "curvature.hpp"
#include "eh_metrics.hpp"
#include "errors.hpp"
#include "fit.hpp"
#include "glue.hpp"
#include "lattice.hpp"
#include "obstruction.hpp"

namespace ehglue {

/// Leading-order modulation model: eps(t) = (int_t^{-Lambda} eta - 32 omega t)^{-1/4}.
struct FlowModel {
  double omega = 7.70;
  double Lambda = 1e3;
  std::function<double(double)> eta;  // empty means eta = 0

  static FlowModel with_lattice_omega(double Lambda = 1e3) {
    FlowModel m;
    m.omega = omega_partial(40).extrapolated;
    m.Lambda = Lambda;
    return m;
  }
  bool eta_zero() const { return !eta; }
};

inline double delta_of_t(double t) {
  if (!(t < 0.0)) throw DomainError("delta_of_t: t must be negative");
  return std::pow(-t, -1.0 / 400.0);
}

namespace detail {

inline void check_time(const FlowModel& m, double t, const char* who) {
  if (!(m.Lambda > 0.0)) throw DomainError(std::string(who) + ": Lambda must be positive");
  if (!(t <= -m.Lambda)) throw DomainError(std::string(who) + ": need t <= -Lambda");
}

inline double eta_integral(const FlowModel& m, double t) {
  if (m.eta_zero() || t == -m.Lambda) return 0.0;
  for (double s : {t, -m.Lambda})
    if (std::abs(m.eta(s)) > std::pow(-s, -1.0 / 1000.0)) throw DomainError("epsilon_of_t: |eta(s)| exceeds (-s)^{-1/1000}");
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  return GK::integrate(m.eta, t, -m.Lambda, 20, 1e-14);
}

}  // namespace detail

inline double epsilon_of_t(double t, const FlowModel& m = {}) {
  detail::check_time(m, t, "epsilon_of_t");
  const double rad = detail::eta_integral(m, t) - 32.0 * m.omega * t;
  if (!(rad > 0.0)) throw DomainError("epsilon_of_t: non-positive radicand");
  return std::pow(rad, -0.25);
}

/// d eps / dt of the closed form: eps^5 (32 omega + eta(t)) / 4.
inline double epsilon_prime(double t, const FlowModel& m = {}) {
  const double e = epsilon_of_t(t, m);
  const double eta = m.eta_zero() ? 0.0 : m.eta(t);
  return 0.25 * std::pow(e, 5) * (32.0 * m.omega + eta);
}

/// 4 pi^2 eps^3 eps' - 32 pi^2 omega eps^8.
inline double modulation_residual(double eps, double eps_prime, double omega) {
  const double e3 = eps * eps * eps;
  return 4.0 * kPi * kPi * e3 * eps_prime - 32.0 * kPi * kPi * omega * e3 * e3 * eps * eps;
}

struct Trajectory {
  std::vector<double> t;
  std::vector<double> eps;
  double max_rel_deviation = 0.0;  // against eps^-4 = eps0^-4 - 32 omega (t - t0); eta = 0 only
};

/// Classical RK4 on eps' = eps^5 (32 omega + eta(t)) / 4 with uniform steps.
inline Trajectory ode_integrate(double eps0, double t0, double t1, long steps, const FlowModel& m = {}) {
  if (!(eps0 > 0.0)) throw DomainError("ode_integrate: eps0 must be positive");
  if (!(t0 < t1)) throw DomainError("ode_integrate: need t0 < t1");
  if (!(t1 <= -m.Lambda)) throw DomainError("ode_integrate: need t1 <= -Lambda");
  if (steps < 1) throw DomainError("ode_integrate: steps must be >= 1");
  auto f = [&](double t, double e) {
    const double eta = m.eta_zero() ? 0.0 : m.eta(t);
    return 0.25 * std::pow(e, 5) * (32.0 * m.omega + eta);
  };
  const double h = (t1 - t0) / static_cast<double>(steps);
  Trajectory tr;
  tr.t.reserve(steps + 1);
  tr.eps.reserve(steps + 1);
  double t = t0, e = eps0;
  tr.t.push_back(t);
  tr.eps.push_back(e);
  for (long i = 0; i < steps; ++i) {
    // linearised step size h * 5 eps^4 (32 omega + eta) / 4 far below the RK4 stability limit
    if (std::abs(h * 1.25 * std::pow(e, 4) * (32.0 * m.omega + 1.0)) > 0.5)
      throw DomainError("ode_integrate: step too large for the local time scale");
    const double k1 = f(t, e);
    const double k2 = f(t + 0.5 * h, e + 0.5 * h * k1);
    const double k3 = f(t + 0.5 * h, e + 0.5 * h * k2);
    const double k4 = f(t + h, e + h * k3);
    e += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t0 + h * static_cast<double>(i + 1);
    if (!(e > 0.0) || !std::isfinite(e)) throw DomainError("ode_integrate: solution left the positive reals");
    tr.t.push_back(t);
    tr.eps.push_back(e);
  }
  if (m.eta_zero()) {
    const double c = std::pow(eps0, -4);
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
      const double exact = std::pow(c - 32.0 * m.omega * (tr.t[i] - t0), -0.25);
      tr.max_rel_deviation = std::max(tr.max_rel_deviation, std::abs(tr.eps[i] / exact - 1.0));
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Assumption on eps(t)

struct AssumptionReport {
  std::size_t points = 0;
  std::size_t holder_stencils = 0;
  bool lower = true, upper = true, derivative = true, holder = true;
  double worst_lower = 0.0;       // max of (-1000 t)^{-1/4} / eps
  double worst_upper = 0.0;       // max of eps / (-t)^{-1/4}
  double worst_derivative = 0.0;  // max of |eps'| / (-t)^{-5/4}
  double worst_holder = 0.0;      // max of lhs / rhs of the Hoelder clause
  bool all() const { return lower && upper && derivative && holder; }
};

/// Checks the Assumption clauses on the given times (each <= -Lambda); the
/// Hoelder clause uses t' = t - s for s in {(-t)^{-1/2}, (-t)^{-1}}.
inline AssumptionReport check_assumption(const std::function<double(double)>& eps,
                                         const std::function<double(double)>& eps_prime, const std::vector<double>& ts,
                                         double alpha = 0.5) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("check_assumption: alpha must lie in (0, 1)");
  AssumptionReport r;
  for (double t : ts) {
    if (!(t < 0.0)) throw DomainError("check_assumption: times must be negative");
    const double e = eps(t), ep = eps_prime(t), mt = -t;
    ++r.points;
    const double lo = std::pow(1000.0 * mt, -0.25) / e, up = e / std::pow(mt, -0.25), d = std::abs(ep) / std::pow(mt, -1.25);
    r.worst_lower = std::max(r.worst_lower, lo);
    r.worst_upper = std::max(r.worst_upper, up);
    r.worst_derivative = std::max(r.worst_derivative, d);
    r.lower = r.lower && lo <= 1.0;
    r.upper = r.upper && up <= 1.0;
    r.derivative = r.derivative && d <= 1.0;
    for (double s : {std::pow(mt, -0.5), 1.0 / mt}) {
      const double lhs = std::pow(s, -alpha) * std::abs(ep - eps_prime(t - s));
      const double rhs = std::pow(mt, -1.25) * std::pow(e, -2.0 * alpha);
      ++r.holder_stencils;
      r.worst_holder = std::max(r.worst_holder, lhs / rhs);
      r.holder = r.holder && lhs <= rhs;
    }
  }
  return r;
}

/// Log-spaced times from -Lambda down to -t_max.
inline std::vector<double> log_time_grid(double Lambda, double t_max, int n) {
  if (!(Lambda > 0.0 && t_max > Lambda && n >= 2)) throw DomainError("log_time_grid: bad range");
  std::vector<double> ts(n);
  for (int i = 0; i < n; ++i) ts[i] = -Lambda * std::pow(t_max / Lambda, static_cast<double>(i) / (n - 1));
  ts.front() = -Lambda;
  ts.back() = -t_max;
  return ts;
}

/// The closed form with eta = 0 together with the glue constraint eps <= delta^2 / 10.
inline AssumptionReport check_closed_form(const FlowModel& m, const std::vector<double>& ts, double alpha = 0.5) {
  for (double t : ts)
    if (!(epsilon_of_t(t, m) <= delta_of_t(t) * delta_of_t(t) / 10.0))
      throw DomainError("check_closed_form: eps(t) <= delta(t)^2/10 fails");
  return check_assumption([&](double t) { return epsilon_of_t(t, m); }, [&](double t) { return epsilon_prime(t, m); },
                          ts, alpha);
}

// ---------------------------------------------------------------------------
// Curvature blow-up

struct RiemannBound {
  double M2 = 0.0;  // extrapolated |Rm|^2 of g_eh,1 at the bolt
  double M = 0.0;
};

/// |Rm|^2 of g_eh,1 sampled at r in {0.4, ..., 0.2} along a fixed direction and
/// extrapolated to r = 0 in s = r^4.
inline RiemannBound riemann_sup_eh1() {
  std::vector<double> s, v;
  const Point dir{0.3, 0.1, -0.5, 0.8};
  for (double r : {0.4, 0.35, 0.3, 0.25, 0.2}) {
    const Sym2Jet g = eh_metric_at(EHParams(1.0), (r / norm(dir)) * dir);
    const Geometry G = geometry_at(g);
    s.push_back(std::pow(r, 4));
    v.push_back(riemann_norm2(curvature_from(G), G.gi));
  }
  RiemannBound b;
  b.M2 = extrapolate_to_zero(s, v);
  b.M = std::sqrt(b.M2);
  return b;
}

struct BlowupPrediction {
  double sup_rm = 0.0;  // M eps(t)^-2
  double c = 0.0;       // M sqrt(32 omega)
  double ratio = 0.0;   // sup_rm / (-t)^{1/2}
};

inline BlowupPrediction blowup_prediction(double t, double M, const FlowModel& m = {}) {
  const double e = epsilon_of_t(t, m);
  BlowupPrediction p;
  p.sup_rm = M / (e * e);
  p.c = M * std::sqrt(32.0 * m.omega);
  p.ratio = p.sup_rm / std::sqrt(-t);
  return p;
}

// ---------------------------------------------------------------------------
// Ricci decay of the approximate metric along the flow

struct RicciProxy {
  std::vector<double> t, eps, delta, sup;
  double exponent = 0.0;  // fitted d log sup / d log(-t)
  double kappa = 0.01;
  std::vector<double> weighted;  // sup * (-t)^{1/2 - kappa}
};

/// sup |Ric| of the glued metric with eps = eps(t), delta = delta(t) over the
/// corner nodes of the cube (the cutoff transition lies beyond |x| = 1/2 for
/// these delta), fitted against -t.
inline RicciProxy ricci_decay_proxy(const std::vector<double>& ts, const FlowModel& m = {}, int cutoff = 16,
                                    int corner_points = 4, double kappa = 0.01) {
  if (ts.size() < 2) throw DomainError("ricci_decay_proxy: need at least two times");
  auto bg = background_model(cutoff);
  const QuadratureRule q = detail::corner_quadrature(corner_points);
  RicciProxy r;
  r.kappa = kappa;
  std::vector<double> lt, ls;
  for (double t : ts) {
    const double e = epsilon_of_t(t, m), d = delta_of_t(t);
    const GluedMetric g(GlueParams(e, d, cutoff), bg);
    const auto vals = parallel_map<double>(q.size(), [&](std::size_t i) {
      const Point& x = q.nodes[i];
      if (norm(x) <= 2.0 * d / 3.0) return 0.0;
      const Geometry G = geometry_at(g(x));
      return norm_with_inverse(G.gi, curvature_from(G).ricci);
    });
    double mx = 0.0;
    for (double v : vals) mx = std::max(mx, v);
    r.t.push_back(t);
    r.eps.push_back(e);
    r.delta.push_back(d);
    r.sup.push_back(mx);
    r.weighted.push_back(mx * std::pow(-t, 0.5 - kappa));
    lt.push_back(std::log(-t));
    ls.push_back(std::log(mx));
  }
  r.exponent = fit_line(lt, ls).slope;
  return r;
}

// ---------------------------------------------------------------------------
// Weighted norm

struct WeightSpec {
  double gamma = 1.0;
  double sigma = 1.0;
  double alpha = 0.5;
  double Lambda = 1e3;

  void validate() const {
    if (!(gamma > 0.0)) throw DomainError("WeightSpec: gamma must be positive");
    if (!(sigma > 0.0 && sigma < 2.0)) throw DomainError("WeightSpec: sigma must lie in (0, 2)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("WeightSpec: alpha must lie in (0, 1)");
    if (!(Lambda > 0.0)) throw DomainError("WeightSpec: Lambda must be positive");
  }
};

struct WeightSample {
  Point x{};
  double t = 0.0;
  Sym2 h;
};

struct WeightedNormEstimate {
  double value = 0.0;
  std::size_t samples_used = 0;
  std::size_t pairs_used = 0;
  std::size_t skipped = 0;  // inadmissible samples and pairs
};

/// Metric used for |h|: the glued metric with eps = (-t)^{-1/4}, delta = (-t)^{-1/400}.
using TimeMetric = std::function<Sym2(const Point&, double)>;

inline TimeMetric weight_metric(int cutoff = 8) {
  auto bg = background_model(cutoff);
  auto cache = std::make_shared<std::map<double, std::shared_ptr<const GluedMetric>>>();
  return [bg, cache, cutoff](const Point& x, double t) {
    auto& slot = (*cache)[t];
    if (!slot) slot = std::make_shared<const GluedMetric>(GlueParams(std::pow(-t, -0.25), delta_of_t(t), cutoff), bg);
    return (*slot)(x).value();
  };
}

/// Lower bound of the weighted Hoelder norm from samples, taking r = |x|. The
/// Hoelder quotient is evaluated for pairs at the same point and different
/// times (parallel transport is then the identity and d_t = 0); pairs at
/// different points are not formed.
inline WeightedNormEstimate weighted_norm_sample(const std::vector<WeightSample>& samples, const WeightSpec& w,
                                                 const TimeMetric& metric) {
  w.validate();
  WeightedNormEstimate est;
  auto admissible = [&](const WeightSample& s) {
    const double r = norm(s.x);
    if (!(s.t <= -w.Lambda) || r == 0.0) return false;
    for (double c : s.x)
      if (std::abs(c) > 0.5) return false;
    return true;
  };
  auto hnorm = [&](const Point& x, double t, const Sym2& h) { return norm_with_inverse(inverse(metric(x, t)), h); };
  std::vector<char> ok(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const WeightSample& s = samples[i];
    ok[i] = admissible(s);
    if (!ok[i]) {
      ++est.skipped;
      continue;
    }
    const double mt = -s.t, r = norm(s.x), base = std::pow(mt, -0.25) + r;
    const double q = std::pow(mt, w.gamma) * std::pow(base, w.sigma) * hnorm(s.x, s.t, s.h);
    est.value = std::max(est.value, q);
    ++est.samples_used;
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!ok[i]) continue;
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (i == j || !ok[j] || samples[i].x != samples[j].x || samples[i].t == samples[j].t) continue;
      const WeightSample &a = samples[i], &b = samples[j];
      const double mt = -a.t, r = norm(a.x), base = std::pow(mt, -0.25) + r, dt = std::abs(a.t - b.t);
      if (dt > base * base) {
        ++est.skipped;
        continue;
      }
      const double first = std::pow(mt, w.gamma) * std::pow(base, w.sigma) * hnorm(a.x, a.t, a.h);
      const double second = std::pow(mt, w.gamma) * std::pow(base, w.sigma + 2.0 * w.alpha) * std::pow(dt, -w.alpha) *
                            hnorm(a.x, a.t, a.h - b.h);
      est.value = std::max(est.value, first + second);
      ++est.pairs_used;
    }
  }
  return est;
}

}  // namespace ehglue
