#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include "errors.hpp"
#include "summation.hpp"
#include "tensor.hpp"

namespace ehglue {

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: n must be positive");
  const auto pos = boost::math::legendre_p_zeros<double>(n);  // non-negative zeros
  std::vector<double> x, w;
  auto weight = [n](double z) {
    const double dp = boost::math::legendre_p_prime<double>(n, z);
    return 2.0 / ((1.0 - z * z) * dp * dp);
  };
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) {
    if (*it == 0.0) continue;
    x.push_back(-*it);
    w.push_back(weight(*it));
  }
  if (n % 2 == 1) {
    x.push_back(0.0);
    w.push_back(weight(0.0));
  }
  for (double z : pos) {
    if (z == 0.0) continue;
    x.push_back(z);
    w.push_back(weight(z));
  }
  return {x, w};
}

/// Gauss-Legendre rule mapped to [a, b].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double a, double b) {
  auto [x, w] = gauss_legendre(n);
  const double h = 0.5 * (b - a), m = 0.5 * (b + a);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = m + h * x[i];
    w[i] *= h;
  }
  return {x, w};
}

enum class QuadKind { Surface, Radial, AnnulusVolume, Volume };

struct QuadratureRule {
  QuadKind kind = QuadKind::Surface;
  std::vector<Point> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  double total_weight() const { return compensated_sum(weights); }

  /// Weighted sum of f over the nodes; f is evaluated in parallel, the
  /// reduction runs in node order.
  template <class F>
  double integrate(F&& f) const {
    const auto vals = parallel_map<double>(nodes.size(), [&](std::size_t i) { return weights[i] * f(nodes[i]); });
    return compensated_sum(vals);
  }
  /// As integrate(), also returning the sum of |w f| (roundoff scale).
  template <class F>
  std::pair<double, double> integrate_abs(F&& f) const {
    const auto vals = parallel_map<double>(nodes.size(), [&](std::size_t i) { return weights[i] * f(nodes[i]); });
    CompensatedSum s;
    for (double v : vals) s.add(v);
    return {s.value(), s.abs_sum()};
  }
};

/// Product rule on the sphere |x| = rho in hyperspherical angles
/// x = rho (cos p, sin p cos t, sin p sin t cos f, sin p sin t sin f).
/// The p-rule is Gaussian for the weight sin^2 p, the t-rule is Gauss-Legendre
/// in cos t, and f is sampled uniformly at 2*order points. Polynomials of degree
/// up to 2*order-1 are integrated exactly.
inline QuadratureRule s3_quadrature(int order, double rho = 1.0) {
  if (order < 4) throw DomainError("s3_quadrature: order must be >= 4");
  if (!(rho > 0.0)) throw DomainError("s3_quadrature: radius must be positive");
  QuadratureRule q;
  q.kind = QuadKind::Surface;
  const int n = order;
  std::vector<double> cp(n), sp(n), wp(n);
  for (int k = 1; k <= n; ++k) {
    const double a = k * kPi / (n + 1);
    cp[k - 1] = std::cos(a);
    sp[k - 1] = std::sin(a);
    wp[k - 1] = kPi / (n + 1) * sp[k - 1] * sp[k - 1];
  }
  auto [ct, wt] = gauss_legendre(n);
  const int m = 2 * n;
  const double r3 = rho * rho * rho;
  q.nodes.reserve(static_cast<std::size_t>(n) * n * m);
  q.weights.reserve(q.nodes.capacity());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double st = std::sqrt(std::max(0.0, 1.0 - ct[j] * ct[j]));
      for (int k = 0; k < m; ++k) {
        const double f = 2.0 * kPi * k / m;
        q.nodes.push_back({rho * cp[i], rho * sp[i] * ct[j], rho * sp[i] * st * std::cos(f),
                           rho * sp[i] * st * std::sin(f)});
        q.weights.push_back(r3 * wp[i] * wt[j] * (2.0 * kPi / m));
      }
    }
  }
  return q;
}

/// Volume rule on the shell r0 <= |x| <= r1: Gauss-Legendre in r (r^3 folded
/// into the weights) times the S^3 rule.
inline QuadratureRule annulus_quadrature(int radial_points, int sphere_order, double r0, double r1) {
  if (!(r0 >= 0.0 && r1 > r0)) throw DomainError("annulus_quadrature: need 0 <= r0 < r1");
  const QuadratureRule s = s3_quadrature(sphere_order, 1.0);
  auto [r, w] = gauss_legendre(radial_points, r0, r1);
  QuadratureRule q;
  q.kind = QuadKind::AnnulusVolume;
  q.nodes.reserve(r.size() * s.size());
  q.weights.reserve(r.size() * s.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t k = 0; k < s.size(); ++k) {
      q.nodes.push_back(r[i] * s.nodes[k]);
      q.weights.push_back(w[i] * r[i] * r[i] * r[i] * s.weights[k]);
    }
  return q;
}

/// Gauss-Legendre rule on [a, b] as a one-dimensional QuadratureRule (node in slot 0).
inline QuadratureRule radial_quadrature(int points, double a, double b) {
  if (!(b > a)) throw DomainError("radial_quadrature: need a < b");
  auto [x, w] = gauss_legendre(points, a, b);
  QuadratureRule q;
  q.kind = QuadKind::Radial;
  for (std::size_t i = 0; i < x.size(); ++i) {
    q.nodes.push_back({x[i], 0.0, 0.0, 0.0});
    q.weights.push_back(w[i]);
  }
  return q;
}

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error (panel estimate + tail bound)
  double tail = 0.0;   // analytic tail contribution included in value
};

/// Adaptive Gauss-Kronrod integration of f over [a, b]. For b = +inf the
/// integrand is assumed to decay like r^{3-p} (a radial density times r^3),
/// with p > 4; the interval is truncated at R* and the power-law tail
/// f(R*) R* / (p - 4) is added analytically.
template <class F>
QuadResult radial_integrate(F&& f, double a, double b, double p = 0.0, double rel_tol = 1e-13) {
  if (!(a >= 0.0)) throw DomainError("radial_integrate: a must be >= 0");
  const bool infinite = std::isinf(b);
  if (infinite && !(p > 4.0)) throw DomainError("radial_integrate: tail r^{3-p} not integrable for p <= 4");
  if (!infinite && !(b > a)) throw DomainError("radial_integrate: need a < b");
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  QuadResult res;
  auto panel = [&](double lo, double hi) {
    double err = 0.0;
    const double v = GK::integrate(f, lo, hi, 15, rel_tol, &err);
    res.error += err;
    return v;
  };
  if (!infinite) {
    res.value = panel(a, b);
    res.error += 64.0 * std::numeric_limits<double>::epsilon() * std::abs(res.value);
    return res;
  }
  // Geometric panels until the analytic tail is negligible.
  CompensatedSum s;
  double lo = a, hi = std::max(1.0, 2.0 * a);
  double tail = 0.0;
  for (int k = 0; k < 200; ++k) {
    s.add(panel(lo, hi));
    tail = f(hi) * hi / (p - 4.0);
    if (std::abs(tail) <= rel_tol * std::abs(s.value()) * 1e-3 || hi > 1e150) break;
    lo = hi;
    hi *= 4.0;
  }
  res.tail = tail;
  res.value = s.value() + tail;
  // The tail is a leading-order estimate; bound its error by its own size.
  res.error += std::abs(tail) + 64.0 * std::numeric_limits<double>::epsilon() * std::abs(res.value);
  return res;
}

}  // namespace ehglue
