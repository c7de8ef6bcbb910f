#pragma once

#include <cmath>
#include <vector>

#include "errors.hpp"
#include "fit.hpp"
#include "summation.hpp"
#include "tensor.hpp"

namespace ehglue {

// Heat kernels on R^4 / Z^4 with pole x0:
//   Gamma_+ = (4 pi t)^-2 sum_{a in Z^4} e^{-|x - x0 - a|^2 / 4t}
//   Gamma_- = (4 pi t)^-2 sum_{a in Z^4} (-1)^{a1+a2+a3+a4} e^{-|x - x0 - a|^2 / 4t}
// Both factor into four one-dimensional sums, so the cube sum |a|_inf <= N is a
// product of sums over |a_i| <= N. The Poisson-dual forms run over k in Z^4
// (plus) and Z^4 + (1/2, 1/2, 1/2, 1/2) (minus).

enum class KernelSign { Plus, Minus };
enum class KernelMethod { Direct, Dual, Auto };

inline const char* kernel_sign_name(KernelSign s) { return s == KernelSign::Plus ? "plus" : "minus"; }
inline const char* kernel_method_name(KernelMethod m) {
  switch (m) {
    case KernelMethod::Direct: return "direct";
    case KernelMethod::Dual: return "dual";
    default: return "auto";
  }
}

struct KernelQuery {
  Point x{};
  Point x0{};
  double t = 1.0;
  KernelMethod method = KernelMethod::Auto;
};

inline constexpr double kKernelSwitchTime = 0.25;
inline constexpr double kKernelTailTol = 1e-16;

/// Cube half-width for the direct sum.
inline int direct_cutoff(double t, double tol = kKernelTailTol) {
  return static_cast<int>(std::ceil(std::sqrt(4.0 * t * std::log(1.0 / tol)))) + 2;
}

/// Largest |k| kept in the dual sum.
inline int dual_cutoff(double t, double tol = kKernelTailTol) {
  return static_cast<int>(std::ceil(std::sqrt(std::log(1.0 / tol) / (4.0 * kPi * kPi * t)))) + 2;
}

namespace detail {

struct Factor {
  double value = 0.0;
  double minus_one = 0.0;  // value - 1, accurate for the dual plus kernel
};

/// sum_{|a| <= N} s^a e^{-(y - a)^2 / 4t} / sqrt(4 pi t), s = +-1.
inline Factor direct_factor(double y, double t, KernelSign sign) {
  const int N = direct_cutoff(t);
  CompensatedSum s;
  for (int a = -N; a <= N; ++a) {
    const double d = y - a;
    const double w = sign == KernelSign::Minus && (a & 1) ? -1.0 : 1.0;
    s.add(w * std::exp(-d * d / (4.0 * t)));
  }
  const double v = s.value() / std::sqrt(4.0 * kPi * t);
  return {v, v - 1.0};
}

/// sum_k e^{-4 pi^2 t k^2} cos(2 pi k y) over k in Z (plus) or Z + 1/2 (minus).
inline Factor dual_factor(double y, double t, KernelSign sign) {
  const int K = dual_cutoff(t);
  CompensatedSum s;
  if (sign == KernelSign::Plus) {
    for (int k = K; k >= 1; --k) s.add(2.0 * std::exp(-4.0 * kPi * kPi * t * k * k) * std::cos(2.0 * kPi * k * y));
    const double u = s.value();
    return {1.0 + u, u};
  }
  for (int j = K; j >= 0; --j) {
    const double k = j + 0.5;
    s.add(2.0 * std::exp(-4.0 * kPi * kPi * t * k * k) * std::cos(2.0 * kPi * k * y));
  }
  return {s.value(), s.value() - 1.0};
}

/// Reduce y to [-1/2, 1/2]; returns the sign picked up by the minus kernel.
inline double reduce(double& y, KernelSign sign) {
  const double m = std::nearbyint(y);
  y -= m;
  return sign == KernelSign::Minus && std::fmod(std::abs(m), 2.0) == 1.0 ? -1.0 : 1.0;
}

inline bool use_direct(const KernelQuery& q) {
  if (!(q.t > 0.0) || !std::isfinite(q.t)) throw DomainError("heat kernel: t must be positive");
  return q.method == KernelMethod::Direct || (q.method == KernelMethod::Auto && q.t < kKernelSwitchTime);
}

inline Factor factor(double y, double t, KernelSign sign, bool direct) {
  return direct ? direct_factor(y, t, sign) : dual_factor(y, t, sign);
}

/// Product of the four factors; second member is product - 1 computed
/// without cancellation from the factors' minus_one parts.
inline Factor kernel_product(const Point& y0, double t, KernelSign sign, bool direct) {
  double sgn = 1.0, v = 1.0, p = 0.0;
  for (int i = 0; i < kDim; ++i) {
    double y = y0[i];
    sgn *= reduce(y, sign);
    const Factor f = factor(y, t, sign, direct);
    v *= f.value;
    p += f.minus_one + p * f.minus_one;
  }
  return {sgn * v, sign == KernelSign::Plus ? p : sgn * v - 1.0};
}

}  // namespace detail

inline double heat_kernel(KernelSign sign, const KernelQuery& q) {
  return detail::kernel_product(q.x - q.x0, q.t, sign, detail::use_direct(q)).value;
}

inline double gamma_plus(const KernelQuery& q) { return heat_kernel(KernelSign::Plus, q); }
inline double gamma_minus(const KernelQuery& q) { return heat_kernel(KernelSign::Minus, q); }

/// Gamma_+ - 1, accurate to relative precision in the dual mode.
inline double gamma_plus_minus_one(const KernelQuery& q) {
  return detail::kernel_product(q.x - q.x0, q.t, KernelSign::Plus, detail::use_direct(q)).minus_one;
}

/// sup over a uniform grid^4 sample of [-1/2, 1/2]^4 of |Gamma_+ - 1| (Plus)
/// or |Gamma_-| (Minus).
inline double kernel_sup(KernelSign sign, double t, int grid = 17, const Point& x0 = {},
                         KernelMethod method = KernelMethod::Auto) {
  if (grid < 2) throw DomainError("kernel_sup: grid must have >= 2 points per axis");
  const bool direct = detail::use_direct({{}, {}, t, method});
  // one-dimensional factor tables per axis
  std::vector<std::vector<detail::Factor>> tab(kDim, std::vector<detail::Factor>(grid));
  std::vector<std::vector<double>> sg(kDim, std::vector<double>(grid));
  for (int i = 0; i < kDim; ++i)
    for (int k = 0; k < grid; ++k) {
      double y = -0.5 + static_cast<double>(k) / (grid - 1) - x0[i];
      sg[i][k] = detail::reduce(y, sign);
      tab[i][k] = detail::factor(y, t, sign, direct);
    }
  const auto rows = parallel_map<double>(static_cast<std::size_t>(grid), [&](std::size_t a) {
    double mx = 0.0;
    for (int b = 0; b < grid; ++b)
      for (int c = 0; c < grid; ++c)
        for (int d = 0; d < grid; ++d) {
          const detail::Factor* f[4] = {&tab[0][a], &tab[1][b], &tab[2][c], &tab[3][d]};
          const double s = sg[0][a] * sg[1][b] * sg[2][c] * sg[3][d];
          double v = 1.0, p = 0.0;
          for (const auto* fi : f) {
            v *= fi->value;
            p += fi->minus_one + p * fi->minus_one;
          }
          mx = std::max(mx, sign == KernelSign::Plus ? std::abs(p) : std::abs(s * v));
        }
    return mx;
  });
  double mx = 0.0;
  for (double v : rows) mx = std::max(mx, v);
  return mx;
}

struct HeatDecayFit {
  KernelSign sign = KernelSign::Plus;
  std::vector<double> t;    // grid actually used
  std::vector<double> sup;  // sup values on it
  double slope = 0.0;       // d log sup / dt
  double prefactor = 0.0;   // exp(intercept)
  double rms_residual = 0.0;
  bool truncated = false;   // grid points dropped for underflow
};

/// Fits log sup |Gamma_+ - 1| (or log sup |Gamma_-|) against t.
inline HeatDecayFit decay_rate_scan(KernelSign sign, const std::vector<double>& ts, int grid = 17) {
  HeatDecayFit r;
  r.sign = sign;
  for (double t : ts) {
    if (!(t >= 0.2 && t <= 2.0)) throw DomainError("decay_rate_scan: t must lie in [0.2, 2]");
    const double s = kernel_sup(sign, t, grid);
    if (!(s > 1e-300)) {
      r.truncated = true;
      continue;
    }
    r.t.push_back(t);
    r.sup.push_back(s);
  }
  if (r.t.size() < 2) throw DomainError("decay_rate_scan: fewer than two usable grid points");
  std::vector<double> ly;
  for (double s : r.sup) ly.push_back(std::log(s));
  const LineFit f = fit_line(r.t, ly);
  r.slope = f.slope;
  r.prefactor = std::exp(f.intercept);
  r.rms_residual = f.rms_residual;
  return r;
}

/// max over a sample of |Gamma_+(x, t + s) - (Gamma_+(t) * Gamma_+(s))(x)| where
/// the convolution over the torus is the periodic grid^4 rectangle rule. The
/// kernels factor, so the four-dimensional grid sum is a product of
/// one-dimensional ones.
inline double semigroup_defect(double t, double s, int grid = 17, const std::vector<Point>& sample = {}) {
  if (!(t > 0.0 && s > 0.0)) throw DomainError("semigroup_defect: times must be positive");
  if (grid < 2) throw DomainError("semigroup_defect: grid must have >= 2 points per axis");
  auto f1 = [&](double y, double tt) {
    double r = y;
    detail::reduce(r, KernelSign::Plus);
    return detail::factor(r, tt, KernelSign::Plus, tt < kKernelSwitchTime).value;
  };
  std::vector<Point> pts = sample;
  if (pts.empty()) pts = {Point{0.0, 0.0, 0.0, 0.0}, Point{0.5, 0.5, 0.5, 0.5}, Point{0.1, -0.3, 0.25, 0.4}};
  double worst = 0.0;
  for (const Point& x : pts) {
    double conv = 1.0;
    for (int i = 0; i < kDim; ++i) {
      CompensatedSum c;
      for (int k = 0; k < grid; ++k) {
        const double y = -0.5 + (k + 0.5) / grid;
        c.add(f1(x[i] - y, t) * f1(y, s) / grid);
      }
      conv *= c.value();
    }
    const double exact = gamma_plus({x, {}, t + s});
    worst = std::max(worst, std::abs(exact - conv));
  }
  return worst;
}

}  // namespace ehglue
