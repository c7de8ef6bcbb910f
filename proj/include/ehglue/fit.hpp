#pragma once

#include <cmath>
#include <vector>

#include "errors.hpp"

namespace ehglue {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

/// Least-squares line y = intercept + slope * x.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw DomainError("fit_line: need at least two (x, y) pairs");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("fit_line: abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / n);
  return f;
}

struct PowerFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double rms_log_residual = 0.0;
};

/// Fit |y| = prefactor * x^exponent in log-log space.
inline PowerFit fit_power(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(std::abs(y[i]) > 0.0)) throw DomainError("fit_power: non-positive sample");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  const LineFit l = fit_line(lx, ly);
  return {l.slope, std::exp(l.intercept), l.rms_residual};
}

/// Value at s = 0 of the interpolating polynomial through (s_i, v_i) (Neville).
inline double extrapolate_to_zero(std::vector<double> s, std::vector<double> v) {
  const std::size_t n = s.size();
  if (n == 0 || v.size() != n) throw DomainError("extrapolate_to_zero: empty or mismatched input");
  for (std::size_t m = 1; m < n; ++m)
    for (std::size_t i = 0; i + m < n; ++i)
      v[i] = (s[i + m] * v[i] - s[i] * v[i + 1]) / (s[i + m] - s[i]);
  return v[0];
}

}  // namespace ehglue
