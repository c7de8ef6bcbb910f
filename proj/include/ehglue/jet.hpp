#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace ehglue {

/// Packed index of the symmetric pair (i, j) in an N x N symmetric matrix
/// stored row-wise as its upper triangle.
template <int N>
constexpr int sym_index(int i, int j) {
  if (i > j) {
    const int t = i;
    i = j;
    j = t;
  }
  return i * N - (i * (i - 1)) / 2 + (j - i);
}

template <int N>
constexpr int sym_size = N * (N + 1) / 2;

/// First-order truncated Taylor expansion: value and gradient.
template <int N>
struct Jet1 {
  double v = 0.0;
  std::array<double, N> g{};

  static Jet1 constant(double c) {
    Jet1 r;
    r.v = c;
    return r;
  }

  Jet1& operator+=(const Jet1& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) g[i] += o.g[i];
    return *this;
  }
  Jet1& operator-=(const Jet1& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) g[i] -= o.g[i];
    return *this;
  }
  Jet1& operator*=(double s) {
    v *= s;
    for (auto& x : g) x *= s;
    return *this;
  }
  /// this += a * b (product rule)
  void fma(const Jet1& a, const Jet1& b) {
    v += a.v * b.v;
    for (int i = 0; i < N; ++i) g[i] += a.v * b.g[i] + b.v * a.g[i];
  }
};

template <int N>
inline Jet1<N> operator+(Jet1<N> a, const Jet1<N>& b) { return a += b; }
template <int N>
inline Jet1<N> operator-(Jet1<N> a, const Jet1<N>& b) { return a -= b; }
template <int N>
inline Jet1<N> operator-(Jet1<N> a) { return a *= -1.0; }
template <int N>
inline Jet1<N> operator*(Jet1<N> a, double s) { return a *= s; }
template <int N>
inline Jet1<N> operator*(double s, Jet1<N> a) { return a *= s; }
template <int N>
inline Jet1<N> operator*(const Jet1<N>& a, const Jet1<N>& b) {
  Jet1<N> r;
  r.fma(a, b);
  return r;
}

/// Second-order truncated Taylor expansion of a scalar in N variables:
/// value, gradient and the symmetric Hessian (packed, N(N+1)/2 entries).
/// All arithmetic propagates derivatives exactly (to roundoff).
template <int N>
struct Jet2 {
  static constexpr int H = sym_size<N>;
  double v = 0.0;
  std::array<double, N> g{};
  std::array<double, H> h{};

  static Jet2 constant(double c) {
    Jet2 r;
    r.v = c;
    return r;
  }
  /// The coordinate function x_k evaluated at value `x`.
  static Jet2 variable(int k, double x) {
    Jet2 r;
    r.v = x;
    r.g[k] = 1.0;
    return r;
  }

  double hess(int i, int j) const { return h[sym_index<N>(i, j)]; }

  Jet2& operator+=(const Jet2& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) g[i] += o.g[i];
    for (int i = 0; i < H; ++i) h[i] += o.h[i];
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) g[i] -= o.g[i];
    for (int i = 0; i < H; ++i) h[i] -= o.h[i];
    return *this;
  }
  Jet2& operator+=(double s) {
    v += s;
    return *this;
  }
  Jet2& operator-=(double s) {
    v -= s;
    return *this;
  }
  Jet2& operator*=(double s) {
    v *= s;
    for (auto& x : g) x *= s;
    for (auto& x : h) x *= s;
    return *this;
  }
  Jet2& operator/=(double s) { return *this *= (1.0 / s); }

  /// this += a * b, Leibniz rule up to second order.
  void fma(const Jet2& a, const Jet2& b) {
    v += a.v * b.v;
    for (int i = 0; i < N; ++i) g[i] += a.v * b.g[i] + b.v * a.g[i];
    int k = 0;
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j, ++k)
        h[k] += a.v * b.h[k] + b.v * a.h[k] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
  }
  Jet2& operator*=(const Jet2& o) {
    Jet2 r;
    r.fma(*this, o);
    return *this = r;
  }

  Jet1<N> value_jet1() const {
    Jet1<N> r;
    r.v = v;
    r.g = g;
    return r;
  }
  /// Partial derivative d/dx_k as a first-order jet.
  Jet1<N> d(int k) const {
    Jet1<N> r;
    r.v = g[k];
    for (int j = 0; j < N; ++j) r.g[j] = h[sym_index<N>(k, j)];
    return r;
  }
  double laplacian() const {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += h[sym_index<N>(i, i)];
    return s;
  }
};

template <int N>
inline Jet2<N> operator+(Jet2<N> a, const Jet2<N>& b) { return a += b; }
template <int N>
inline Jet2<N> operator-(Jet2<N> a, const Jet2<N>& b) { return a -= b; }
template <int N>
inline Jet2<N> operator+(Jet2<N> a, double s) { return a += s; }
template <int N>
inline Jet2<N> operator+(double s, Jet2<N> a) { return a += s; }
template <int N>
inline Jet2<N> operator-(Jet2<N> a, double s) { return a -= s; }
template <int N>
inline Jet2<N> operator-(double s, Jet2<N> a) {
  a *= -1.0;
  return a += s;
}
template <int N>
inline Jet2<N> operator-(Jet2<N> a) { return a *= -1.0; }
template <int N>
inline Jet2<N> operator*(Jet2<N> a, double s) { return a *= s; }
template <int N>
inline Jet2<N> operator*(double s, Jet2<N> a) { return a *= s; }
template <int N>
inline Jet2<N> operator/(Jet2<N> a, double s) { return a /= s; }
template <int N>
inline Jet2<N> operator*(const Jet2<N>& a, const Jet2<N>& b) {
  Jet2<N> r;
  r.fma(a, b);
  return r;
}

/// Chain rule: f(a) given f(a.v), f'(a.v), f''(a.v).
template <int N>
inline Jet2<N> compose(const Jet2<N>& a, double f0, double f1, double f2) {
  Jet2<N> r;
  r.v = f0;
  for (int i = 0; i < N; ++i) r.g[i] = f1 * a.g[i];
  int k = 0;
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j, ++k) r.h[k] = f1 * a.h[k] + f2 * a.g[i] * a.g[j];
  return r;
}

template <int N>
inline Jet2<N> inv(const Jet2<N>& a) {
  const double i1 = 1.0 / a.v;
  return compose(a, i1, -i1 * i1, 2.0 * i1 * i1 * i1);
}
template <int N>
inline Jet2<N> operator/(const Jet2<N>& a, const Jet2<N>& b) { return a * inv(b); }
template <int N>
inline Jet2<N> operator/(double s, const Jet2<N>& b) { return inv(b) * s; }

template <int N>
inline Jet2<N> sqrt(const Jet2<N>& a) {
  const double s = std::sqrt(a.v);
  return compose(a, s, 0.5 / s, -0.25 / (s * a.v));
}
/// a^p for real p (a.v > 0 unless p is a non-negative integer).
template <int N>
inline Jet2<N> pow(const Jet2<N>& a, double p) {
  const double f0 = std::pow(a.v, p);
  const double f1 = p * std::pow(a.v, p - 1.0);
  const double f2 = p * (p - 1.0) * std::pow(a.v, p - 2.0);
  return compose(a, f0, f1, f2);
}
template <int N>
inline Jet2<N> exp(const Jet2<N>& a) {
  const double e = std::exp(a.v);
  return compose(a, e, e, e);
}
template <int N>
inline Jet2<N> sqr(const Jet2<N>& a) { return a * a; }

}  // namespace ehglue
