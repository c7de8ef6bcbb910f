#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "jet.hpp"

namespace ehglue {

inline constexpr int kDim = 4;
inline constexpr int kSym = sym_size<kDim>;
inline constexpr double kPi = 3.14159265358979323846264338327950288;

using Point = std::array<double, kDim>;
using Mat4 = std::array<std::array<double, kDim>, kDim>;
using J2 = Jet2<kDim>;
using J1 = Jet1<kDim>;

inline constexpr int sidx(int i, int j) { return sym_index<kDim>(i, j); }

inline double norm2(const Point& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]; }
inline double norm(const Point& x) { return std::sqrt(norm2(x)); }
inline double max_abs(const Point& x) {
  return std::max({std::abs(x[0]), std::abs(x[1]), std::abs(x[2]), std::abs(x[3])});
}
inline Point operator-(const Point& a, const Point& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}
inline Point operator+(const Point& a, const Point& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}
inline Point operator*(double s, const Point& a) { return {s * a[0], s * a[1], s * a[2], s * a[3]}; }

/// Components h_ij = h_ji of a symmetric (0,2)-tensor in Cartesian coordinates.
struct Sym2 {
  std::array<double, kSym> c{};

  double operator()(int i, int j) const { return c[sidx(i, j)]; }
  double& operator()(int i, int j) { return c[sidx(i, j)]; }

  static Sym2 identity() {
    Sym2 r;
    for (int i = 0; i < kDim; ++i) r(i, i) = 1.0;
    return r;
  }
  static Sym2 diag(double a, double b, double c3, double d) {
    Sym2 r;
    r(0, 0) = a;
    r(1, 1) = b;
    r(2, 2) = c3;
    r(3, 3) = d;
    return r;
  }
  Mat4 matrix() const {
    Mat4 m{};
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j) m[i][j] = (*this)(i, j);
    return m;
  }
  Sym2& operator+=(const Sym2& o) {
    for (int k = 0; k < kSym; ++k) c[k] += o.c[k];
    return *this;
  }
  Sym2& operator-=(const Sym2& o) {
    for (int k = 0; k < kSym; ++k) c[k] -= o.c[k];
    return *this;
  }
  Sym2& operator*=(double s) {
    for (auto& x : c) x *= s;
    return *this;
  }
};

inline Sym2 operator+(Sym2 a, const Sym2& b) { return a += b; }
inline Sym2 operator-(Sym2 a, const Sym2& b) { return a -= b; }
inline Sym2 operator*(double s, Sym2 a) { return a *= s; }

/// Frobenius norm of the full 4x4 component matrix (Euclidean tensor norm).
inline double euclidean_norm(const Sym2& h) {
  double s = 0.0;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) s += h(i, j) * h(i, j);
  return std::sqrt(s);
}
inline double max_abs(const Sym2& h) {
  double m = 0.0;
  for (double x : h.c) m = std::max(m, std::abs(x));
  return m;
}

/// Tensor components together with their first and second coordinate derivatives.
struct Sym2Jet {
  std::array<J2, kSym> c{};

  const J2& operator()(int i, int j) const { return c[sidx(i, j)]; }
  J2& operator()(int i, int j) { return c[sidx(i, j)]; }

  Sym2 value() const {
    Sym2 r;
    for (int k = 0; k < kSym; ++k) r.c[k] = c[k].v;
    return r;
  }
  static Sym2Jet constant(const Sym2& s) {
    Sym2Jet r;
    for (int k = 0; k < kSym; ++k) r.c[k].v = s.c[k];
    return r;
  }
  static Sym2Jet identity() { return constant(Sym2::identity()); }

  Sym2Jet& operator+=(const Sym2Jet& o) {
    for (int k = 0; k < kSym; ++k) c[k] += o.c[k];
    return *this;
  }
  Sym2Jet& operator-=(const Sym2Jet& o) {
    for (int k = 0; k < kSym; ++k) c[k] -= o.c[k];
    return *this;
  }
  Sym2Jet& operator*=(double s) {
    for (auto& x : c) x *= s;
    return *this;
  }
  Sym2Jet& operator*=(const J2& s) {
    for (auto& x : c) x *= s;
    return *this;
  }
};

inline Sym2Jet operator+(Sym2Jet a, const Sym2Jet& b) { return a += b; }
inline Sym2Jet operator-(Sym2Jet a, const Sym2Jet& b) { return a -= b; }
inline Sym2Jet operator*(double s, Sym2Jet a) { return a *= s; }
inline Sym2Jet operator*(const J2& s, Sym2Jet a) { return a *= s; }

/// sym(a (x) b) with jet coefficients: component (i,j) = (a_i b_j + a_j b_i)/2.
inline Sym2Jet sym_product(const std::array<J2, kDim>& a, const std::array<J2, kDim>& b) {
  Sym2Jet r;
  for (int i = 0; i < kDim; ++i)
    for (int j = i; j < kDim; ++j) {
      J2& t = r(i, j);
      t.fma(a[i], b[j]);
      t.fma(a[j], b[i]);
      t *= 0.5;
    }
  return r;
}

// ---------------------------------------------------------------------------
// Dense 4x4 linear algebra on component matrices.

inline double determinant(const Mat4& m) {
  // Laplace expansion via 2x2 minors.
  const double s0 = m[0][0] * m[1][1] - m[1][0] * m[0][1];
  const double s1 = m[0][0] * m[1][2] - m[1][0] * m[0][2];
  const double s2 = m[0][0] * m[1][3] - m[1][0] * m[0][3];
  const double s3 = m[0][1] * m[1][2] - m[1][1] * m[0][2];
  const double s4 = m[0][1] * m[1][3] - m[1][1] * m[0][3];
  const double s5 = m[0][2] * m[1][3] - m[1][2] * m[0][3];
  const double c5 = m[2][2] * m[3][3] - m[3][2] * m[2][3];
  const double c4 = m[2][1] * m[3][3] - m[3][1] * m[2][3];
  const double c3 = m[2][1] * m[3][2] - m[3][1] * m[2][2];
  const double c2 = m[2][0] * m[3][3] - m[3][0] * m[2][3];
  const double c1 = m[2][0] * m[3][2] - m[3][0] * m[2][2];
  const double c0 = m[2][0] * m[3][1] - m[3][0] * m[2][1];
  return s0 * c5 - s1 * c4 + s2 * c3 + s3 * c2 - s4 * c1 + s5 * c0;
}

/// Cholesky factorisation; returns false if the matrix is not positive definite.
inline bool cholesky(const Sym2& g, Mat4& l) {
  l = Mat4{};
  for (int j = 0; j < kDim; ++j) {
    double d = g(j, j);
    for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (!(d > 0.0)) return false;
    l[j][j] = std::sqrt(d);
    for (int i = j + 1; i < kDim; ++i) {
      double s = g(i, j);
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  return true;
}

/// Determinant; positive definite input goes through Cholesky.
inline double determinant(const Sym2& g) {
  Mat4 l;
  if (!cholesky(g, l)) return determinant(g.matrix());
  const double d = l[0][0] * l[1][1] * l[2][2] * l[3][3];
  return d * d;
}

/// Ratio of the largest to smallest eigenvalue bound from the Cholesky diagonal
/// (cheap diagnostic, exact for diagonal matrices).
inline double condition_estimate(const Sym2& g) {
  Mat4 l;
  if (!cholesky(g, l)) return std::numeric_limits<double>::infinity();
  double lo = l[0][0], hi = l[0][0];
  for (int i = 1; i < kDim; ++i) {
    lo = std::min(lo, l[i][i]);
    hi = std::max(hi, l[i][i]);
  }
  return (hi * hi) / (lo * lo);
}

/// Inverse of a positive definite symmetric matrix.
/// Throws SingularMetricError if g is not positive definite or numerically singular.
inline Sym2 inverse(const Sym2& g) {
  Mat4 l;
  if (!cholesky(g, l)) throw SingularMetricError("metric is not positive definite", condition_estimate(g));
  const double cond = condition_estimate(g);
  if (cond > 1e14) throw SingularMetricError("metric is numerically singular", cond);
  // Invert L then form L^-T L^-1.
  Mat4 li{};
  for (int i = 0; i < kDim; ++i) {
    li[i][i] = 1.0 / l[i][i];
    for (int j = 0; j < i; ++j) {
      double s = 0.0;
      for (int k = j; k < i; ++k) s -= l[i][k] * li[k][j];
      li[i][j] = s / l[i][i];
    }
  }
  Sym2 r;
  for (int i = 0; i < kDim; ++i)
    for (int j = i; j < kDim; ++j) {
      double s = 0.0;
      for (int k = std::max(i, j); k < kDim; ++k) s += li[k][i] * li[k][j];
      r(i, j) = s;
    }
  return r;
}

/// Inverse metric with first and second derivatives:
/// d(g^-1) = -g^-1 dg g^-1, d2(g^-1) = g^-1 (dg g^-1 dg + dg g^-1 dg - d2g) g^-1.
inline Sym2Jet inverse(const Sym2Jet& g) {
  const Sym2 gi = inverse(g.value());
  Sym2Jet r;
  for (int k = 0; k < kSym; ++k) r.c[k].v = gi.c[k];
  // A_a = g^-1 (d_a g) g^-1
  std::array<Sym2, kDim> dgi;
  for (int a = 0; a < kDim; ++a) {
    Mat4 t{};
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j) {
        double s = 0.0;
        for (int m = 0; m < kDim; ++m) s += gi(i, m) * g(m, j).g[a];
        t[i][j] = s;
      }
    for (int i = 0; i < kDim; ++i)
      for (int j = i; j < kDim; ++j) {
        double s = 0.0;
        for (int m = 0; m < kDim; ++m) s += t[i][m] * gi(m, j);
        dgi[a](i, j) = -s;
      }
  }
  for (int a = 0; a < kDim; ++a)
    for (int k = 0; k < kSym; ++k) r.c[k].g[a] = dgi[a].c[k];
  // d_b d_a g^-1 = -(d_b g^-1) dg_a g^-1 - g^-1 d2g_ab g^-1 - g^-1 dg_a (d_b g^-1)
  for (int a = 0; a < kDim; ++a)
    for (int b = a; b < kDim; ++b) {
      Mat4 m1{}, m2{};
      for (int i = 0; i < kDim; ++i)
        for (int j = 0; j < kDim; ++j) {
          double s1 = 0.0, s2 = 0.0;
          for (int m = 0; m < kDim; ++m) {
            s1 += dgi[b](i, m) * g(m, j).g[a] + dgi[a](i, m) * g(m, j).g[b];
            s2 += gi(i, m) * g(m, j).hess(a, b);
          }
          m1[i][j] = s1;
          m2[i][j] = s2;
        }
      const int hab = sym_index<kDim>(a, b);
      for (int i = 0; i < kDim; ++i)
        for (int j = i; j < kDim; ++j) {
          double s = 0.0;
          for (int m = 0; m < kDim; ++m) s += (m1[i][m] + m2[i][m]) * gi(m, j);
          r(i, j).h[hab] = -s;
        }
    }
  return r;
}

/// <h, k>_g = g^ik g^jl h_ij k_kl given the inverse metric.
inline double pair_with_inverse(const Sym2& gi, const Sym2& h, const Sym2& k) {
  // Raise both indices of h then contract.
  double s = 0.0;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) {
      double hij = 0.0;
      for (int a = 0; a < kDim; ++a)
        for (int b = 0; b < kDim; ++b) hij += gi(i, a) * gi(j, b) * h(a, b);
      s += hij * k(i, j);
    }
  return s;
}

/// Metric pairing <h, k>_g of symmetric 2-tensors.
inline double inner_product(const Sym2& g, const Sym2& h, const Sym2& k) {
  return pair_with_inverse(inverse(g), h, k);
}

inline double trace(const Sym2& gi, const Sym2& h) {
  double s = 0.0;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) s += gi(i, j) * h(i, j);
  return s;
}

inline double norm_with_inverse(const Sym2& gi, const Sym2& h) {
  return std::sqrt(std::max(0.0, pair_with_inverse(gi, h, h)));
}

}  // namespace ehglue
