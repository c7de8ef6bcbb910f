#pragma once

#include <array>
#include <cmath>

#include "eh_metrics.hpp"
#include "tensor.hpp"

namespace ehglue {

using VecJ1 = std::array<J1, kDim>;
using Covector = std::array<double, kDim>;

/// Metric data at a point: components with jets, inverse, and the
/// Christoffel symbols Gam[k][sidx(i,j)] = Gamma^k_ij with first derivatives.
struct Geometry {
  Sym2Jet g;
  Sym2 gv;
  Sym2 gi;
  std::array<std::array<J1, kSym>, kDim> gam;

  double christoffel(int k, int i, int j) const { return gam[k][sidx(i, j)].v; }
};

inline Geometry geometry_at(const Sym2Jet& g) {
  Geometry G;
  G.g = g;
  G.gv = g.value();
  G.gi = inverse(G.gv);
  // First-kind symbols [ij, l] = (d_i g_lj + d_j g_li - d_l g_ij) / 2 with derivatives.
  std::array<std::array<J1, kSym>, kDim> first;
  for (int l = 0; l < kDim; ++l)
    for (int i = 0; i < kDim; ++i)
      for (int j = i; j < kDim; ++j) {
        J1 t = g(l, j).d(i) + g(l, i).d(j) - g(i, j).d(l);
        first[l][sidx(i, j)] = 0.5 * t;
      }
  // d_m g^kl = -g^ka d_m g_ab g^bl
  std::array<Sym2, kDim> dgi;
  for (int m = 0; m < kDim; ++m) {
    Mat4 t{};
    for (int k = 0; k < kDim; ++k)
      for (int b = 0; b < kDim; ++b) {
        double s = 0.0;
        for (int a = 0; a < kDim; ++a) s += G.gi(k, a) * g(a, b).g[m];
        t[k][b] = s;
      }
    for (int k = 0; k < kDim; ++k)
      for (int l = k; l < kDim; ++l) {
        double s = 0.0;
        for (int b = 0; b < kDim; ++b) s += t[k][b] * G.gi(b, l);
        dgi[m](k, l) = -s;
      }
  }
  for (int k = 0; k < kDim; ++k)
    for (int ij = 0; ij < kSym; ++ij) {
      J1 s;
      for (int l = 0; l < kDim; ++l) {
        const J1& f = first[l][ij];
        s.v += G.gi(k, l) * f.v;
        for (int m = 0; m < kDim; ++m) s.g[m] += G.gi(k, l) * f.g[m] + dgi[m](k, l) * f.v;
      }
      G.gam[k][ij] = s;
    }
  return G;
}

/// Full (0,4) curvature tensor R_ijkl = g(R(d_i, d_j) d_k, d_l), with
/// R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y], Ricci R_jk = R^i_ijk.
struct CurvatureAt {
  std::array<std::array<std::array<std::array<double, kDim>, kDim>, kDim>, kDim> R{};
  Sym2 ricci;
  double scalar = 0.0;

  double operator()(int i, int j, int k, int l) const { return R[i][j][k][l]; }
};

inline CurvatureAt curvature_from(const Geometry& G) {
  CurvatureAt c;
  // Mixed R^l_ijk.
  double Rm[kDim][kDim][kDim][kDim];
  for (int l = 0; l < kDim; ++l)
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j)
        for (int k = 0; k < kDim; ++k) {
          if (i == j) {
            Rm[l][i][j][k] = 0.0;
            continue;
          }
          double s = G.gam[l][sidx(j, k)].g[i] - G.gam[l][sidx(i, k)].g[j];
          for (int m = 0; m < kDim; ++m)
            s += G.gam[l][sidx(i, m)].v * G.gam[m][sidx(j, k)].v - G.gam[l][sidx(j, m)].v * G.gam[m][sidx(i, k)].v;
          Rm[l][i][j][k] = s;
        }
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j)
      for (int k = 0; k < kDim; ++k)
        for (int l = 0; l < kDim; ++l) {
          double s = 0.0;
          for (int m = 0; m < kDim; ++m) s += G.gv(l, m) * Rm[m][i][j][k];
          c.R[i][j][k][l] = s;
        }
  for (int j = 0; j < kDim; ++j)
    for (int k = j; k < kDim; ++k) {
      double s = 0.0;
      for (int i = 0; i < kDim; ++i) s += Rm[i][i][j][k];
      c.ricci(j, k) = s;
    }
  c.scalar = trace(G.gi, c.ricci);
  return c;
}

inline CurvatureAt curvature_at(const Sym2Jet& g) { return curvature_from(geometry_at(g)); }
inline CurvatureAt curvature_at(const Sym2Field& g, const Point& x) { return curvature_at(g(x)); }

/// |Rm|^2 = R_ijkl R^ijkl.
inline double riemann_norm2(const CurvatureAt& c, const Sym2& gi) {
  // Raise one index at a time.
  double A[kDim][kDim][kDim][kDim], B[kDim][kDim][kDim][kDim];
  for (int a = 0; a < kDim; ++a)
    for (int j = 0; j < kDim; ++j)
      for (int k = 0; k < kDim; ++k)
        for (int l = 0; l < kDim; ++l) {
          double s = 0.0;
          for (int i = 0; i < kDim; ++i) s += gi(a, i) * c.R[i][j][k][l];
          A[a][j][k][l] = s;
        }
  for (int a = 0; a < kDim; ++a)
    for (int b = 0; b < kDim; ++b)
      for (int k = 0; k < kDim; ++k)
        for (int l = 0; l < kDim; ++l) {
          double s = 0.0;
          for (int j = 0; j < kDim; ++j) s += gi(b, j) * A[a][j][k][l];
          B[a][b][k][l] = s;
        }
  for (int a = 0; a < kDim; ++a)
    for (int b = 0; b < kDim; ++b)
      for (int c2 = 0; c2 < kDim; ++c2)
        for (int l = 0; l < kDim; ++l) {
          double s = 0.0;
          for (int k = 0; k < kDim; ++k) s += gi(c2, k) * B[a][b][k][l];
          A[a][b][c2][l] = s;
        }
  double n2 = 0.0;
  for (int a = 0; a < kDim; ++a)
    for (int b = 0; b < kDim; ++b)
      for (int c2 = 0; c2 < kDim; ++c2)
        for (int d = 0; d < kDim; ++d) {
          double s = 0.0;
          for (int l = 0; l < kDim; ++l) s += gi(d, l) * A[a][b][c2][l];
          n2 += s * c.R[a][b][c2][d];
        }
  return n2;
}

/// Covariant derivative (nabla_b h)_ij as first-order jets: nh[b][sidx(i,j)].
inline std::array<std::array<J1, kSym>, kDim> covariant_derivative(const Geometry& G, const Sym2Jet& h) {
  std::array<std::array<J1, kSym>, kDim> nh;
  for (int b = 0; b < kDim; ++b)
    for (int i = 0; i < kDim; ++i)
      for (int j = i; j < kDim; ++j) {
        J1 s = h(i, j).d(b);
        for (int m = 0; m < kDim; ++m) {
          s -= G.gam[m][sidx(b, i)] * h(m, j).value_jet1();
          s -= G.gam[m][sidx(b, j)] * h(i, m).value_jet1();
        }
        nh[b][sidx(i, j)] = s;
      }
  return nh;
}

/// Rough Laplacian g^ab (nabla_a nabla_b h)_ij.
inline Sym2 rough_laplacian(const Geometry& G, const Sym2Jet& h) {
  const auto nh = covariant_derivative(G, h);
  Sym2 out;
  for (int i = 0; i < kDim; ++i)
    for (int j = i; j < kDim; ++j) {
      double s = 0.0;
      for (int a = 0; a < kDim; ++a)
        for (int b = 0; b < kDim; ++b) {
          const double gab = G.gi(a, b);
          if (gab == 0.0) continue;
          double t = nh[b][sidx(i, j)].g[a];
          for (int m = 0; m < kDim; ++m) {
            t -= G.christoffel(m, a, b) * nh[m][sidx(i, j)].v;
            t -= G.christoffel(m, a, i) * nh[b][sidx(m, j)].v;
            t -= G.christoffel(m, a, j) * nh[b][sidx(i, m)].v;
          }
          s += gab * t;
        }
      out(i, j) = s;
    }
  return out;
}

/// h^kl = g^ka g^lb h_ab
inline Sym2 raise_both(const Sym2& gi, const Sym2& h) {
  Sym2 r;
  for (int k = 0; k < kDim; ++k)
    for (int l = k; l < kDim; ++l) {
      double s = 0.0;
      for (int a = 0; a < kDim; ++a)
        for (int b = 0; b < kDim; ++b) s += gi(k, a) * gi(l, b) * h(a, b);
      r(k, l) = s;
    }
  return r;
}

/// Delta_L h = Delta h + 2 Rm(h) - Ric o h - h o Ric, Rm(h)_ab = R_kabl h^kl.
inline Sym2 lichnerowicz(const Geometry& G, const CurvatureAt& c, const Sym2Jet& h) {
  Sym2 out = rough_laplacian(G, h);
  const Sym2 hv = h.value();
  const Sym2 hu = raise_both(G.gi, hv);
  // Ric^k_i = g^km Ric_mi
  Mat4 ricm{};
  for (int k = 0; k < kDim; ++k)
    for (int i = 0; i < kDim; ++i) {
      double s = 0.0;
      for (int m = 0; m < kDim; ++m) s += G.gi(k, m) * c.ricci(m, i);
      ricm[k][i] = s;
    }
  for (int a = 0; a < kDim; ++a)
    for (int b = a; b < kDim; ++b) {
      double rm = 0.0;
      for (int k = 0; k < kDim; ++k)
        for (int l = 0; l < kDim; ++l) rm += c.R[k][a][b][l] * hu(k, l);
      double rh = 0.0;
      for (int k = 0; k < kDim; ++k) rh += ricm[k][a] * hv(k, b) + ricm[k][b] * hv(a, k);
      out(a, b) += 2.0 * rm - rh;
    }
  return out;
}

inline Sym2 lichnerowicz(const Sym2Jet& g, const Sym2Jet& h) {
  const Geometry G = geometry_at(g);
  return lichnerowicz(G, curvature_from(G), h);
}
inline Sym2 lichnerowicz(const Sym2Field& g, const Sym2Field& h, const Point& x) { return lichnerowicz(g(x), h(x)); }

struct DivTrace {
  VecJ1 div;  // (div h)_j = g^ik nabla_i h_kj, with first derivatives
  J2 trace;   // g^ij h_ij
  VecJ1 Y;    // g^ab (div h)_b - g^ab d_b tr h / 2
};

inline DivTrace div_trace(const Geometry& G, const Sym2Jet& h) {
  DivTrace d;
  const auto nh = covariant_derivative(G, h);
  const Sym2Jet gi = inverse(G.g);
  // g^ik as first-order jets
  std::array<J1, kSym> gi1;
  for (int k = 0; k < kSym; ++k) gi1[k] = gi.c[k].value_jet1();
  for (int j = 0; j < kDim; ++j) {
    J1 s;
    for (int i = 0; i < kDim; ++i)
      for (int k = 0; k < kDim; ++k) s.fma(gi1[sidx(i, k)], nh[i][sidx(k, j)]);
    d.div[j] = s;
  }
  J2 tr;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) tr.fma(gi(i, j), h(i, j));
  d.trace = tr;
  for (int a = 0; a < kDim; ++a) {
    J1 s;
    for (int b = 0; b < kDim; ++b) {
      J1 t = d.div[b] - 0.5 * tr.d(b);
      s.fma(gi1[sidx(a, b)], t);
    }
    d.Y[a] = s;
  }
  return d;
}

inline DivTrace div_trace(const Sym2Jet& g, const Sym2Jet& h) { return div_trace(geometry_at(g), h); }

inline Covector divergence_value(const DivTrace& d) {
  return {d.div[0].v, d.div[1].v, d.div[2].v, d.div[3].v};
}

inline VecJ1 to_jet1(const VecJ2& v) {
  VecJ1 r;
  for (int i = 0; i < kDim; ++i) r[i] = v[i].value_jet1();
  return r;
}

/// (L_V h)_ij = V^k d_k h_ij + h_kj d_i V^k + h_ik d_j V^k
inline Sym2 lie_derivative(const Sym2Jet& h, const VecJ1& V) {
  Sym2 out;
  for (int i = 0; i < kDim; ++i)
    for (int j = i; j < kDim; ++j) {
      double s = 0.0;
      for (int k = 0; k < kDim; ++k)
        s += V[k].v * h(i, j).g[k] + h(k, j).v * V[k].g[i] + h(i, k).v * V[k].g[j];
      out(i, j) = s;
    }
  return out;
}
inline Sym2 lie_derivative(const Sym2Jet& h, const VecJ2& V) { return lie_derivative(h, to_jet1(V)); }

/// (L_V a)_i = V^k d_k a_i + a_k d_i V^k for a one-form a.
inline Covector lie_derivative_form(const VecJ2& a, const VecJ2& V) {
  Covector out{};
  for (int i = 0; i < kDim; ++i) {
    double s = 0.0;
    for (int k = 0; k < kDim; ++k) s += V[k].v * a[i].g[k] + a[k].v * V[k].g[i];
    out[i] = s;
  }
  return out;
}

/// Lie bracket [V, W]^i = V^k d_k W^i - W^k d_k V^i.
inline Covector lie_bracket(const VecJ2& V, const VecJ2& W) {
  Covector out{};
  for (int i = 0; i < kDim; ++i) {
    double s = 0.0;
    for (int k = 0; k < kDim; ++k) s += V[k].v * W[i].g[k] - W[k].v * V[i].g[k];
    out[i] = s;
  }
  return out;
}

/// Q_g(k) = 2 Ric_{g+k} - 2 Ric_g + Delta_{L,g} k - L_Y (g + k),
/// Y = div_g k - grad tr_g k / 2.
inline Sym2 q_remainder(const Sym2Jet& g, const Sym2Jet& k) {
  const Sym2Jet gk = g + k;
  Mat4 l;
  if (!cholesky(gk.value(), l)) throw SingularMetricError("q_remainder: g + k is not positive definite",
                                                          condition_estimate(gk.value()));
  const Geometry G = geometry_at(g);
  const CurvatureAt cg = curvature_from(G);
  const CurvatureAt cgk = curvature_at(gk);
  const DivTrace dt = div_trace(G, k);
  const Sym2 dl = lichnerowicz(G, cg, k);
  const Sym2 lie = lie_derivative(gk, dt.Y);
  return 2.0 * cgk.ricci - 2.0 * cg.ricci + dl - lie;
}
inline Sym2 q_remainder(const Sym2Field& g, const Sym2Field& k, const Point& x) { return q_remainder(g(x), k(x)); }

}  // namespace ehglue
