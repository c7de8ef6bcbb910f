#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "eh_metrics.hpp"
#include "fit.hpp"
#include "summation.hpp"

namespace ehglue {

using Site = std::array<int, kDim>;
enum class Parity { Even, Odd };

inline int site_norm2(const Site& a) { return a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[3] * a[3]; }
inline Parity parity_of(const Site& a) {
  return ((a[0] + a[1] + a[2] + a[3]) % 2 == 0) ? Parity::Even : Parity::Odd;
}
inline int max_abs(const Site& a) {
  return std::max({std::abs(a[0]), std::abs(a[1]), std::abs(a[2]), std::abs(a[3])});
}

struct LatticeCutoff {
  int N = 1;
  Parity parity = Parity::Even;
  LatticeCutoff(int n, Parity p) : N(n), parity(p) {
    if (n < 1) throw DomainError("lattice cutoff must be >= 1");
  }
};

/// |a|^-10 (|a|^4 - 6 (a1^2 + a2^2)(a3^2 + a4^2))
inline double omega_term(const Site& a) {
  const double s = site_norm2(a);
  if (s == 0.0) throw DomainError("omega_term: a = 0");
  const double p = a[0] * a[0] + a[1] * a[1], q = a[2] * a[2] + a[3] * a[3];
  return (s * s - 6.0 * p * q) / (s * s * s * s * s);
}

/// Euclidean flux of the pair (T at the origin, translate of T or T-hat at a)
/// through a small sphere around the origin.
inline double flux_term_exact(const Site& a) {
  if (site_norm2(a) == 0) throw DomainError("flux_term_exact: a = 0");
  if (parity_of(a) == Parity::Even) return 0.0;
  return 64.0 * kPi * kPi * omega_term(a);
}

struct OmegaTable {
  int N = 0;
  std::vector<double> shell;    // shell[n]: odd sites with max|a_i| = n
  std::vector<double> partial;  // partial[n] = shell[1] + ... + shell[n]
  double extrapolated = 0.0;
  double uncertainty = 0.0;
  double value() const { return partial[N]; }
};

namespace detail {

/// a + b / n^2 through the cube partial sums at the given n (least squares).
inline double omega_fit(const OmegaTable& t, const std::vector<int>& ns) {
  std::vector<double> x, y;
  for (int n : ns) {
    x.push_back(1.0 / (double(n) * n));
    y.push_back(t.partial[n]);
  }
  return fit_line(x, y).intercept;
}

}  // namespace detail

/// Cube partial sums of omega. Terms decay like |a|^-6 with zero angular mean,
/// so the cube tail behaves like N^-2; the limit is extrapolated from
/// a + b/N^2 over {N/4, N/2, N}.
inline OmegaTable omega_partial(int N) {
  if (N < 1) throw DomainError("omega_partial: N must be >= 1");
  std::vector<CompensatedSum> acc(N + 1);
  // Sign symmetry: sum over a_i >= 0 with weight 2^(number of nonzero entries).
  for (int a0 = 0; a0 <= N; ++a0)
    for (int a1 = 0; a1 <= N; ++a1)
      for (int a2 = 0; a2 <= N; ++a2)
        for (int a3 = 0; a3 <= N; ++a3) {
          if ((a0 + a1 + a2 + a3) % 2 == 0) continue;
          const Site a{a0, a1, a2, a3};
          const int nz = (a0 != 0) + (a1 != 0) + (a2 != 0) + (a3 != 0);
          acc[max_abs(a)].add(double(1 << nz) * omega_term(a));
        }
  OmegaTable t;
  t.N = N;
  t.shell.assign(N + 1, 0.0);
  t.partial.assign(N + 1, 0.0);
  CompensatedSum run;
  for (int n = 1; n <= N; ++n) {
    t.shell[n] = acc[n].value();
    run.add(t.shell[n]);
    t.partial[n] = run.value();
  }
  if (N >= 8) {
    t.extrapolated = detail::omega_fit(t, {N / 4, N / 2, N});
    const double two = detail::omega_fit(t, {N / 2, N});
    t.uncertainty = std::max(std::abs(t.extrapolated - two), std::abs(t.extrapolated - t.partial[N]) * 0.1);
  } else {
    t.extrapolated = t.partial[N];
    t.uncertainty = std::abs(t.shell[N]) * N;
  }
  return t;
}

namespace detail {

/// Jets of the three scalar coefficients of T (hat = false) or T-hat at y:
/// f1 = -P1/r^6, f2 = -P2/r^6, f3 = -P3/r^6 with
/// P1 = y1^2+y2^2-y3^2-y4^2, P2 = 2(y1y3 +- y2y4), P3 = 2(y1y4 -+ y2y3).
inline void t_coefficients(const Point& y, bool hat, J2 out[3]) {
  const double r2 = norm2(y);
  if (!(r2 > 0.0)) throw DomainError("background: evaluation at a lattice point");
  const double q = 1.0 / (r2 * r2 * r2);
  J2 Q;
  Q.v = q;
  for (int i = 0; i < 4; ++i) {
    Q.g[i] = -6.0 * y[i] * q / r2;
    for (int j = i; j < 4; ++j) Q.h[sidx(i, j)] = q / r2 * ((i == j ? -6.0 : 0.0) + 48.0 * y[i] * y[j] / r2);
  }
  const double s = hat ? -1.0 : 1.0;
  J2 P;
  P.v = y[0] * y[0] + y[1] * y[1] - y[2] * y[2] - y[3] * y[3];
  P.g = {2 * y[0], 2 * y[1], -2 * y[2], -2 * y[3]};
  P.h[sidx(0, 0)] = 2;
  P.h[sidx(1, 1)] = 2;
  P.h[sidx(2, 2)] = -2;
  P.h[sidx(3, 3)] = -2;
  out[0] = -(P * Q);
  P = J2{};
  P.v = 2 * (y[0] * y[2] + s * y[1] * y[3]);
  P.g = {2 * y[2], 2 * s * y[3], 2 * y[0], 2 * s * y[1]};
  P.h[sidx(0, 2)] = 2;
  P.h[sidx(1, 3)] = 2 * s;
  out[1] = -(P * Q);
  P = J2{};
  P.v = 2 * (y[0] * y[3] - s * y[1] * y[2]);
  P.g = {2 * y[3], -2 * s * y[2], -2 * s * y[1], 2 * y[0]};
  P.h[sidx(0, 3)] = 2;
  P.h[sidx(1, 2)] = -2 * s;
  out[2] = -(P * Q);
}

/// Componentwise compensated accumulator for jets.
struct JetSum {
  std::array<CompensatedSum, 1 + kDim + kSym> c;
  void add(const J2& j) {
    c[0].add(j.v);
    for (int i = 0; i < kDim; ++i) c[1 + i].add(j.g[i]);
    for (int i = 0; i < kSym; ++i) c[1 + kDim + i].add(j.h[i]);
  }
  J2 value() const {
    J2 j;
    j.v = c[0].value();
    for (int i = 0; i < kDim; ++i) j.g[i] = c[1 + i].value();
    for (int i = 0; i < kSym; ++i) j.h[i] = c[1 + kDim + i].value();
    return j;
  }
};

/// Even-site coefficients (T) in e[0..2], odd-site coefficients (T-hat) in o[0..2].
inline Sym2Jet assemble_background(const J2 e[3], const J2 o[3]) {
  return assemble_T(e[0], e[1], e[2], false) + assemble_T(o[0], o[1], o[2], true);
}

inline void check_not_lattice_point(const Point& x) {
  for (double v : x)
    if (v != std::round(v)) return;
  throw DomainError("background: evaluation at a lattice point");
}

}  // namespace detail


enum class BackgroundKind { EvenT, OddThat, Combined };

/// Direct symmetric cube sum over max|a_i| <= N of tau_a^* T (even a) and/or
/// tau_a^* T-hat (odd a) at x. In paired mode each site is averaged with its
/// partner (a3,-a4,-a1,a2) resp. (a3,a4,-a1,-a2); the pair sum decays faster.
inline Sym2Jet background_sum(const Point& x, BackgroundKind which, int N, bool paired = false,
                              bool include_origin = true) {
  if (N < 1) throw DomainError("background_sum: N must be >= 1");
  detail::check_not_lattice_point(x);
  const bool use_even = which != BackgroundKind::OddThat, use_odd = which != BackgroundKind::EvenT;
  struct Slab {
    detail::JetSum e[3], o[3];
  };
  const int width = 2 * N + 1;
  auto slab = [&](std::size_t k) {
    Slab s;
    const int a0 = int(k) - N;
    J2 f[3], g[3];
    for (int a1 = -N; a1 <= N; ++a1)
      for (int a2 = -N; a2 <= N; ++a2)
        for (int a3 = -N; a3 <= N; ++a3) {
          const Site a{a0, a1, a2, a3};
          if (!include_origin && a0 == 0 && a1 == 0 && a2 == 0 && a3 == 0) continue;
          const bool even = parity_of(a) == Parity::Even;
          if (even ? !use_even : !use_odd) continue;
          const Point y{x[0] - a0, x[1] - a1, x[2] - a2, x[3] - a3};
          detail::t_coefficients(y, !even, f);
          if (paired) {
            const Site b = even ? Site{a2, -a3, -a0, a1} : Site{a2, a3, -a0, -a1};
            const Point z{x[0] - b[0], x[1] - b[1], x[2] - b[2], x[3] - b[3]};
            detail::t_coefficients(z, !even, g);
            for (int c = 0; c < 3; ++c) f[c] = 0.5 * (f[c] + g[c]);
          }
          for (int c = 0; c < 3; ++c) (even ? s.e[c] : s.o[c]).add(f[c]);
        }
    return s;
  };
  const auto slabs = parallel_map<Slab>(width, slab);
  detail::JetSum e[3], o[3];
  for (const auto& s : slabs)
    for (int c = 0; c < 3; ++c) {
      e[c].add(s.e[c].value());
      o[c].add(s.o[c].value());
    }
  J2 ev[3], ov[3];
  for (int c = 0; c < 3; ++c) {
    ev[c] = e[c].value();
    ov[c] = o[c].value();
  }
  return detail::assemble_background(ev, ov);
}

/// A monomial x^e carrying up to two coefficients (two polynomials that share
/// the same monomial support are evaluated together).
struct Monomial {
  std::array<int, kDim> e{};
  double c[2] = {0.0, 0.0};
  int degree() const { return e[0] + e[1] + e[2] + e[3]; }
};

/// Background tensor B_N(x) = sum over 0 < max|a_i| <= N of tau_a^* T (even a)
/// and tau_a^* T-hat (odd a). Sites with max|a_i| <= 1 are evaluated directly.
/// The remaining sites enter through the Taylor expansion at the origin of
/// H(x) = sum 1/|x - a|^2 over each parity class: since
/// T = -(1/8)(D11+D22-D33-D44)G P1 - (1/4)(D13+D24)G P2 - (1/4)(D14-D23)G P3
/// with G = 1/|y|^2, the far part of B is a fixed set of polynomials. Every
/// homogeneous piece is harmonic, so truncation keeps the far field exactly
/// trace- and divergence-free. The expansion converges for |x| < 2.
class BackgroundModel {
 public:
  static constexpr int kDefaultDegree = 18;
  static constexpr std::uint32_t kFormatVersion = 1;

  BackgroundModel(int N, int degree = kDefaultDegree) : N_(N), deg_(degree) {
    validate();
    compute_coefficients();
    build_polynomials();
  }
  /// Rebuild from stored Taylor coefficients of H (see coefficients()).
  BackgroundModel(int N, int degree, std::vector<double> h_even, std::vector<double> h_odd)
      : N_(N), deg_(degree), h_even_(std::move(h_even)), h_odd_(std::move(h_odd)) {
    validate();
    if (h_even_.size() != coefficient_count() || h_odd_.size() != coefficient_count())
      throw DomainError("BackgroundModel: coefficient table has the wrong size");
    build_polynomials();
  }

  int cutoff() const { return N_; }
  int degree() const { return deg_; }
  /// Taylor coefficients of the far-site H per parity, indexed by half
  /// exponents k (x^(2k)) on a dense (K+1)^4 grid, K = degree/2 + 1.
  const std::vector<double>& coefficients(Parity p) const { return p == Parity::Even ? h_even_ : h_odd_; }
  std::size_t coefficient_count() const {
    const std::size_t k = half_degree() + 1;
    return k * k * k * k;
  }
  const std::array<std::vector<Monomial>, 3>& polynomials() const { return poly_; }

  /// B_N(x) with jets (the a = 0 site excluded).
  Sym2Jet operator()(const Point& x) const {
    J2 e[3], o[3];
    near(x, e, o);
    J2 p[5];
    far(x, p);
    // p[0]: f1 of both parities; p[1], p[2]: f2 even/odd; p[3], p[4]: f3 even/odd
    Sym2Jet b = detail::assemble_background(e, o);
    b(0, 0) += p[0];
    b(1, 1) += p[0];
    b(2, 2) -= p[0];
    b(3, 3) -= p[0];
    b(0, 2) += p[1] + p[2];
    b(1, 3) += p[1] - p[2];
    b(0, 3) += p[3] + p[4];
    b(1, 2) += p[4] - p[3];
    return b;
  }

  /// Size of the highest retained degree of the far field at x, times the
  /// geometric factor of the omitted terms.
  double truncation_estimate(const Point& x) const {
    const double q = norm(x) / 2.0;
    double top = 0.0;
    for (const auto& poly : poly_)
      for (const auto& m : poly)
        if (m.degree() == deg_) {
          double v = std::abs(m.c[0]) + std::abs(m.c[1]);
          for (int i = 0; i < kDim; ++i) v *= std::pow(std::abs(x[i]), m.e[i]);
          top += v;
        }
    return top * q / (1.0 - q);
  }

 private:
  int N_, deg_;
  std::vector<double> h_even_, h_odd_;
  std::array<std::vector<Monomial>, 3> poly_;

  int half_degree() const { return deg_ / 2 + 1; }
  std::size_t hidx(int k0, int k1, int k2, int k3) const {
    const std::size_t K = half_degree() + 1;
    return ((std::size_t(k0) * K + k1) * K + k2) * K + k3;
  }

  void validate() const {
    if (N_ < 1) throw DomainError("BackgroundModel: N must be >= 1");
    if (deg_ < 2 || deg_ % 2 != 0 || deg_ > 40) throw DomainError("BackgroundModel: degree must be even in [2, 40]");
  }

  static void check_range(const Point& x) {
    if (!(norm(x) <= 1.0 + 1e-12)) throw DomainError("BackgroundModel: |x| must be <= 1 (fundamental cube)");
  }

  void near(const Point& x, J2 e[3], J2 o[3]) const {
    detail::check_not_lattice_point(x);
    const int m = std::min(N_, 1);
    J2 f[3];
    for (int c = 0; c < 3; ++c) e[c] = o[c] = J2{};
    for (int a0 = -m; a0 <= m; ++a0)
      for (int a1 = -m; a1 <= m; ++a1)
        for (int a2 = -m; a2 <= m; ++a2)
          for (int a3 = -m; a3 <= m; ++a3) {
            if (a0 == 0 && a1 == 0 && a2 == 0 && a3 == 0) continue;
            const bool even = (a0 + a1 + a2 + a3) % 2 == 0;
            detail::t_coefficients({x[0] - a0, x[1] - a1, x[2] - a2, x[3] - a3}, !even, f);
            for (int c = 0; c < 3; ++c) (even ? e[c] : o[c]) += f[c];
          }
  }

  void far(const Point& x, J2 p[5]) const {
    check_range(x);
    // powers with two leading zeros so that x^(e-1), x^(e-2) need no branches
    std::array<std::array<double, 44>, kDim> pw;
    for (int i = 0; i < kDim; ++i) {
      pw[i][0] = pw[i][1] = 0.0;
      pw[i][2] = 1.0;
      for (int k = 1; k <= deg_; ++k) pw[i][k + 2] = pw[i][k + 1] * x[i];
    }
    constexpr int slot[3][2] = {{0, -1}, {1, 2}, {3, 4}};
    for (int q = 0; q < 5; ++q) p[q] = J2{};
    for (int l = 0; l < 3; ++l) {
      J2 s0, s1;
      for (const auto& m : poly_[l]) {
        const int e0 = m.e[0] + 2, e1 = m.e[1] + 2, e2 = m.e[2] + 2, e3 = m.e[3] + 2;
        const double p0 = pw[0][e0], p1 = pw[1][e1], p2 = pw[2][e2], p3 = pw[3][e3];
        const double d0 = m.e[0] * pw[0][e0 - 1], d1 = m.e[1] * pw[1][e1 - 1], d2 = m.e[2] * pw[2][e2 - 1],
                     d3 = m.e[3] * pw[3][e3 - 1];
        const double p01 = p0 * p1, p23 = p2 * p3;
        J2 b;
        b.v = p01 * p23;
        b.g[0] = d0 * p1 * p23;
        b.g[1] = d1 * p0 * p23;
        b.g[2] = d2 * p3 * p01;
        b.g[3] = d3 * p2 * p01;
        b.h[sidx(0, 0)] = m.e[0] * (m.e[0] - 1) * pw[0][e0 - 2] * p1 * p23;
        b.h[sidx(1, 1)] = m.e[1] * (m.e[1] - 1) * pw[1][e1 - 2] * p0 * p23;
        b.h[sidx(2, 2)] = m.e[2] * (m.e[2] - 1) * pw[2][e2 - 2] * p3 * p01;
        b.h[sidx(3, 3)] = m.e[3] * (m.e[3] - 1) * pw[3][e3 - 2] * p2 * p01;
        b.h[sidx(0, 1)] = d0 * d1 * p23;
        b.h[sidx(2, 3)] = d2 * d3 * p01;
        b.h[sidx(0, 2)] = d0 * d2 * p1 * p3;
        b.h[sidx(0, 3)] = d0 * d3 * p1 * p2;
        b.h[sidx(1, 2)] = d1 * d2 * p0 * p3;
        b.h[sidx(1, 3)] = d1 * d3 * p0 * p2;
        s0.v += m.c[0] * b.v;
        s1.v += m.c[1] * b.v;
        for (int i = 0; i < kDim; ++i) {
          s0.g[i] += m.c[0] * b.g[i];
          s1.g[i] += m.c[1] * b.g[i];
        }
        for (int i = 0; i < kSym; ++i) {
          s0.h[i] += m.c[0] * b.h[i];
          s1.h[i] += m.c[1] * b.h[i];
        }
      }
      p[slot[l][0]] = s0;
      if (slot[l][1] >= 0) p[slot[l][1]] = s1;
    }
  }

  // Highest degree of H actually needed for a site at distance |a| so that the
  // first omitted even degree m obeys (m+1)^3 |a|^-(m+2) < 1e-22 for |x| <= 1.
  int site_degree(double anorm) const {
    const int D = deg_ + 2;
    for (int k = 2; k < D; k += 2) {
      const int m = k + 2;
      if (3.0 * std::log(m + 1.0) - (m + 2) * std::log(anorm) < std::log(1e-22)) return k;
    }
    return D;
  }

  void compute_coefficients() {
    const int D = deg_ + 2, K = half_degree();
    const std::size_t n = coefficient_count();
    h_even_.assign(n, 0.0);
    h_odd_.assign(n, 0.0);
    if (N_ < 2) return;
    struct Acc {
      std::vector<double> e, o;
    };
    // One task per leading coordinate a0 in [2, N]; representatives are sorted
    // a0 >= a1 >= a2 >= a3 >= 0 and weighted by the size of their sign orbit
    // divided by the permutation stabilizer.
    auto task = [&](std::size_t t) {
      const int a0 = int(t) + 2;
      Acc acc{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
      const int S = D + 1;
      std::vector<double> c(std::size_t(S) * S * S * S, 0.0);
      auto ci = [S](int g0, int g1, int g2, int g3) { return ((std::size_t(g0) * S + g1) * S + g2) * S + g3; };
      for (int a1 = 0; a1 <= a0; ++a1)
        for (int a2 = 0; a2 <= a1; ++a2)
          for (int a3 = 0; a3 <= a2; ++a3) {
            const int a[4] = {a0, a1, a2, a3};
            const double s2 = double(a0) * a0 + double(a1) * a1 + double(a2) * a2 + double(a3) * a3;
            const int nz = (a1 != 0) + (a2 != 0) + (a3 != 0) + 1;
            int mult = 1, run = 1;
            for (int i = 1; i < 4; ++i) {
              run = (a[i] == a[i - 1]) ? run + 1 : 1;
              mult *= run;
            }
            const double w = double(1 << nz) / mult;
            const int d = site_degree(std::sqrt(s2));
            // (|a|^2 + 2 a.x + |x|^2) G(x + a) = 1, coefficientwise.
            for (int g0 = 0; g0 <= d; ++g0)
              for (int g1 = 0; g0 + g1 <= d; ++g1)
                for (int g2 = 0; g0 + g1 + g2 <= d; ++g2)
                  for (int g3 = 0; g0 + g1 + g2 + g3 <= d; ++g3) {
                    double v = (g0 + g1 + g2 + g3 == 0) ? 1.0 : 0.0;
                    const int g[4] = {g0, g1, g2, g3};
                    for (int i = 0; i < 4; ++i) {
                      int h[4] = {g0, g1, g2, g3};
                      if (g[i] >= 1) {
                        h[i] = g[i] - 1;
                        v -= 2.0 * a[i] * c[ci(h[0], h[1], h[2], h[3])];
                      }
                      if (g[i] >= 2) {
                        h[i] = g[i] - 2;
                        v -= c[ci(h[0], h[1], h[2], h[3])];
                      }
                    }
                    c[ci(g0, g1, g2, g3)] = v / s2;
                  }
            auto& dst = ((a0 + a1 + a2 + a3) % 2 == 0) ? acc.e : acc.o;
            for (int k0 = 0; 2 * k0 <= d; ++k0)
              for (int k1 = 0; 2 * (k0 + k1) <= d; ++k1)
                for (int k2 = 0; 2 * (k0 + k1 + k2) <= d; ++k2)
                  for (int k3 = 0; 2 * (k0 + k1 + k2 + k3) <= d; ++k3)
                    dst[hidx(k0, k1, k2, k3)] += w * c[ci(2 * k0, 2 * k1, 2 * k2, 2 * k3)];
          }
      return acc;
    };
    const auto parts = parallel_map<Acc>(std::size_t(N_ - 1), task);
    std::vector<double> ae(n), ao(n);
    for (std::size_t i = 0; i < n; ++i) {
      CompensatedSum se, so;
      for (const auto& p : parts) {
        se.add(p.e[i]);
        so.add(p.o[i]);
      }
      ae[i] = se.value();
      ao[i] = so.value();
    }
    // Symmetrize over the 24 coordinate permutations.
    std::array<int, 4> perm{0, 1, 2, 3};
    std::vector<std::array<int, 4>> perms;
    do perms.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
    for (int k0 = 0; k0 <= K; ++k0)
      for (int k1 = 0; k0 + k1 <= K; ++k1)
        for (int k2 = 0; k0 + k1 + k2 <= K; ++k2)
          for (int k3 = 0; k0 + k1 + k2 + k3 <= K; ++k3) {
            const int k[4] = {k0, k1, k2, k3};
            CompensatedSum se, so;
            for (const auto& p : perms) {
              const std::size_t j = hidx(k[p[0]], k[p[1]], k[p[2]], k[p[3]]);
              se.add(ae[j]);
              so.add(ao[j]);
            }
            h_even_[hidx(k0, k1, k2, k3)] = se.value();
            h_odd_[hidx(k0, k1, k2, k3)] = so.value();
          }
  }

  void build_polynomials() {
    const int K = half_degree();
    using Key = std::array<int, kDim>;
    std::array<std::map<Key, double>, 5> acc;
    // second derivative D_i D_j of c x^g added with factor s into acc[q]
    auto add_d2 = [&](int q, const Key& g, double c, int i, int j, double s) {
      Key e = g;
      double f = c * s;
      if (i == j) {
        if (g[i] < 2) return;
        f *= g[i] * (g[i] - 1);
        e[i] -= 2;
      } else {
        if (g[i] < 1 || g[j] < 1) return;
        f *= g[i] * g[j];
        e[i] -= 1;
        e[j] -= 1;
      }
      acc[q][e] += f;
    };
    for (int k0 = 0; k0 <= K; ++k0)
      for (int k1 = 0; k0 + k1 <= K; ++k1)
        for (int k2 = 0; k0 + k1 + k2 <= K; ++k2)
          for (int k3 = 0; k0 + k1 + k2 + k3 <= K; ++k3) {
            const Key g{2 * k0, 2 * k1, 2 * k2, 2 * k3};
            const double he = h_even_[hidx(k0, k1, k2, k3)], ho = h_odd_[hidx(k0, k1, k2, k3)];
            // p0: f1 of both parities, -(1/8)(D11 + D22 - D33 - D44)
            for (int i = 0; i < 4; ++i) {
              const double s = (i < 2 ? -0.125 : 0.125);
              if (he != 0.0) add_d2(0, g, he, i, i, s);
              if (ho != 0.0) add_d2(0, g, ho, i, i, s);
            }
            if (he != 0.0) {
              add_d2(1, g, he, 0, 2, -0.25);  // f2 even: -(1/4)(D13 + D24)
              add_d2(1, g, he, 1, 3, -0.25);
              add_d2(3, g, he, 0, 3, -0.25);  // f3 even: -(1/4)(D14 - D23)
              add_d2(3, g, he, 1, 2, 0.25);
            }
            if (ho != 0.0) {
              add_d2(2, g, ho, 0, 2, -0.25);  // f2 odd: -(1/4)(D13 - D24)
              add_d2(2, g, ho, 1, 3, 0.25);
              add_d2(4, g, ho, 0, 3, -0.25);  // f3 odd: -(1/4)(D14 + D23)
              add_d2(4, g, ho, 1, 2, -0.25);
            }
          }
    // merge f2 even/odd and f3 even/odd, which share monomial supports
    const int src[3][2] = {{0, -1}, {1, 2}, {3, 4}};
    for (int l = 0; l < 3; ++l) {
      std::map<Key, std::array<double, 2>> merged;
      for (int k = 0; k < 2; ++k)
        if (src[l][k] >= 0)
          for (const auto& [e, c] : acc[src[l][k]]) merged[e][k] += c;
      poly_[l].clear();
      for (const auto& [e, c] : merged)
        if ((c[0] != 0.0 || c[1] != 0.0) && e[0] + e[1] + e[2] + e[3] <= deg_) {
          Monomial m;
          m.e = e;
          m.c[0] = c[0];
          m.c[1] = c[1];
          poly_[l].push_back(m);
        }
      std::stable_sort(poly_[l].begin(), poly_[l].end(),
                       [](const Monomial& a, const Monomial& b) { return a.degree() < b.degree(); });
    }
  }
};

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::filesystem::path background_cache_path(const std::filesystem::path& dir, int N, int degree) {
  return dir / ("background_N" + std::to_string(N) + "_d" + std::to_string(degree) + "_v" +
                std::to_string(BackgroundModel::kFormatVersion) + ".bin");
}

// Layout (little-endian): magic "EHGLUEBG", u32 version, u32 degree, u32 N,
// u32 parity mask (3 = both), u64 count, u64 checksum, then count even and
// count odd 8-byte reals.
struct CacheHeader {
  char magic[8];
  std::uint32_t version, degree, N, parity;
  std::uint64_t count, checksum;
};
static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

}  // namespace detail

/// Write a model's coefficient tables to `dir` (write to a temporary, then rename).
inline void save_background(const BackgroundModel& m, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& e = m.coefficients(Parity::Even);
  const auto& o = m.coefficients(Parity::Odd);
  detail::CacheHeader h{};
  std::memcpy(h.magic, "EHGLUEBG", 8);
  h.version = BackgroundModel::kFormatVersion;
  h.degree = m.degree();
  h.N = m.cutoff();
  h.parity = 3;
  h.count = e.size();
  h.checksum = detail::fnv1a(o.data(), o.size() * 8, detail::fnv1a(e.data(), e.size() * 8));
  const auto path = detail::background_cache_path(dir, m.cutoff(), m.degree());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write background cache " + tmp.string());
    f.write(reinterpret_cast<const char*>(&h), sizeof h);
    f.write(reinterpret_cast<const char*>(e.data()), std::streamsize(e.size() * 8));
    f.write(reinterpret_cast<const char*>(o.data()), std::streamsize(o.size() * 8));
    if (!f) throw std::runtime_error("cannot write background cache " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Load a cached model; returns null if absent, stale or corrupt.
inline std::shared_ptr<const BackgroundModel> load_background(const std::filesystem::path& dir, int N, int degree) {
  std::ifstream f(detail::background_cache_path(dir, N, degree), std::ios::binary);
  if (!f) return nullptr;
  detail::CacheHeader h{};
  if (!f.read(reinterpret_cast<char*>(&h), sizeof h)) return nullptr;
  if (std::memcmp(h.magic, "EHGLUEBG", 8) != 0 || h.version != BackgroundModel::kFormatVersion ||
      h.degree != std::uint32_t(degree) || h.N != std::uint32_t(N) || h.parity != 3 || h.count > (1u << 24))
    return nullptr;
  std::vector<double> e(h.count), o(h.count);
  if (!f.read(reinterpret_cast<char*>(e.data()), std::streamsize(h.count * 8))) return nullptr;
  if (!f.read(reinterpret_cast<char*>(o.data()), std::streamsize(h.count * 8))) return nullptr;
  if (detail::fnv1a(o.data(), o.size() * 8, detail::fnv1a(e.data(), e.size() * 8)) != h.checksum) return nullptr;
  try {
    return std::make_shared<const BackgroundModel>(N, degree, std::move(e), std::move(o));
  } catch (const DomainError&) {
    return nullptr;
  }
}

/// Directory named by EH_GLUE_CACHE_DIR, or empty (no disk cache).
inline std::filesystem::path background_cache_dir() {
  const char* d = std::getenv("EH_GLUE_CACHE_DIR");
  return d ? std::filesystem::path(d) : std::filesystem::path();
}

/// Process-wide shared model for (N, degree): memory, then disk, then computed.
inline std::shared_ptr<const BackgroundModel> background_model(int N, int degree = BackgroundModel::kDefaultDegree) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const BackgroundModel>> memo;
  std::lock_guard<std::mutex> lk(mu);
  auto& slot = memo[{N, degree}];
  if (slot) return slot;
  const auto dir = background_cache_dir();
  if (!dir.empty()) slot = load_background(dir, N, degree);
  if (!slot) {
    auto m = std::make_shared<const BackgroundModel>(N, degree);
    if (!dir.empty()) {
      try {
        save_background(*m, dir);
      } catch (const std::exception&) {
        // an unwritable cache only costs recomputation
      }
    }
    slot = m;
  }
  return slot;
}

}  // namespace ehglue
