#include <gtest/gtest.h>

#include <random>

#include "ehglue/curvature.hpp"
#include "ehglue/eh_metrics.hpp"
#include "ehglue/fit.hpp"

using namespace ehglue;

namespace {

std::vector<Point> random_points(int n, double rmin, double rmax, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(rmin, rmax);
  std::vector<Point> pts;
  while (static_cast<int>(pts.size()) < n) {
    Point x{g(rng), g(rng), g(rng), g(rng)};
    pts.push_back((u(rng) / norm(x)) * x);
  }
  return pts;
}

// A non-Einstein test metric: I + 0.2 (x1^2 dx2^2 + x2 x3 (dx1 dx4 + dx4 dx1) + sin x4 dx3^2).
Sym2Jet bumpy_metric(const Point& x) {
  const auto X = coordinate_jets(x);
  Sym2Jet g = Sym2Jet::identity();
  g(1, 1) += 0.2 * X[0] * X[0];
  g(0, 3) += 0.2 * X[1] * X[2];
  g(2, 2) += 0.2 * compose(X[3], std::sin(x[3]), std::cos(x[3]), -std::sin(x[3]));
  return g;
}

double norm_g(const Sym2& gi, const Sym2& h) { return norm_with_inverse(gi, h); }

}  // namespace

TEST(Curvature, FlatMetricHasNoCurvature) {
  const CurvatureAt c = curvature_at(Sym2Jet::identity());
  EXPECT_EQ(max_abs(c.ricci), 0.0);
  EXPECT_EQ(c.scalar, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) EXPECT_EQ(c(i, j, k, l), 0.0);
}

TEST(Curvature, EguchiHansonIsRicciFlat) {
  const EHParams p(1.0);
  for (const auto& x : random_points(50, 0.3, 5, 1)) {
    const Sym2Jet g = eh_metric_at(p, x);
    const CurvatureAt c = curvature_at(g);
    EXPECT_LE(norm_g(inverse(g.value()), c.ricci), 1e-9);
  }
}

TEST(Curvature, RiemannSymmetriesAndFirstBianchi) {
  for (const auto& x : random_points(20, 0.3, 3, 2)) {
    for (int which = 0; which < 2; ++which) {
      const Sym2Jet g = which == 0 ? eh_metric_at(EHParams(1.0), x) : bumpy_metric(x);
      const CurvatureAt c = curvature_at(g);
      double scale = 0.0;
      for (auto& a : c.R)
        for (auto& b : a)
          for (auto& d : b)
            for (double v : d) scale = std::max(scale, std::abs(v));
      const double tol = 1e-10 * std::max(1.0, scale);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          for (int k = 0; k < 4; ++k)
            for (int l = 0; l < 4; ++l) {
              EXPECT_NEAR(c(i, j, k, l), -c(j, i, k, l), tol);
              EXPECT_NEAR(c(i, j, k, l), -c(i, j, l, k), tol);
              EXPECT_NEAR(c(i, j, k, l), c(k, l, i, j), tol);
              EXPECT_NEAR(c(i, j, k, l) + c(i, k, l, j) + c(i, l, j, k), 0.0, tol);
            }
    }
  }
}

TEST(Curvature, RoundSphereConvention) {
  // Stereographic metric of the unit sphere 4 / (1 + |x|^2)^2 delta: Ric = 3 g.
  const Point x{0.2, -0.1, 0.3, 0.05};
  const J2 r2 = jet_radius_squared(x);
  const J2 f = 4.0 * inv(sqr(1.0 + r2));
  Sym2Jet g;
  for (int i = 0; i < 4; ++i) g(i, i) = f;
  const CurvatureAt c = curvature_at(g);
  const Sym2 gv = g.value();
  for (int k = 0; k < kSym; ++k) EXPECT_NEAR(c.ricci.c[k], 3 * gv.c[k], 1e-12);
  EXPECT_NEAR(c.scalar, 12.0, 1e-12);
  // sectional curvature R(e0, e1, e1, e0) / (g00 g11) = +1
  EXPECT_NEAR(c(0, 1, 1, 0) / (gv(0, 0) * gv(1, 1)), 1.0, 1e-12);
}

TEST(Curvature, RiemannNormOfEguchiHanson) {
  // |Rm|^2 (eps^4 + r^4)^3 / eps^8 is the same constant everywhere.
  std::vector<double> c;
  for (double e : {0.5, 1.0}) {
    for (const auto& x : random_points(20, 0.2 * e, 3 * e, 3)) {
      const Sym2Jet g = eh_metric_at(EHParams(e), x);
      const Geometry G = geometry_at(g);
      const double n2 = riemann_norm2(curvature_from(G), G.gi);
      const double r4 = norm2(x) * norm2(x), e4 = std::pow(e, 4);
      c.push_back(n2 * std::pow(e4 + r4, 3) / (e4 * e4));
    }
  }
  for (double v : c) EXPECT_NEAR(v / c[0], 1.0, 1e-10);
  EXPECT_NEAR(c[0], 384.0, 1e-9);
}

TEST(Curvature, RiemannNormScaling) {
  for (const auto& x : random_points(10, 0.3, 2, 4)) {
    const double e = 0.37;
    const Sym2Jet ge = eh_metric_at(EHParams(e), x), g1 = eh_metric_at(EHParams(1.0), (1 / e) * x);
    const Geometry Ge = geometry_at(ge), G1 = geometry_at(g1);
    const double a = riemann_norm2(curvature_from(Ge), Ge.gi), b = riemann_norm2(curvature_from(G1), G1.gi);
    EXPECT_NEAR(a / (b / std::pow(e, 4)), 1.0, 1e-11);
  }
}

TEST(Curvature, BoltExtrapolationOfRiemannNorm) {
  std::vector<double> s, v;
  const Point dir{0.3, 0.1, -0.5, 0.8};
  // cancellation grows like r^-8 towards the bolt, so stay at r >= 0.2
  for (double r : {0.4, 0.35, 0.3, 0.25, 0.2}) {
    const Sym2Jet g = eh_metric_at(EHParams(1.0), (r / norm(dir)) * dir);
    const Geometry G = geometry_at(g);
    s.push_back(std::pow(r, 4));
    v.push_back(riemann_norm2(curvature_from(G), G.gi));
  }
  EXPECT_NEAR(extrapolate_to_zero(s, v), 384.0, 1e-3);
}

TEST(Lichnerowicz, KernelTensorsOfEguchiHanson) {
  const EHParams p(1.0);
  for (const auto& x : random_points(40, 0.3, 5, 5)) {
    const Sym2Jet g = eh_metric_at(p, x);
    const Geometry G = geometry_at(g);
    const CurvatureAt c = curvature_from(G);
    for (int i = 1; i <= 3; ++i) {
      const Sym2 dl = lichnerowicz(G, c, o_tensor_at(i, p, x));
      EXPECT_LE(norm_g(G.gi, dl), 1e-8) << i;
    }
    EXPECT_LE(norm_g(G.gi, lichnerowicz(G, c, g)), 1e-9);
  }
}

TEST(Lichnerowicz, FlatSpaceCoordinateLaplacian) {
  const Point x{0.3, 0.4, -0.2, 0.9};
  const auto X = coordinate_jets(x);
  Sym2Jet h;
  h(1, 1) = X[0] * X[0];
  const Sym2 dl = lichnerowicz(Sym2Jet::identity(), h);
  EXPECT_DOUBLE_EQ(dl(1, 1), 2.0);
  EXPECT_EQ(max_abs(dl - Sym2::diag(0, 2, 0, 0)), 0.0);
}

TEST(DivTrace, KernelTensorsAreDivergenceFree) {
  const EHParams p(1.0);
  for (const auto& x : random_points(40, 0.3, 5, 6)) {
    const Geometry G = geometry_at(eh_metric_at(p, x));
    for (int i = 1; i <= 3; ++i) {
      const DivTrace d = div_trace(G, o_tensor_at(i, p, x));
      for (int j = 0; j < 4; ++j) EXPECT_LE(std::abs(d.div[j].v), 1e-9);
      EXPECT_LE(std::abs(d.trace.v), 1e-14);
    }
    const DivTrace dg = div_trace(G, G.g);
    for (int j = 0; j < 4; ++j) EXPECT_LE(std::abs(dg.div[j].v), 1e-12);
    EXPECT_NEAR(dg.trace.v, 4.0, 1e-14);
  }
}

TEST(DivTrace, TOnFlatSpace) {
  for (const auto& x : random_points(20, 0.3, 3, 7)) {
    const DivTrace d = div_trace(Sym2Jet::identity(), tensor_T_at(x));
    for (int j = 0; j < 4; ++j) EXPECT_LE(std::abs(d.div[j].v), 1e-12);
    EXPECT_EQ(d.trace.v, 0.0);
  }
}

TEST(LieDerivative, EulerFieldOnFlatMetric) {
  const Point x{0.3, -0.6, 0.2, 0.1};
  const Sym2 l = lie_derivative(Sym2Jet::identity(), euler_field(x));
  EXPECT_EQ(max_abs(l - 2.0 * Sym2::identity()), 0.0);
}

TEST(QRemainder, ZeroPerturbation) {
  const Point x{0.5, 0.2, -0.7, 0.3};
  const Sym2 q = q_remainder(eh_metric_at(EHParams(1.0), x), Sym2Jet{});
  EXPECT_EQ(max_abs(q), 0.0);
}

TEST(QRemainder, QuadraticSmallness) {
  const EHParams p(1.0);
  const Point x{0.6, -0.4, 0.5, 0.3};
  const Sym2Jet g = eh_metric_at(p, x), o = o_tensor_at(1, p, x);
  std::vector<double> ratios;
  for (double s : {1e-2, 1e-3, 1e-4}) ratios.push_back(max_abs(q_remainder(g, s * o)) / (s * s));
  EXPECT_NEAR(ratios[1] / ratios[0], 1.0, 0.05);
  EXPECT_NEAR(ratios[2] / ratios[1], 1.0, 0.05);
  EXPECT_GT(ratios[0], 0.0);
}

TEST(QRemainder, RejectsNonPositivePerturbation) {
  EXPECT_THROW(q_remainder(Sym2Jet::identity(), -2.0 * Sym2Jet::identity()), SingularMetricError);
}

TEST(Linearization, RicciFiniteDifferenceOracle) {
  // -2 Ric_{g+sk} + 2 Ric_g - s (Delta_L k - L_Y g) = O(s^2)
  for (const auto& x : random_points(5, 0.5, 2, 8)) {
    for (int which = 0; which < 2; ++which) {
      const Sym2Jet g = which == 0 ? eh_metric_at(EHParams(1.0), x) : bumpy_metric(x);
      const Sym2Jet k = which == 0 ? tensor_T_at(x) : o_tensor_at(2, EHParams(0.8), x);
      const Geometry G = geometry_at(g);
      const CurvatureAt c = curvature_from(G);
      const Sym2 lin = lichnerowicz(G, c, k) - lie_derivative(g, div_trace(G, k).Y);
      auto defect = [&](double s) {
        const CurvatureAt cs = curvature_at(g + s * k);
        return max_abs(-2.0 * cs.ricci + 2.0 * c.ricci - s * lin);
      };
      const double d1 = defect(1e-3), d2 = defect(5e-4);
      EXPECT_NEAR(d1 / d2, 4.0, 0.4);
    }
  }
}

TEST(Bianchi, ContractedSecondIdentity) {
  // div Ric - dR/2 = 0, with derivatives of the jet Ricci tensor by a
  // fourth-order central stencil.
  const double h = 2e-3;
  for (const auto& x : random_points(5, 0.5, 1.5, 9)) {
    for (int which = 0; which < 2; ++which) {
      auto metric = [&](const Point& y) { return which == 0 ? eh_metric_at(EHParams(1.0), y) : bumpy_metric(y); };
      auto ric = [&](const Point& y) { return curvature_at(metric(y)); };
      std::array<Sym2, 4> dric;
      std::array<double, 4> dR;
      for (int a = 0; a < 4; ++a) {
        auto at = [&](double t) {
          Point y = x;
          y[a] += t;
          return ric(y);
        };
        const CurvatureAt p1 = at(h), m1 = at(-h), p2 = at(2 * h), m2 = at(-2 * h);
        dric[a] = (8.0 / (12 * h)) * (p1.ricci - m1.ricci) - (1.0 / (12 * h)) * (p2.ricci - m2.ricci);
        dR[a] = (8 * (p1.scalar - m1.scalar) - (p2.scalar - m2.scalar)) / (12 * h);
      }
      const Geometry G = geometry_at(metric(x));
      const CurvatureAt c = curvature_from(G);
      for (int j = 0; j < 4; ++j) {
        // g^ik (d_i Ric_kj - Gam^m_ik Ric_mj - Gam^m_ij Ric_km)
        double s = 0.0;
        for (int i = 0; i < 4; ++i)
          for (int k = 0; k < 4; ++k) {
            double t = dric[i](k, j);
            for (int m = 0; m < 4; ++m)
              t -= G.christoffel(m, i, k) * c.ricci(m, j) + G.christoffel(m, i, j) * c.ricci(k, m);
            s += G.gi(i, k) * t;
          }
        EXPECT_LE(std::abs(s - 0.5 * dR[j]), 1e-9);
      }
    }
  }
}
