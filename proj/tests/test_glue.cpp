#include <gtest/gtest.h>

#include <random>

#include "ehglue/glue.hpp"

using namespace ehglue;

namespace {

double max_diff(const Sym2Jet& a, const Sym2Jet& b) {
  double d = 0.0;
  for (int k = 0; k < kSym; ++k) {
    d = std::max(d, std::abs(a.c[k].v - b.c[k].v));
    for (int i = 0; i < kDim; ++i) d = std::max(d, std::abs(a.c[k].g[i] - b.c[k].g[i]));
    for (int i = 0; i < kSym; ++i) d = std::max(d, std::abs(a.c[k].h[i] - b.c[k].h[i]));
  }
  return d;
}

Point on_sphere(std::mt19937_64& rng, double r) {
  std::normal_distribution<double> n;
  Point x{n(rng), n(rng), n(rng), n(rng)};
  return (r / norm(x)) * x;
}

GlueParams cheap(double eps, double delta) { return GlueParams(eps, delta, 8); }

}  // namespace

TEST(Chi, SaturatesWithZeroJets) {
  const Jet2<1> a = chi_cutoff(0.5), b = chi_cutoff(0.9);
  EXPECT_EQ(a.v, 0.0);
  EXPECT_EQ(a.g[0], 0.0);
  EXPECT_EQ(a.h[0], 0.0);
  EXPECT_EQ(b.v, 1.0);
  EXPECT_EQ(b.g[0], 0.0);
  EXPECT_EQ(b.h[0], 0.0);
  EXPECT_EQ(chi_cutoff(2.0 / 3.0).v, 0.0);
  EXPECT_EQ(chi_cutoff(5.0 / 6.0).v, 1.0);
}

TEST(Chi, StrictlyIncreasingOnTransition) {
  const double lo = 2.0 / 3.0, hi = 5.0 / 6.0;
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double s = lo + (hi - lo) * i / 101.0;
    const Jet2<1> c = chi_cutoff(s);
    // near the top 1 - chi drops below the double spacing at 1
    if (c.v < 1.0 - 1e-15) {
      EXPECT_GT(c.v, prev);
    }
    EXPECT_GE(c.v, prev);
    EXPECT_GT(c.v, 0.0);
    EXPECT_GT(c.g[0], 0.0);
    prev = c.v;
  }
  EXPECT_NEAR(chi_cutoff(0.75).v, 0.5, 1e-15);
}

TEST(Chi, JetsMatchFiniteDifferences) {
  const double h = 1e-5;
  for (double s : {0.68, 0.7, 0.75, 0.8, 0.83}) {
    const Jet2<1> c = chi_cutoff(s);
    EXPECT_NEAR(c.g[0], (chi_cutoff(s + h).v - chi_cutoff(s - h).v) / (2 * h), 1e-6 * (1 + std::abs(c.g[0])));
    EXPECT_NEAR(c.h[0], (chi_cutoff(s + h).g[0] - chi_cutoff(s - h).g[0]) / (2 * h), 1e-5 * (1 + std::abs(c.h[0])));
  }
}

TEST(GlueParams, Validation) {
  EXPECT_THROW(GlueParams(0.0, 0.3), DomainError);
  EXPECT_THROW(GlueParams(0.1, 1.0), DomainError);
  EXPECT_THROW(GlueParams(0.2, 0.3), DomainError);
  EXPECT_THROW(GlueParams(0.01, 0.1, 0), DomainError);
  EXPECT_NO_THROW(GlueParams(0.1, 0.3));
  EXPECT_FALSE(GlueParams(0.1, 0.3).scale_separated());
  EXPECT_THROW(GlueParams(0.1, 0.3).require_scale_separation(), DomainError);
  EXPECT_TRUE(GlueParams(1e-3, 0.1).scale_separated());
}

TEST(GlueParams, RegionDispatchAtStatedRadii) {
  const GlueParams p(0.01, 0.2);
  EXPECT_EQ(region_of(p, {0.1, 0, 0, 0}), Region::Inner);
  EXPECT_EQ(region_of(p, {std::nextafter(0.1, 1.0), 0, 0, 0}), Region::Annulus);
  EXPECT_EQ(region_of(p, {0.2, 0, 0, 0}), Region::Annulus);
  EXPECT_EQ(region_of(p, {std::nextafter(0.2, 1.0), 0, 0, 0}), Region::Outer);
}

TEST(GluedMetric, InnerRegionIsEguchiHansonExactly) {
  const GluedMetric m(cheap(0.05, 0.3));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const Point x = on_sphere(rng, 0.3 / 4);
    EXPECT_EQ(max_diff(m(x), eh_metric_at(EHParams(0.05), x)), 0.0);
  }
}

TEST(GluedMetric, OuterRegionMatchesBruteForceBackground) {
  const double eps = 0.05, delta = 0.2;
  const GluedMetric m(cheap(eps, delta));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    const Point x = on_sphere(rng, 2 * delta);
    Sym2Jet ref = 0.5 * std::pow(eps, 4) * background_sum(x, BackgroundKind::Combined, 8);
    for (int k = 0; k < kDim; ++k) ref(k, k) += 1.0;
    EXPECT_LE(max_diff(m(x), ref), std::pow(eps, 4) * std::max(m.background().truncation_estimate(x), 1e-11));
  }
}

TEST(GluedMetric, AnnulusFormulaReproducesBranchesWhereChiSaturates) {
  const double delta = 0.3;
  const GluedMetric m(cheap(0.05, delta));
  std::mt19937_64 rng(3);
  for (double s : {0.55, 0.6, 0.66}) {
    const Point x = on_sphere(rng, s * delta);
    EXPECT_EQ(max_diff(m.annulus_formula(x), m.inner_branch(x)), 0.0);
  }
  for (double s : {0.84, 0.9, 1.2}) {
    const Point x = on_sphere(rng, s * delta);
    EXPECT_EQ(max_diff(m.annulus_formula(x), m.outer_branch(x)), 0.0);
  }
}

TEST(GluedMetric, JetsContinuousAcrossTransitionEdges) {
  const double delta = 0.3;
  const GluedMetric m(cheap(0.05, delta));
  const Point u{0.5, 0.5, 0.5, 0.5};
  for (double s : {2.0 / 3.0, 5.0 / 6.0}) {
    const Sym2Jet a = m((s * delta - 1e-9) * u), b = m((s * delta + 1e-9) * u);
    EXPECT_LE(max_diff(a, b), 1e-6) << s;
  }
}

TEST(GluedMetric, BranchMismatchScalesLikeEpsilonToTheFourth) {
  const double delta = 0.3;
  std::mt19937_64 rng(4);
  const Point x = on_sphere(rng, 0.7 * delta);
  std::vector<double> e, d;
  for (double eps : {0.0025, 0.005, 0.01}) {
    const GluedMetric m(cheap(eps, delta));
    e.push_back(eps);
    d.push_back(max_abs(m.inner_branch(x).value() - m.outer_branch(x).value()));
  }
  EXPECT_NEAR(fit_power(e, d).exponent, 4.0, 0.1);
}

TEST(GluedMetric, PositiveDefinite) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto [eps, delta] : {std::pair{0.01, 0.1}, {0.05, 0.3}, {0.1, 0.3}, {0.2, 0.5}}) {
    const GluedMetric m(cheap(eps, delta));
    for (int i = 0; i < 200; ++i) {
      const Point x{u(rng), u(rng), u(rng), u(rng)};
      Mat4 l;
      EXPECT_TRUE(cholesky(m(x).value(), l));
    }
  }
}

TEST(GluedMetric, InvariantUnderLinearGenerators) {
  const GluedMetric m(cheap(0.1, 0.3));
  const Sym2Field f = [&m](const Point& x) { return m(x); };
  const auto gens = symmetry_generators();
  std::mt19937_64 rng(6);
  std::vector<Point> sample;
  for (double r : {0.05, 0.15, 0.22, 0.28, 0.35, 0.45}) sample.push_back(on_sphere(rng, r));
  for (int g = 0; g < 4; ++g) EXPECT_LE(symmetry_check(f, gens[g], sample), 1e-10) << g;
}

TEST(GluedMetric, RejectsLatticePointsAndFarPoints) {
  const GluedMetric m(cheap(0.05, 0.3));
  EXPECT_THROW(m({0, 0, 0, 0}), DomainError);
  EXPECT_THROW(m({1, 0, 0, 0}), DomainError);
  EXPECT_THROW(m({0.9, 0.9, 0, 0}), DomainError);
  EXPECT_THROW(m.obstruction({0, 0, 0, 0}), DomainError);
}

TEST(GluedObstruction, HalfEpsilonDerivativeMatchesFiniteDifference) {
  const double eps = 0.08, delta = 0.3, h = 1e-4;
  const GluedMetric m(cheap(eps, delta));
  const GluedMetric p1(cheap(eps + h, delta)), m1(cheap(eps - h, delta));
  const GluedMetric p2(cheap(eps + 2 * h, delta)), m2(cheap(eps - 2 * h, delta));
  std::mt19937_64 rng(7);
  for (double s : {0.3, 0.7, 0.75, 0.8, 1.3}) {
    const Point x = on_sphere(rng, s * delta);
    const Sym2 d1 = p1(x).value() - m1(x).value(), d2 = p2(x).value() - m2(x).value();
    const Sym2 fd = (0.5 * eps / (12 * h)) * (8.0 * d1 - d2);
    EXPECT_LE(max_abs(fd - m.half_eps_derivative(x).value()), 1e-9) << s;
  }
}

TEST(GluedObstruction, EqualsKernelTensorOnInnerRegion) {
  const double eps = 0.05, delta = 0.3;
  const GluedMetric m(cheap(eps, delta));
  std::mt19937_64 rng(8);
  for (double s : {0.1, 0.3, 0.5, 0.6, 0.66}) {
    const Point x = on_sphere(rng, s * delta);
    EXPECT_LE(max_diff(m.obstruction(x), o_tensor_at(1, EHParams(eps), x)), 1e-12) << s;
  }
}

TEST(GluedObstruction, TraceFreeEverywhere) {
  const GluedMetric m(cheap(0.1, 0.3));
  std::mt19937_64 rng(9);
  for (double r : {0.05, 0.12, 0.22, 0.25, 0.29, 0.4}) {
    const Point x = on_sphere(rng, r);
    const Sym2 g = m(x).value(), o = m.obstruction(x).value();
    EXPECT_LE(std::abs(trace(inverse(g), o)), 1e-15 * (1 + max_abs(o))) << r;
  }
}

TEST(GluedObstruction, OuterDeviationFromRawSumIsOrderEpsilonToTheEighth) {
  const double delta = 0.25;
  std::mt19937_64 rng(10);
  const Point x = on_sphere(rng, 0.4);
  std::vector<double> e, d;
  for (double eps : {0.05, 0.1}) {
    const GluedMetric m(cheap(eps, delta));
    const Sym2 raw = std::pow(eps, 4) * (tensor_T_at(x) + m.background_at(x)).value();
    e.push_back(eps);
    d.push_back(max_abs(m.obstruction(x).value() - raw));
  }
  EXPECT_NEAR(fit_power(e, d).exponent, 8.0, 0.3);
}

TEST(DecayScan, InnerRegionIsRicciFlat) {
  const GluedMetric m(cheap(0.05, 0.3));
  EXPECT_LE(decay_scan(DecayField::Ricci, m, Region::Inner).max_value, 1e-8);
  EXPECT_LE(decay_scan(DecayField::LichnerowiczO1, m, Region::Inner).max_value, 1e-7);
}

TEST(DecayScan, OuterRicciOfSingleInstantonExpansionDecaysLikeTenthPower) {
  const double eps = 0.05, e4 = std::pow(eps, 4);
  std::vector<double> radii{0.3, 0.35, 0.4, 0.45}, sup;
  for (double r : radii)
    sup.push_back(sphere_sup(
        [&](const Point& x) {
          Sym2Jet g = 0.5 * e4 * tensor_T_at(x);
          for (int k = 0; k < kDim; ++k) g(k, k) += 1.0;
          const Geometry G = geometry_at(g);
          return norm_with_inverse(G.gi, curvature_from(G).ricci);
        },
        r, 8));
  EXPECT_NEAR(fit_power(radii, sup).exponent, -10.0, 0.1);
}

TEST(DecayScan, OuterRicciScalesLikeEpsilonToTheEighth) {
  std::vector<double> e, v;
  for (double eps : {0.025, 0.05}) {
    const GluedMetric m(cheap(eps, 0.25));
    e.push_back(eps);
    v.push_back(decay_scan(DecayField::Ricci, m, Region::Outer, {0.3, 0.4}).sup[1]);
  }
  EXPECT_NEAR(fit_power(e, v).exponent, 8.0, 0.1);
}

TEST(DecayScan, OuterRicciBoundedByTenthPowerEnvelope) {
  // the neighbouring translates flatten the slope but the envelope C eps^8 |x|^-10 holds
  const double eps = 0.05;
  const GluedMetric m(cheap(eps, 0.25));
  const DecayScan s = decay_scan(DecayField::Ricci, m, Region::Outer, {0.3, 0.35, 0.4, 0.45});
  EXPECT_LT(s.exponent, -9.0);
  for (std::size_t i = 0; i < s.radii.size(); ++i)
    EXPECT_LE(s.sup[i], 100.0 * std::pow(eps, 8) * std::pow(s.radii[i], -10.0));
}

TEST(DecayScan, AnnulusRicciWithinFactorTenOfScale) {
  double lo = 1e300, hi = 0.0;
  for (double eps : {0.02, 0.04})
    for (double delta : {0.2, 0.3}) {
      const GluedMetric m(cheap(eps, delta));
      const double ratio = decay_scan(DecayField::Ricci, m, Region::Annulus).prefactor;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  EXPECT_LE(hi / lo, 10.0);
}

TEST(DecayScan, RejectsTooFewRadii) {
  const GluedMetric m(cheap(0.05, 0.25));
  EXPECT_THROW(decay_scan(DecayField::Ricci, m, Region::Outer, {0.3}), DomainError);
  EXPECT_THROW(decay_scan(DecayField::Ricci, m, Region::Outer), DomainError);
}

TEST(DecayScan, ThreadCountIndependent) {
  const GluedMetric m(cheap(0.05, 0.25));
  const int saved = worker_threads();
  set_worker_threads(1);
  const DecayScan a = decay_scan(DecayField::LichnerowiczO1, m, Region::Outer, {0.3, 0.4}, 4);
  set_worker_threads(4);
  const DecayScan b = decay_scan(DecayField::LichnerowiczO1, m, Region::Outer, {0.3, 0.4}, 4);
  set_worker_threads(saved);
  EXPECT_EQ(a.sup, b.sup);
}
