#include <gtest/gtest.h>

#include "ehglue/obstruction.hpp"

using namespace ehglue;

namespace {

J2 x1x2(const Point& x) {
  const auto X = coordinate_jets(x);
  return X[0] * X[1];
}

Sym2Jet remainder_perturbation(const EHParams& eh, const Point& x) {
  Sym2Jet h = (0.5 * std::pow(eh.epsilon, 4)) * tensor_T_at(x) - eh_metric_at(eh, x);
  for (int i = 0; i < kDim; ++i) h(i, i) += 1.0;
  return h;
}

double scale12(const GlueParams& p) { return std::pow(p.epsilon, 12) * std::pow(p.delta, -10); }

}  // namespace

TEST(Distributional, OffDiagonalMonomial) {
  const DistributionalResult r = distributional_check(x1x2, 0, 1, LaplaceForm::OffDiag, 0.5);
  EXPECT_NEAR(r.reconstructed, 1.0, 1e-6);
  EXPECT_NEAR(r.surface, 0.5 * kPi * kPi, 1e-8);
  EXPECT_NEAR(r.volume, 0.0, 1e-12);
  EXPECT_LT(r.error, 1e-8);
}

TEST(Distributional, DiagonalDifference) {
  const DistributionalResult r = distributional_check(
      [](const Point& x) {
        const auto X = coordinate_jets(x);
        return X[0] * X[0] - X[1] * X[1];
      },
      0, 1, LaplaceForm::DiagDiff, 0.5);
  EXPECT_NEAR(r.reconstructed, 4.0, 1e-6);
  EXPECT_NEAR(r.surface, 2.0 * kPi * kPi, 1e-8);
}

TEST(Distributional, ConstantVanishes) {
  const DistributionalResult r =
      distributional_check([](const Point&) { return J2::constant(1.0); }, 2, 3, LaplaceForm::OffDiag, 0.3);
  EXPECT_NEAR(r.surface, 0.0, 1e-13);
  EXPECT_NEAR(r.volume, 0.0, 1e-13);
}

TEST(Distributional, NonHarmonicFieldUsesVolumeTerm) {
  auto u = [](const Point& x) {
    const auto X = coordinate_jets(x);
    return X[0] * X[1] * (1.0 + jet_radius_squared(x)) + X[2] * X[2] * X[2] * X[2] + 3.0 * X[0] * X[3];
  };
  const DistributionalResult r = distributional_check(u, 0, 1, LaplaceForm::OffDiag, 0.4, 20, 20);
  EXPECT_GT(std::abs(r.volume), 1e-3);
  EXPECT_NEAR(r.reconstructed, 1.0, 1e-6);
  const DistributionalResult s = distributional_check(u, 0, 3, LaplaceForm::OffDiag, 0.4, 20, 20);
  EXPECT_NEAR(s.reconstructed, 3.0, 1e-6);
}

TEST(Distributional, IndependentOfRadius) {
  for (LaplaceForm f : {LaplaceForm::OffDiag, LaplaceForm::DiagDiff}) {
    auto u = [](const Point& x) {
      const auto X = coordinate_jets(x);
      return exp(X[0] - 0.5 * X[1]) + X[0] * X[1] * X[2];
    };
    const DistributionalResult a = distributional_check(u, 0, 1, f, 0.5, 20, 20);
    const DistributionalResult b = distributional_check(u, 0, 1, f, 0.25, 20, 20);
    EXPECT_NEAR(a.reconstructed, b.reconstructed, 1e-6 + a.error + b.error);
  }
}

TEST(Distributional, RejectsBadInput) {
  EXPECT_THROW(distributional_check(x1x2, 1, 1, LaplaceForm::OffDiag, 0.5), DomainError);
  EXPECT_THROW(distributional_check(x1x2, 0, 4, LaplaceForm::OffDiag, 0.5), DomainError);
  EXPECT_THROW(distributional_check(x1x2, 0, 1, LaplaceForm::OffDiag, 0.0), DomainError);
}

TEST(Flux, SingleOddSite) {
  const FluxReport r = flux_single_site(GlueParams(0.1, 0.3, 8), {1, 0, 0, 0});
  EXPECT_NEAR(r.predicted, 64.0 * kPi * kPi, 1e-12);
  EXPECT_NEAR(r.value, 64.0 * kPi * kPi, 1e-3 * 64.0 * kPi * kPi);
  EXPECT_LT(r.deviation(), 1e-9);
}

TEST(Flux, SingleEvenSiteVanishes) {
  const FluxReport r = flux_single_site(GlueParams(0.1, 0.3, 8), {1, 1, 0, 0});
  EXPECT_EQ(r.predicted, 0.0);
  EXPECT_LE(std::abs(r.value), std::max(r.quadrature_error, 1e-12));
}

TEST(Flux, SingleSiteMatchesClosedFormOnShell) {
  const GlueParams p(0.1, 0.3, 8);
  for (const Site& a : {Site{1, 2, 0, 0}, Site{0, 1, 1, 1}, Site{2, 1, 1, 1}, Site{3, 0, 0, 0}, Site{1, 1, 1, 0}}) {
    const FluxReport r = flux_single_site(p, a);
    EXPECT_NEAR(r.value, r.predicted, 1e-9 * 64.0 * kPi * kPi) << a[0] << a[1] << a[2] << a[3];
  }
}

TEST(Flux, SingleSiteEhGeometryConvergesToFlat) {
  const Site a{1, 0, 0, 0};
  const double flat = 64.0 * kPi * kPi;
  const double d1 = flux_single_site(GlueParams(0.1, 0.3, 8), a, 24, SiteGeometry::EguchiHanson).value - flat;
  const double d2 = flux_single_site(GlueParams(0.05, 0.3, 8), a, 24, SiteGeometry::EguchiHanson).value - flat;
  EXPECT_NEAR(std::log(d1 / d2) / std::log(2.0), 4.0, 0.2);
}

TEST(Flux, LeadingIsLinearInLatticeSum) {
  for (int N : {4, 8}) {
    const GluedMetric m(GlueParams(0.1, 0.3, N));
    const FluxReport r = flux_leading(m);
    EXPECT_NEAR(r.value, r.predicted, 1e-10 * std::abs(r.predicted)) << N;
  }
}

TEST(Flux, FullModeMatchesPrediction) {
  const GluedMetric m(GlueParams(0.1, 0.3, 32));
  const FluxReport r = flux_integral(m);
  EXPECT_NEAR(r.predicted, 32.0 * kPi * kPi * 1e-8 * 7.70, 0.01e-8 * 32.0 * kPi * kPi);
  EXPECT_LT(std::abs(r.value / r.predicted - 1.0), 0.02);
  EXPECT_TRUE(r.within_budget());
  EXPECT_LT(r.quadrature_error, 1e-3 * r.value);
}

TEST(Flux, RemainderPairingConstant) {
  for (double eps : {0.02, 0.03}) {
    const GlueParams p(eps, 0.3, 8);
    const EHParams eh(eps);
    const Estimate e = eh_flux(p, [&](const Point& x) { return remainder_perturbation(eh, x); }, 24);
    EXPECT_NEAR(e.value / scale12(p), -kFluxCorrectionConstant, 1e-3 * kFluxCorrectionConstant) << eps;
  }
}

TEST(Flux, RejectsLowOrder) {
  const GluedMetric m(GlueParams(0.1, 0.3, 4));
  EXPECT_THROW(flux_integral(m, 12), DomainError);
  EXPECT_THROW(flux_single_site(m.params(), {1, 0, 0, 0}, 8), DomainError);
  EXPECT_THROW(flux_single_site(m.params(), {0, 0, 0, 0}), DomainError);
}

TEST(ZTerm, ZeroPerturbationGivesZero) {
  const GlueParams p(0.1, 0.3, 4);
  const Estimate e = z_flux(p, [](const Point&) { return Sym2Jet{}; });
  EXPECT_EQ(e.value, 0.0);
}

TEST(ZTerm, RemainderIsInGauge) {
  const GlueParams p(0.1, 0.3, 4);
  const EHParams eh(p.epsilon);
  const Estimate e = z_flux(p, [&](const Point& x) { return remainder_perturbation(eh, x); });
  EXPECT_LT(std::abs(e.value), 1e-6 * scale12(p));
}

TEST(ZTerm, FluxWithinOrderBound) {
  const GluedMetric m(GlueParams(0.1, 0.3, 32));
  const Estimate e = z_flux(m);
  EXPECT_LE(std::abs(e.value), 10.0 * scale12(m.params()));
}

TEST(ZTerm, PointwiseScalesAsEps8) {
  auto bg = background_model(16);
  const GluedMetric a(GlueParams(0.1, 0.3, 16), bg), b(GlueParams(0.05, 0.3, 16), bg);
  const double za = z_sup(a, 0.3), zb = z_sup(b, 0.3);
  EXPECT_NEAR(std::log(za / zb) / std::log(2.0), 8.0, 0.05);
  EXPECT_LE(za, std::pow(0.1, 8) * std::pow(0.3, -9));
}

TEST(Projection, LinearizedAnnulusMatchesBoundaryTerms) {
  const GluedMetric m(GlueParams(0.1, 0.3, 32));
  ProjectionConfig c;
  c.radial_points = 32;
  c.sphere_order = 8;
  const Estimate lin = linearized_annulus(m, c);
  const double rhs = flux_integral(m).value_exact_h - z_flux(m).value;
  EXPECT_NEAR(lin.value, rhs, 1e-4 * std::abs(rhs));
}

TEST(Projection, AnnulusMatchesLinearizationInScaleSeparatedRegime) {
  const GluedMetric m(GlueParams(0.05, 0.3, 32));
  ProjectionConfig c;
  c.radial_points = 32;
  c.sphere_order = 8;
  c.outer_shells = 8;
  c.corner_points = 2;
  const ProjectionReport r = ric_projection_o1(m, c);
  const Estimate lin = linearized_annulus(m, c);
  EXPECT_NEAR(r.transition + r.shoulder, lin.value, 0.02 * std::abs(lin.value));
}

TEST(Projection, ApproachesPredictionAsEpsilonShrinks) {
  auto bg = background_model(32);
  ProjectionConfig c;
  c.radial_points = 32;
  c.sphere_order = 8;
  c.outer_shells = 24;
  c.corner_points = 6;
  const ProjectionReport r = ric_projection_o1(GluedMetric(GlueParams(0.05, 0.3, 32), bg), c);
  EXPECT_NEAR(r.value / r.predicted, 1.0, 0.02);
  EXPECT_LT(r.error, 0.01 * r.predicted);
}

TEST(Projection, MetricProjectionWithinOrderBound) {
  const GluedMetric m(GlueParams(0.05, 0.3, 16));
  const ProjectionConfig c{32, 12, 24, 48, 8};
  const ProjectionReport r = ric_projection_g(m, c);
  EXPECT_LT(r.error, r.predicted);
  EXPECT_LE(std::abs(r.value), r.predicted + r.error);
  // the pieces are of order eps^4 and cancel
  EXPECT_GT(std::abs(r.transition), 100.0 * r.predicted);
}

TEST(Projection, CornerRuleIntegratesSmoothFunctions) {
  const double exact = 1.0 - kPi * kPi / 32.0;
  EXPECT_NEAR(detail::corner_quadrature(12).integrate([](const Point&) { return 1.0; }), exact, 1e-8);
  auto f = [](const Point& x) { return std::cos(3.0 * x[0]) * std::exp(x[1] * x[2]) + x[3] * x[3] * x[0] * x[0]; };
  EXPECT_NEAR(detail::corner_quadrature(10).integrate(f), detail::corner_quadrature(14).integrate(f), 1e-6);
}

TEST(Projection, RejectsLargeDelta) {
  const GluedMetric m(GlueParams(0.1, 0.6, 4));
  EXPECT_THROW(ric_projection_o1(m), DomainError);
}
