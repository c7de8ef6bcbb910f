#include <gtest/gtest.h>

#include "ehglue/fit.hpp"
#include "ehglue/quadrature.hpp"
#include "ehglue/summation.hpp"

using namespace ehglue;

TEST(S3Rule, VolumeOfUnitSphere) {
  for (int n : {4, 8, 16, 24}) {
    const auto q = s3_quadrature(n);
    EXPECT_NEAR(q.total_weight() / (2 * kPi * kPi), 1.0, 1e-12);
    for (double w : q.weights) EXPECT_GT(w, 0.0);
  }
  EXPECT_NEAR(s3_quadrature(8, 2.0).total_weight(), 2 * kPi * kPi * 8, 1e-11);
}

TEST(S3Rule, SecondMoments) {
  const auto q = s3_quadrature(8);
  for (int i = 0; i < 4; ++i)
    EXPECT_NEAR(q.integrate([i](const Point& x) { return x[i] * x[i]; }), kPi * kPi / 2, 1e-13);
  EXPECT_NEAR(q.integrate([](const Point& x) { return x[0] * x[1]; }), 0.0, 1e-14);
  EXPECT_NEAR(q.integrate([](const Point& x) { return x[2] * x[3]; }), 0.0, 1e-14);
}

TEST(S3Rule, ExactForPolynomialsUpToOrder) {
  // Moments of the unit 3-sphere: int x1^4 = pi^2/4, int x1^2 x2^2 = pi^2/12,
  // int x1^2 x2^2 x3^2 = pi^2/96 (degree 6), int x1^8 = 35 pi^2 / 192 ... use
  // the general formula 2 prod Gamma((a_i+1)/2) / Gamma((|a|+4)/2).
  auto moment = [](std::array<int, 4> a) {
    double num = 2.0;
    int s = 0;
    for (int k : a) {
      if (k % 2) return 0.0;
      num *= std::tgamma((k + 1) / 2.0);
      s += k;
    }
    return num / std::tgamma((s + 4) / 2.0);
  };
  for (int order : {4, 6, 8}) {
    const auto q = s3_quadrature(order);
    for (int a0 = 0; a0 <= order; ++a0)
      for (int a1 = 0; a0 + a1 <= order; ++a1)
        for (int a2 = 0; a0 + a1 + a2 <= order; ++a2)
          for (int a3 = 0; a0 + a1 + a2 + a3 <= order; ++a3) {
            const double v = q.integrate([&](const Point& x) {
              return std::pow(x[0], a0) * std::pow(x[1], a1) * std::pow(x[2], a2) * std::pow(x[3], a3);
            });
            EXPECT_NEAR(v, moment({a0, a1, a2, a3}), 1e-13) << a0 << a1 << a2 << a3;
          }
  }
}

TEST(S3Rule, RejectsBadInput) {
  EXPECT_THROW(s3_quadrature(3), DomainError);
  EXPECT_THROW(s3_quadrature(8, 0.0), DomainError);
}

TEST(S3Rule, DoublingOrderChangeBelowEstimate) {
  // Smooth non-polynomial integrand; the estimate is |Q_n - Q_{n/2}|.
  auto f = [](const Point& x) { return std::exp(x[0] + 0.5 * x[1]) / (2.0 + x[2] * x[3]); };
  const double q8 = s3_quadrature(8).integrate(f), q16 = s3_quadrature(16).integrate(f),
               q32 = s3_quadrature(32).integrate(f);
  const double est16 = std::abs(q16 - q8);
  EXPECT_LE(std::abs(q32 - q16), est16 + 1e-14);
}

TEST(RadialRule, KernelTensorNormCaseEpsOne) {
  auto f = [](double r) {
    const double a = 1.0 / (1.0 + r * r * r * r);
    return 4.0 * a * a * 2 * kPi * kPi * r * r * r;
  };
  const auto res = radial_integrate(f, 0.0, INFINITY, 8.0);
  EXPECT_NEAR(res.value / (2 * kPi * kPi), 1.0, 1e-10);
  EXPECT_LE(res.error, 1e-9);
}

TEST(RadialRule, FiniteAndTail) {
  EXPECT_NEAR(radial_integrate([](double r) { return r * r * r; }, 0.0, 1.0).value, 0.25, 1e-15);
  const auto t = radial_integrate([](double r) { return std::pow(r, -5) * r * r * r; }, 1.0, INFINITY, 5.0);
  EXPECT_NEAR(t.value, 1.0, 1e-10);
  EXPECT_LE(std::abs(t.value - 1.0), t.error + 1e-15);
}

TEST(RadialRule, RejectsNonIntegrableTail) {
  EXPECT_THROW(radial_integrate([](double r) { return r; }, 1.0, INFINITY, 4.0), DomainError);
}

TEST(AnnulusRule, ShellVolume) {
  const auto q = annulus_quadrature(24, 8, 0.5, 1.0);
  EXPECT_NEAR(q.total_weight(), kPi * kPi / 2 * (1.0 - 0.0625), 1e-13);
  EXPECT_NEAR(q.integrate([](const Point& x) { return norm2(x); }), kPi * kPi / 3 * (1.0 - 1.0 / 64), 1e-13);
}

TEST(GaussLegendre, Exactness) {
  auto [x, w] = gauss_legendre(10);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 18);
  EXPECT_NEAR(s, 2.0 / 19, 1e-15);
  auto [x3, w3] = gauss_legendre(3, 0.0, 2.0);
  EXPECT_NEAR(w3[0] + w3[1] + w3[2], 2.0, 1e-15);
}

TEST(Summation, CompensatedBeatsNaive) {
  std::vector<double> v{1.0, 1e100, 1.0, -1e100};
  EXPECT_EQ(compensated_sum(v), 2.0);
}

TEST(Summation, ParallelMapIsThreadCountIndependent) {
  auto f = [](std::size_t i) { return std::sin(0.1 * i) / (1.0 + i); };
  const auto a = parallel_map<double>(10001, f, 1);
  const auto b = parallel_map<double>(10001, f, 4);
  EXPECT_EQ(compensated_sum(a), compensated_sum(b));
}

TEST(Fit, PowerLawAndExtrapolation) {
  std::vector<double> x{1, 2, 4, 8}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -2.5));
  const auto f = fit_power(x, y);
  EXPECT_NEAR(f.exponent, -2.5, 1e-12);
  EXPECT_NEAR(f.prefactor, 3.0, 1e-12);
  // v(s) = 2 + s - s^2 sampled at s = 0.04, 0.01, 0.0025
  std::vector<double> s{0.04, 0.01, 0.0025}, v;
  for (double t : s) v.push_back(2 + t - t * t);
  EXPECT_NEAR(extrapolate_to_zero(s, v), 2.0, 1e-14);
}
