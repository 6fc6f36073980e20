#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bcdk/camera.hpp"
#include "test_util.hpp"

using namespace bcdk;
using bcdk::testing::reference_distort;

namespace {

constexpr double kPi = 3.14159265358979323846;

Intrinsics make_k(double fx, double fy, double cx, double cy, int w, int h) {
  return Intrinsics{fx, fy, cx, cy, 0.0, ImageGeometry(w, h)};
}

}  // namespace

TEST(ImageGeometry, ParsesAndFormats) {
  const auto g = ImageGeometry::parse("1392x512");
  EXPECT_EQ(g.width(), 1392);
  EXPECT_EQ(g.height(), 512);
  EXPECT_EQ(g.to_string(), "1392x512");
  EXPECT_EQ(g.pixel_count(), 1392u * 512u);
}

TEST(ImageGeometry, RejectsBadInput) {
  EXPECT_THROW(ImageGeometry(0, 5), std::invalid_argument);
  EXPECT_THROW(ImageGeometry::parse("12"), std::invalid_argument);
  EXPECT_THROW(ImageGeometry::parse("12x"), std::invalid_argument);
  EXPECT_THROW(ImageGeometry::parse("axb"), std::invalid_argument);
  EXPECT_THROW(ImageGeometry::parse("-3x4"), std::invalid_argument);
}

TEST(HfovToFx, RightAngleOnWideFrame) {
  EXPECT_NEAR(hfov_to_fx(90.0, 1392), 696.0, 1e-9);
}

TEST(HfovToFx, RightAngleOnTwoPixelFrame) {
  EXPECT_NEAR(hfov_to_fx(90.0, 2), 1.0, 1e-12);
}

TEST(HfovToFx, SixtyDegreesFullHd) {
  // tan(30 deg) = 1/sqrt(3), so fx = 960 sqrt(3).
  EXPECT_NEAR(hfov_to_fx(60.0, 1920), 960.0 * std::sqrt(3.0), 1e-9);
  EXPECT_NEAR(hfov_to_fx(60.0, 1920), 1662.768775, 1e-6);
}

TEST(HfovToFx, OutOfRangeIsDomainError) {
  EXPECT_THROW(hfov_to_fx(0.0, 100), std::domain_error);
  EXPECT_THROW(hfov_to_fx(180.0, 100), std::domain_error);
  EXPECT_THROW(hfov_to_fx(-5.0, 100), std::domain_error);
  EXPECT_THROW(hfov_to_fx(std::nan(""), 100), std::domain_error);
}

TEST(HfovToFx, InverseRoundTrip) {
  for (double h = 5.0; h < 180.0; h += 7.5) {
    EXPECT_NEAR(fx_to_hfov(hfov_to_fx(h, 1392), 1392), h, 1e-9);
  }
}

TEST(Intrinsics, FromHfovIsCenteredWithUnitAspect) {
  const auto k = Intrinsics::from_hfov(90.0, ImageGeometry(1392, 512));
  EXPECT_DOUBLE_EQ(k.cx, 696.0);
  EXPECT_DOUBLE_EQ(k.cy, 256.0);
  EXPECT_EQ(k.fx, k.fy);
  EXPECT_EQ(k.skew, 0.0);
  EXPECT_NEAR(k.hfov_deg(), 90.0, 1e-12);
}

TEST(PixelToNormalized, PrincipalPointIsOrigin) {
  const auto k = make_k(500, 400, 320.5, 240.25, 640, 480);
  const auto n = pixel_to_normalized({k.cx, k.cy}, k);
  EXPECT_EQ(n.x, 0.0);
  EXPECT_EQ(n.y, 0.0);
}

TEST(PixelToNormalized, OneFocalLengthOffset) {
  const auto k = make_k(500, 400, 320.5, 240.25, 640, 480);
  const auto n = pixel_to_normalized({k.cx + k.fx, k.cy}, k);
  EXPECT_DOUBLE_EQ(n.x, 1.0);
  EXPECT_DOUBLE_EQ(n.y, 0.0);
}

TEST(PixelToNormalized, TopLeftOfWideFrame) {
  const auto k = make_k(696, 696, 696, 256, 1392, 512);
  const auto n = pixel_to_normalized({0.0, 0.0}, k);
  EXPECT_DOUBLE_EQ(n.x, -1.0);
  EXPECT_DOUBLE_EQ(n.y, -256.0 / 696.0);
  EXPECT_NEAR(n.y, -0.3678, 1e-4);
}

TEST(NormalizedToPixel, OriginIsPrincipalPoint) {
  const auto k = make_k(123, 456, 7.5, 8.5, 20, 20);
  const auto p = normalized_to_pixel({0.0, 0.0}, k);
  EXPECT_EQ(p.u, 7.5);
  EXPECT_EQ(p.v, 8.5);
}

TEST(NormalizedToPixel, ScalesPerAxis) {
  const auto k = make_k(100, 200, 10, 20, 300, 300);
  const auto p = normalized_to_pixel({1.0, 1.0}, k);
  EXPECT_DOUBLE_EQ(p.u, 110.0);
  EXPECT_DOUBLE_EQ(p.v, 220.0);
}

TEST(Projection, RoundTripProperty) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> f(50, 5000), c(-100, 2000),
      uv(-500, 3000);
  for (int i = 0; i < 2000; ++i) {
    auto k = make_k(f(gen), f(gen), c(gen), c(gen), 1392, 512);
    k.skew = (i % 3 == 0) ? 0.0 : 0.01 * f(gen);
    const PixelPoint p{uv(gen), uv(gen)};
    const auto back = normalized_to_pixel(pixel_to_normalized(p, k), k);
    EXPECT_NEAR(back.u, p.u, 1e-9);
    EXPECT_NEAR(back.v, p.v, 1e-9);
  }
}

TEST(Distort, ZeroCoefficientsIsExactIdentity) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    const NormalizedPoint p{u(gen), u(gen)};
    const auto q = distort(p, {});
    EXPECT_EQ(q.x, p.x);
    EXPECT_EQ(q.y, p.y);
  }
}

TEST(Distort, RadialHandCase) {
  DistortionCoefficients d;
  d.k1 = 0.25;
  const auto q = distort({0.5, 0.5}, d);
  EXPECT_NEAR(q.x, 0.5625, 1e-12);
  EXPECT_NEAR(q.y, 0.5625, 1e-12);
}

TEST(Distort, TangentialHandCase) {
  DistortionCoefficients d;
  d.p1 = 0.1;
  d.p2 = 0.1;
  const auto q = distort({0.5, 0.5}, d);
  EXPECT_NEAR(q.x, 0.65, 1e-12);
  EXPECT_NEAR(q.y, 0.65, 1e-12);
}

TEST(Distort, MatchesTermByTermReference) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-1.5, 1.5), c(-0.5, 0.5);
  for (int i = 0; i < 1000; ++i) {
    const DistortionCoefficients d{c(gen), c(gen), c(gen), 0.2 * c(gen),
                                   0.2 * c(gen)};
    const double x = u(gen);
    const double y = u(gen);
    const auto q = distort({x, y}, d);
    const auto r = reference_distort(x, y, d);
    EXPECT_NEAR(q.x, r.x, 1e-12 * (1 + std::abs(r.x)));
    EXPECT_NEAR(q.y, r.y, 1e-12 * (1 + std::abs(r.y)));
  }
}

TEST(Distort, RadialSymmetryProperties) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1.2, 1.2), c(-0.4, 0.4);
  for (int i = 0; i < 500; ++i) {
    const DistortionCoefficients d{c(gen), c(gen), c(gen), 0.0, 0.0};
    const NormalizedPoint p{u(gen), u(gen)};
    const auto a = distort(p, d);
    const auto swapped = distort({p.y, p.x}, d);
    EXPECT_DOUBLE_EQ(swapped.x, a.y);
    EXPECT_DOUBLE_EQ(swapped.y, a.x);
    const auto neg = distort({-p.x, -p.y}, d);
    EXPECT_DOUBLE_EQ(neg.x, -a.x);
    EXPECT_DOUBLE_EQ(neg.y, -a.y);
  }
}

TEST(Distort, DisplacementGrowsWithK1) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const NormalizedPoint p{u(gen), u(gen)};
    if (p.x == 0.0 && p.y == 0.0) continue;
    double previous = 0.0;
    for (double k1 = 0.0; k1 <= 2.0; k1 += 0.05) {
      DistortionCoefficients d;
      d.k1 = k1;
      const auto q = distort(p, d);
      const double moved = std::hypot(q.x - p.x, q.y - p.y);
      EXPECT_GE(moved, previous);
      previous = moved;
    }
  }
}

TEST(DistortJacobian, MatchesCentralDifferences) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0), c(-0.3, 0.3);
  const double h = 1e-6;
  for (int i = 0; i < 300; ++i) {
    const DistortionCoefficients d{c(gen), c(gen), c(gen), 0.1 * c(gen),
                                   0.1 * c(gen)};
    const double x = u(gen);
    const double y = u(gen);
    const auto j = distort_jacobian({x, y}, d);
    const auto xp = reference_distort(x + h, y, d);
    const auto xm = reference_distort(x - h, y, d);
    const auto yp = reference_distort(x, y + h, d);
    const auto ym = reference_distort(x, y - h, d);
    EXPECT_NEAR(j[0], (xp.x - xm.x) / (2 * h), 1e-6);
    EXPECT_NEAR(j[1], (yp.x - ym.x) / (2 * h), 1e-6);
    EXPECT_NEAR(j[2], (xp.y - xm.y) / (2 * h), 1e-6);
    EXPECT_NEAR(j[3], (yp.y - ym.y) / (2 * h), 1e-6);
  }
}

TEST(Undistort, ZeroCoefficientsReturnsInputAfterOneIteration) {
  const NormalizedPoint p{0.3, -1.7};
  const auto r = try_undistort(p, {});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.point.x, p.x);
  EXPECT_EQ(r.point.y, p.y);
  EXPECT_EQ(undistort(p, {}).x, p.x);
}

TEST(Undistort, InvertsRadialHandCase) {
  DistortionCoefficients d;
  d.k1 = 0.25;
  const auto p = undistort({0.5625, 0.5625}, d);
  EXPECT_NEAR(p.x, 0.5, 1e-10);
  EXPECT_NEAR(p.y, 0.5, 1e-10);
}

TEST(Undistort, InvertsTangentialHandCase) {
  DistortionCoefficients d;
  d.p1 = 0.1;
  d.p2 = 0.1;
  const auto p = undistort({0.65, 0.65}, d);
  EXPECT_NEAR(p.x, 0.5, 1e-9);
  EXPECT_NEAR(p.y, 0.5, 1e-9);
}

TEST(Undistort, ResidualMeetsTolerance) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(-0.8, 0.8), c(-0.2, 0.2);
  for (int i = 0; i < 1000; ++i) {
    const DistortionCoefficients d{c(gen), c(gen), c(gen), 0.1 * c(gen),
                                   0.1 * c(gen)};
    const NormalizedPoint target = reference_distort(u(gen), u(gen), d);
    const auto r = try_undistort(target, d);
    ASSERT_TRUE(r.converged);
    const auto back = reference_distort(r.point.x, r.point.y, d);
    EXPECT_LE(std::max(std::abs(back.x - target.x), std::abs(back.y - target.y)),
              1e-10 * 1.0000001);
  }
}

TEST(Undistort, SeededVariantAgrees) {
  DistortionCoefficients d;
  d.k1 = -0.2;
  d.k2 = 0.05;
  d.p1 = 0.01;
  const NormalizedPoint target{0.7, -0.4};
  const auto a = try_undistort(target, d);
  const auto b = try_undistort_from(target, {0.75, -0.45}, d);
  const auto c = try_undistort_from(target, {std::nan(""), 0.0}, d);
  ASSERT_TRUE(a.converged && b.converged && c.converged);
  EXPECT_NEAR(a.point.x, b.point.x, 1e-9);
  EXPECT_NEAR(a.point.y, b.point.y, 1e-9);
  EXPECT_EQ(a.point.x, c.point.x);
}

TEST(Undistort, ReportsNonConvergence) {
  // One update cannot reach the default tolerance for a strong distortion.
  DistortionCoefficients d;
  d.k1 = 0.3;
  d.p1 = 0.05;
  UndistortOptions opts;
  opts.max_iter = 1;
  const NormalizedPoint far{0.9, 0.9};
  const auto r = try_undistort(far, d, opts);
  EXPECT_FALSE(r.converged);
  EXPECT_GT(r.residual, opts.tol);
  try {
    undistort(far, d, opts);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_GT(e.residual(), opts.tol);
    EXPECT_LE(e.iterations(), opts.max_iter);
    EXPECT_TRUE(std::isfinite(e.last_iterate().x));
  }
}

TEST(Coefficients, NamesRoundTrip) {
  for (Coefficient c : kAllCoefficients) {
    EXPECT_EQ(parse_coefficient(coefficient_name(c)), c);
  }
  EXPECT_FALSE(parse_coefficient("k4").has_value());
  DistortionCoefficients d;
  d[Coefficient::p2] = 0.5;
  EXPECT_EQ(d.p2, 0.5);
  EXPECT_FALSE(d.is_zero());
  d.k3 = std::nan("");
  EXPECT_FALSE(d.all_finite());
}

TEST(Hfov, PiConsistency) {
  // fx for 2 atan(1/2) rad is exactly W.
  const double hfov = 2.0 * std::atan(0.5) * 180.0 / kPi;
  EXPECT_NEAR(hfov_to_fx(hfov, 640), 640.0, 1e-9);
}
