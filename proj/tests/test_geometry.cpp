#include <gtest/gtest.h>

#include <random>

#include "holeopt/geometry.hpp"

using namespace holeopt;

namespace {

// Minimum distance to a densely sampled curve.
double dense_distance(const SmoothDomain& d, Vec2 q, int n = 200000) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) best = std::min(best, distance(q, d.point(kTwoPi * i / n)));
    return best;
}

}  // namespace

TEST(SignedDistance, DiskCenterAndOutside) {
    const auto disk = SmoothDomain::disk(1.0);
    EXPECT_NEAR(signed_distance(disk, {0.0, 0.0}), -1.0, 1e-12);
    EXPECT_NEAR(signed_distance(disk, {2.0, 0.0}), 1.0, 1e-12);
}

TEST(SignedDistance, EllipseCenterMatchesDenseSampling) {
    const auto e = SmoothDomain::ellipse(1.4, 1.0);
    EXPECT_NEAR(signed_distance(e, {0.0, 0.0}), -1.0, 1e-10);
    for (Vec2 q : {Vec2{0.3, 0.2}, Vec2{-1.1, 0.4}, Vec2{0.9, -0.6}, Vec2{1.6, 0.3}}) {
        const double s = signed_distance(e, q);
        EXPECT_NEAR(std::abs(s), dense_distance(e, q), 1e-7);
        EXPECT_EQ(s < 0.0, e.inside(q));
    }
}

TEST(Projection, DiskRadial) {
    const auto pr = project_to_boundary(SmoothDomain::disk(1.0), {0.5, 0.0});
    EXPECT_NEAR(pr.z.x, 1.0, 1e-10);
    EXPECT_NEAR(pr.z.y, 0.0, 1e-10);
    EXPECT_NEAR(pr.inward_normal.x, -1.0, 1e-12);
    EXPECT_NEAR(pr.inward_normal.y, 0.0, 1e-12);
}

TEST(Projection, EllipseSymmetryAxis) {
    const auto pr = project_to_boundary(SmoothDomain::ellipse(1.4, 1.0), {0.0, 0.8});
    EXPECT_NEAR(pr.z.x, 0.0, 1e-10);
    EXPECT_NEAR(pr.z.y, 1.0, 1e-10);
    EXPECT_NEAR(pr.inward_normal.y, -1.0, 1e-12);
}

TEST(Projection, FourierStarOnRay) {
    const auto star = SmoothDomain::fourier_star(1.0, {{2, 0.15}});
    const double r = 1.0 + 0.15 * std::cos(2.0 * 0.5 * kPi);
    const auto pr = project_to_boundary(star, {0.0, 0.9 * r});
    EXPECT_NEAR(pr.z.x, 0.0, 1e-9);
    EXPECT_NEAR(pr.z.y, r, 1e-9);
    EXPECT_NEAR(pr.distance, dense_distance(star, {0.0, 0.9 * r}), 1e-8);
}

TEST(Projection, BeyondReachIsAmbiguous) {
    EXPECT_THROW(project_to_boundary(SmoothDomain::disk(1.0), {0.0, 0.0}), AmbiguousProjection);
}

TEST(Projection, RandomPointsMatchSignedDistance) {
    const auto e = SmoothDomain::ellipse(1.4, 1.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ut(0.0, kTwoPi), ud(1e-4, 0.85 * e.reach());
    for (int i = 0; i < 10000; ++i) {
        const double t = ut(rng);
        const Vec2 q = e.point(t) - ud(rng) * e.outward_normal(t);
        const auto pr = project_to_boundary(e, q);
        ASSERT_NEAR(distance(q, pr.z), std::abs(signed_distance(e, q)), 1e-8);
    }
}

TEST(ContainsBall, Examples) {
    const auto disk = SmoothDomain::disk(1.0);
    EXPECT_NEAR(contains_ball(disk, Hole{{0.0, 0.0}, 0.3}), 0.7, 1e-12);
    EXPECT_NEAR(contains_ball(disk, Hole{{0.8, 0.0}, 0.3}), -0.1, 1e-12);
    EXPECT_NEAR(contains_ball(SmoothDomain::ellipse(1.4, 1.0), Hole{{0.0, 0.9}, 0.05}), 0.05, 1e-10);
}

TEST(ContainsBall, DiskCriterionExact) {
    const double R = 1.3, delta = 0.2;
    const auto disk = SmoothDomain::disk(R);
    for (int i = -50; i <= 50; ++i) {
        const double c = (R - delta) * (1.0 + i * 1e-3);
        if (std::abs(std::abs(c) - (R - delta)) < 1e-12) continue;
        EXPECT_EQ(contains_ball(disk, Hole{{c, 0.0}, delta}) > 0.0, std::abs(c) < R - delta) << c;
    }
}

TEST(PuncturedDomain, ClearanceInvariant) {
    const auto e = SmoothDomain::ellipse(1.4, 1.0);
    const PuncturedDomain pd(e, Hole{{0.3, 0.6}, 0.1});
    EXPECT_NEAR(pd.clearance(), -signed_distance(e, pd.center()) - pd.delta(), 1e-10);
    EXPECT_THROW(PuncturedDomain(e, Hole{{1.35, 0.0}, 0.1}), GeometryError);
    EXPECT_THROW(PuncturedDomain(e, Hole{{0.0, 0.0}, 0.0}), GeometryError);
}

TEST(SmoothDomain, InvalidStarRejected) {
    EXPECT_THROW(SmoothDomain::fourier_star(1.0, {{3, 1.2}}), GeometryError);
    EXPECT_THROW(SmoothDomain::disk(-1.0), GeometryError);
}

TEST(SmoothDomain, CurvatureFinite) {
    const auto star = SmoothDomain::fourier_star(1.0, {{2, 0.15}, {5, 0.03}});
    for (int i = 0; i < 4096; ++i) EXPECT_TRUE(std::isfinite(star.curvature(kTwoPi * i / 4096)));
    EXPECT_NEAR(SmoothDomain::ellipse(1.4, 1.0).max_abs_curvature(), 1.4, 1e-6);
}

TEST(ArcDecomposition, AxisPointsFromBoundaryToCenter) {
    const PuncturedDomain pd(SmoothDomain::disk(1.0), Hole{{0.0, 0.5}, 0.2});
    const auto d = arc_decomposition(pd, kPi / 6.0);
    EXPECT_NEAR(d.axis.x, 0.0, 1e-12);
    EXPECT_NEAR(d.axis.y, -1.0, 1e-12);
    EXPECT_NEAR(wrap_angle(0.5 * (d.top().start + d.top().end)), wrap_angle(-0.5 * kPi), 1e-12);
}

TEST(ArcDecomposition, Measures) {
    const PuncturedDomain pd(SmoothDomain::disk(1.0), Hole{{0.0, 0.5}, 0.2});
    const auto d = arc_decomposition(pd, 0.25 * kPi);
    EXPECT_NEAR(d.sides_measure(), kPi, 1e-12);
    EXPECT_NEAR(d.top().measure(), 0.5 * kPi, 1e-12);
    EXPECT_NEAR(d.bottom().measure(), 0.5 * kPi, 1e-12);
    EXPECT_THROW(arc_decomposition(pd, 0.0), GeometryError);
    EXPECT_THROW(arc_decomposition(pd, 0.5 * kPi), GeometryError);
}

TEST(ArcDecomposition, CosineThresholdsPartitionCircle) {
    const PuncturedDomain pd(SmoothDomain::ellipse(1.4, 1.0), Hole{{0.3, 0.85}, 0.04});
    const double theta = 0.2;
    const auto d = arc_decomposition(pd, theta);
    // Classify 1e4 circle samples by the defining cosine conditions.
    const int n = 10000;
    int top = 0, bottom = 0, sides = 0;
    for (int i = 0; i < n; ++i) {
        const double a = kTwoPi * (i + 0.5) / n;
        const double c = dot(unit_at(a), d.axis);
        if (c >= std::cos(theta)) {
            ++top;
            EXPECT_TRUE(d.top().contains(a));
        } else if (c <= -std::cos(theta)) {
            ++bottom;
            EXPECT_TRUE(d.bottom().contains(a));
        } else {
            ++sides;
            EXPECT_TRUE(d.side_left().contains(a) || d.side_right().contains(a));
        }
    }
    EXPECT_EQ(top + bottom + sides, n);
    EXPECT_NEAR(kTwoPi * top / n, d.top().measure(), 2.0 * kTwoPi / n);
    EXPECT_NEAR(kTwoPi * bottom / n, d.bottom().measure(), 2.0 * kTwoPi / n);
    EXPECT_NEAR(d.total_measure(), kTwoPi, 1e-12);
}

TEST(ArcDecomposition, RandomPartitionAdditivity) {
    std::mt19937_64 rng(11);
    // Centres within the projection-safe band near the boundary.
    std::uniform_real_distribution<double> ut(0.0, kTwoPi), uc(1e-4, 0.2), uth(0.01, 1.55);
    const auto e = SmoothDomain::ellipse(1.4, 1.0);
    for (int i = 0; i < 100; ++i) {
        const Vec2 p = center_near_boundary(e, ut(rng), 0.05, uc(rng));
        const PuncturedDomain pd(e, Hole{p, 0.05});
        const auto d = arc_decomposition(pd, uth(rng));
        EXPECT_NEAR(d.total_measure(), kTwoPi, 1e-12);
        EXPECT_NEAR(d.top().end, d.side_left().start, 1e-15);
        EXPECT_NEAR(d.side_left().end, d.bottom().start, 1e-15);
    }
}
