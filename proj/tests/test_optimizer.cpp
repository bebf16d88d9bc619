#include <gtest/gtest.h>

#include "holeopt/optimizer.hpp"

using namespace holeopt;

TEST(FactorForClearance, ClampsToRange) {
    EXPECT_EQ(factor_for_clearance(0.02, 1.0, 8.0), 8.0);
    EXPECT_EQ(factor_for_clearance(0.02, 0.001, 8.0), 23.0);
    EXPECT_EQ(factor_for_clearance(0.02, 1e-6, 8.0), 64.0);
    EXPECT_EQ(factor_for_clearance(0.02, 1.0, 0.5), 1.0);
}

TEST(OptimizeHole, InfeasibleStartRejected) {
    EXPECT_THROW(optimize_hole(SmoothDomain::disk(1.0), 0.2, {0.85, 0.0}), InfeasibleStart);
    EXPECT_THROW(optimize_hole(SmoothDomain::disk(1.0), -0.2, {0.0, 0.0}), ConfigError);
    OptimizeOptions o;
    o.shrink = 1.0;
    EXPECT_THROW(optimize_hole(SmoothDomain::disk(1.0), 0.2, {0.0, 0.0}, o), ConfigError);
}

TEST(OptimizeHole, ConcentricStartStopsImmediately) {
    const auto tr = optimize_hole(SmoothDomain::disk(1.0), 0.2, {0.0, 0.0});
    EXPECT_EQ(tr.termination, Termination::gradient_small);
    EXPECT_EQ(tr.iterates.size(), 1u);
    EXPECT_GT(tr.g_tol, 0.0);
}

TEST(OptimizeHole, AscentAndFeasibility) {
    OptimizeOptions o;
    o.max_iter = 4;
    const auto tr = optimize_hole(SmoothDomain::disk(1.0), 0.2, {0.5, 0.1}, o);
    ASSERT_GE(tr.iterates.size(), 2u);
    // Ascent up to the noise of comparing values from independently generated meshes.
    const double noise = 1e-3 * tr.iterates.front().lambda1;
    for (std::size_t k = 1; k < tr.iterates.size(); ++k) {
        EXPECT_GE(tr.iterates[k].lambda1, tr.iterates[k - 1].lambda1 - noise);
        EXPECT_GE(tr.iterates[k].clearance, 0.0);
    }
    EXPECT_LT(norm(tr.iterates.back().p), norm(tr.iterates.front().p));
}

TEST(OptimizeHole, FirstStepLeavesBoundaryCollar) {
    const auto e = SmoothDomain::ellipse(1.4, 1.0);
    const double delta = 0.05;
    const Vec2 p0 = center_near_boundary(e, 1.0, delta, 0.5 * delta * delta);
    OptimizeOptions o;
    o.max_iter = 1;
    const auto tr = optimize_hole(e, delta, p0, o);
    ASSERT_EQ(tr.iterates.size(), 2u);
    EXPECT_LT(tr.iterates[0].clearance, delta * delta);
    EXPECT_GT(tr.iterates[1].clearance, tr.iterates[0].clearance);
}

TEST(LandscapeScan, DiskArgmaxAtCenter) {
    const GridSpec grid{{-0.4, -0.4}, {0.4, 0.4}, 5, 5};
    const auto ls = landscape_scan(SmoothDomain::disk(1.0), 0.2, grid, {}, 2);
    EXPECT_EQ(ls.points.size(), 25u);
    EXPECT_NEAR(norm(ls.points[ls.argmax].p), 0.0, 1e-12);
}

TEST(LandscapeScan, EllipseMirrorSymmetry) {
    const GridSpec grid{{-0.6, -0.4}, {0.6, 0.4}, 5, 3};
    const auto ls = landscape_scan(SmoothDomain::ellipse(1.4, 1.0), 0.1, grid);
    ASSERT_EQ(ls.points.size(), 15u);
    for (int j = 0; j < 3; ++j) {
        for (int i = 0; i < 2; ++i) {
            const auto& a = ls.points[j * 5 + i];
            const auto& b = ls.points[j * 5 + 4 - i];
            EXPECT_NEAR(a.p.x, -b.p.x, 1e-12);
            EXPECT_NEAR(a.lambda1, b.lambda1, 2e-3 * a.lambda1);
        }
    }
}

TEST(LandscapeScan, SkipsInfeasibleNodesAndChecksSpacing) {
    const GridSpec wide{{-1.0, -1.0}, {1.0, 1.0}, 3, 3};
    const auto ls = landscape_scan(SmoothDomain::disk(1.0), 0.2, wide);
    EXPECT_EQ(ls.points.size(), 1u);
    const GridSpec tight{{-0.1, -0.1}, {0.1, 0.1}, 9, 9};
    EXPECT_THROW(landscape_scan(SmoothDomain::disk(1.0), 0.2, tight), ConfigError);
}

TEST(Termination, Names) {
    EXPECT_STREQ(to_string(Termination::gradient_small), "gradient_small");
    EXPECT_STREQ(to_string(Termination::boundary_stall), "boundary_stall");
}
