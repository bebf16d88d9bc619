#include <gtest/gtest.h>

#include <random>

#include "holeopt/eigensolver.hpp"
#include "holeopt/optimizer.hpp"
#include "oracles.hpp"

using namespace holeopt;

namespace {

double mass_norm2(const EigenSolution& s) {
    Eigen::Map<const Vector> u(s.u.data(), Eigen::Index(s.u.size()));
    return u.dot(s.system->M * u);
}

// Solution on a punctured disk, meshed with enough resolution for the clearance.
EigenSolution solve_at(const SmoothDomain& dom, Vec2 p, double delta, double h) {
    const PuncturedDomain pd(dom, Hole{p, delta});
    h = std::min(h, 0.9 * delta);
    return solve_lambda1(generate_mesh(pd, h, factor_for_clearance(h, pd.clearance(), 4.0)));
}

}  // namespace

TEST(ElementMatrices, ReferenceTriangle) {
    const auto k = element_stiffness({0, 0}, {1, 0}, {0, 1});
    for (const auto& row : k) EXPECT_NEAR(row[0] + row[1] + row[2], 0.0, 1e-15);
    EXPECT_NEAR(k[0][0], 1.0, 1e-15);
    const auto m = element_mass({0, 0}, {1, 0}, {0, 1});
    double total = 0.0;
    for (const auto& row : m) for (double v : row) total += v;
    EXPECT_NEAR(total, 0.5, 1e-15);
}

TEST(Assemble, StiffnessPositiveOnRandomVector) {
    const Mesh m = generate_domain_mesh(SmoothDomain::disk(1.0), 0.1);
    const FemSystem s = assemble(m);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 5; ++trial) {
        Vector x(s.K_ii.rows());
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = nd(rng);
        EXPECT_GT(x.dot(s.K_ii * x), 0.0);
        EXPECT_GT(x.dot(s.M_ii * x), 0.0);
    }
    EXPECT_NEAR((s.K - Eigen::SparseMatrix<double>(s.K.transpose())).norm(), 0.0, 1e-12);
    // Total mass equals the polygon area.
    double area = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) area += m.signed_area(t);
    EXPECT_NEAR(Vector::Ones(s.M.rows()).dot(s.M * Vector::Ones(s.M.rows())), area, 1e-12);
    EXPECT_NEAR(area, kPi, 0.01);
}

TEST(SolveLambda1, DiskMatchesBesselRoot) {
    const auto sol = solve_lambda1(generate_domain_mesh(SmoothDomain::disk(1.0), 0.04));
    EXPECT_NEAR(sol.lambda1 / oracle::disk_lambda1(), 1.0, 5e-3);
    EXPECT_NEAR(mass_norm2(sol), 1.0, 1e-10);
    EXPECT_LE(sol.residual, 1e-9);
    const double umax = *std::max_element(sol.u.begin(), sol.u.end());
    EXPECT_GT(umax, 0.0);
    for (std::size_t v = 0; v < sol.u.size(); ++v) {
        EXPECT_GE(sol.u[v], -1e-8 * umax);
        if (is_boundary(sol.mesh->tags[v])) {
            EXPECT_EQ(sol.u[v], 0.0);
        }
    }
}

TEST(SolveLambda1, DiskCenterValue) {
    const auto sol = solve_lambda1(generate_domain_mesh(SmoothDomain::disk(1.0), 0.03));
    EXPECT_NEAR(evaluate_u(sol, {0.0, 0.0}) / oracle::disk_u0(), 1.0, 0.01);
}

TEST(SolveLambda1, DiskConvergenceOrder) {
    const std::vector<double> hs{0.08, 0.04, 0.02};
    const auto disk = SmoothDomain::disk(1.0);
    const auto rows = convergence_study([&](double h) { return generate_domain_mesh(disk, h); }, hs);
    ASSERT_TRUE(rows.back().estimate.defined);
    EXPECT_GE(rows.back().estimate.order, 1.7);
    EXPECT_LE(rows.back().estimate.order, 2.3);
    EXPECT_NEAR(rows.back().lambda1 / oracle::disk_lambda1(), 1.0, 5e-3);
}

TEST(SolveLambda1, AnnulusEigenvalueAndFlux) {
    const double a = 0.3;
    const PuncturedDomain pd(SmoothDomain::disk(1.0), Hole{{0, 0}, a});
    const auto sol = solve_lambda1(generate_mesh(pd, 0.02, 4));
    EXPECT_NEAR(sol.lambda1 / oracle::annulus_lambda1(a), 1.0, 0.01);
    const auto f = hole_flux(sol);
    double mean = 0.0;
    for (double g : f.values) mean += g;
    mean /= double(f.values.size());
    EXPECT_LE((f.max_value() - f.min_value()) / mean, 0.02);
    EXPECT_NEAR(mean / oracle::annulus_inner_flux(a), 1.0, 0.03);
    for (double g : f.values) EXPECT_GE(g, -1e-3 * f.max_value());
    for (std::size_t i = 1; i < f.angles.size(); ++i) EXPECT_LT(f.angles[i - 1], f.angles[i]);
}

TEST(SolveLambda1, AnnulusConvergenceOrder) {
    const PuncturedDomain pd(SmoothDomain::disk(1.0), Hole{{0, 0}, 0.3});
    const std::vector<double> hs{0.08, 0.04, 0.02};
    const auto rows = convergence_study(pd, hs, 4.0);
    ASSERT_TRUE(rows.back().estimate.defined);
    EXPECT_GE(rows.back().estimate.order, 1.7);
    EXPECT_LE(rows.back().estimate.order, 2.3);
}

TEST(SolveLambda1, DeterministicOnSameMesh) {
    auto mesh = std::make_shared<const Mesh>(generate_mesh(PuncturedDomain(SmoothDomain::ellipse(1.4, 1.0), Hole{{0.3, 0.2}, 0.2}), 0.05, 4));
    const auto a = solve_lambda1(mesh), b = solve_lambda1(mesh);
    EXPECT_NEAR(a.lambda1, b.lambda1, 1e-14 * a.lambda1);
    EXPECT_EQ(a.u, b.u);
}

TEST(SolveLambda1, NoConvergenceCarriesIterate) {
    const Mesh m = generate_domain_mesh(SmoothDomain::disk(1.0), 0.1);
    EigenOptions opt;
    opt.max_iter = 1;
    try {
        solve_lambda1(m, opt);
        FAIL() << "expected NoConvergence";
    } catch (const NoConvergence& e) {
        EXPECT_EQ(e.best().iterations, 1);
        EXPECT_GT(e.best().lambda1, 0.0);
    }
}

TEST(EvaluateU, VerticesAndHoleBoundary) {
    const PuncturedDomain pd(SmoothDomain::disk(1.0), Hole{{0.2, 0.1}, 0.2});
    const auto sol = solve_lambda1(generate_mesh(pd, 0.05, 4));
    const SolutionProbe probe(sol);
    for (std::size_t v = 0; v < sol.mesh->num_vertices(); v += 7) {
        EXPECT_NEAR(probe(sol.mesh->vertices[v]), sol.u[v], 1e-12);
    }
    for (const auto& [a, b] : boundary_edges(*sol.mesh)) {
        if (sol.mesh->tags[a] != BoundaryTag::hole_boundary) continue;
        EXPECT_NEAR(probe(0.5 * (sol.mesh->vertices[a] + sol.mesh->vertices[b])), 0.0, 1e-12);
    }
    EXPECT_THROW(probe({2.0, 0.0}), OutsideMesh);
}

TEST(Richardson, UndefinedForConstantData) {
    EXPECT_FALSE(richardson(0.08, 5.0, 0.04, 5.0, 0.02, 5.0).defined);
    EXPECT_FALSE(richardson(0.08, 5.0, 0.04, 4.0, 0.02, 4.5).defined);
    const auto r = richardson(0.4, 1.0 + 0.16, 0.2, 1.0 + 0.04, 0.1, 1.0 + 0.01);
    ASSERT_TRUE(r.defined);
    EXPECT_NEAR(r.order, 2.0, 1e-9);
    EXPECT_NEAR(r.extrapolated, 1.0, 1e-9);
}

TEST(Properties, DomainMonotonicity) {
    const auto disk = SmoothDomain::disk(1.0);
    const double h = 0.04;
    const double base = solve_lambda1(generate_domain_mesh(disk, h)).lambda1;
    const double err = std::abs(base - oracle::disk_lambda1());
    for (Vec2 p : {Vec2{0, 0}, Vec2{0.5, 0.2}, Vec2{-0.3, 0.6}}) {
        EXPECT_GE(solve_at(disk, p, 0.1, h).lambda1, base - 3.0 * err);
    }
}

TEST(Properties, UniformEigenvalueCap) {
    const auto disk = SmoothDomain::disk(1.0);
    const double h = 0.04;
    const double cap = solve_at(disk, {0, 0}, 0.1, h).lambda1 + 1.0;
    int solved = 0;
    for (double delta : {0.1, 0.05}) {
        for (int j = 0; j < 5; ++j) {
            for (int i = 0; i < 5; ++i) {
                const Vec2 p{-0.8 + 0.4 * i, -0.8 + 0.4 * j};
                if (!(contains_ball(disk, Hole{p, delta}) > 0.0)) continue;
                EXPECT_LE(solve_at(disk, p, delta, h).lambda1, cap) << p.x << ',' << p.y << " delta " << delta;
                ++solved;
            }
        }
    }
    EXPECT_GE(solved, 30);
}

TEST(Properties, LipschitzToBoundary) {
    const auto dom = SmoothDomain::ellipse(1.4, 1.0);
    const double h = 0.03;
    const auto plain = solve_lambda1(generate_domain_mesh(dom, h));
    const auto holed = solve_at(dom, {0.4, -0.2}, 0.1, h);
    const SolutionProbe up(plain), uh(holed);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(-1.4, 1.4), uy(-1.0, 1.0);
    double c_plain = 0.0, c_holed = 0.0;
    int n = 0;
    while (n < 2000) {
        const Vec2 q{ux(rng), uy(rng)};
        const double d = -dom.signed_distance(q);
        if (d < 0.02 || distance(q, {0.4, -0.2}) < 0.12) continue;
        c_plain = std::max(c_plain, up(q) / d);
        c_holed = std::max(c_holed, uh(q) / d);
        ++n;
    }
    EXPECT_GT(c_plain, 0.0);
    EXPECT_LE(c_holed, 2.0 * c_plain);
}

TEST(Properties, InteriorLowerBoundFromBoundaryFlux) {
    const auto dom = SmoothDomain::ellipse(1.4, 1.0);
    const double h = 0.03, d = 0.2;
    const auto plain = solve_lambda1(generate_domain_mesh(dom, h));
    const double Lambda = boundary_flux(plain, BoundaryTag::outer_boundary, {0, 0}, 1.0).min_value();
    ASSERT_GT(Lambda, 0.0);
    const auto holed = solve_at(dom, {0.0, 0.0}, 0.05, h);
    const SolutionProbe u(holed);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ux(-1.4, 1.4), uy(-1.0, 1.0);
    int n = 0;
    while (n < 1000) {
        const Vec2 q{ux(rng), uy(rng)};
        const double dist = -dom.signed_distance(q);
        if (dist < d || dist > 2.0 * d) continue;
        EXPECT_GE(u(q), Lambda * d / 8.0) << q.x << ',' << q.y;
        ++n;
    }
}
