#include <gtest/gtest.h>

#include <sstream>

#include "holeopt/mesher.hpp"

using namespace holeopt;

namespace {

Mesh single_triangle(Vec2 a, Vec2 b, Vec2 c) {
    Mesh m;
    m.vertices = {a, b, c};
    m.triangles = {{0, 1, 2}};
    m.tags.assign(3, BoundaryTag::outer_boundary);
    return m;
}

void expect_invariants(const Mesh& m, const PuncturedDomain& pd) {
    const auto chk = check_mesh(m);
    EXPECT_TRUE(chk.ok()) << chk.problem;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) EXPECT_GE(m.signed_area(t), 1e-14);
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
        const Vec2 q = m.vertices[v];
        if (m.tags[v] == BoundaryTag::hole_boundary) {
            EXPECT_NEAR(distance(q, pd.center()), pd.delta(), 1e-10 * pd.delta());
        } else if (m.tags[v] == BoundaryTag::outer_boundary) {
            EXPECT_NEAR(pd.domain().signed_distance(q), 0.0, 1e-8);
        }
    }
    // Every boundary edge joins two tagged vertices of the same kind.
    for (const auto& [a, b] : boundary_edges(m)) {
        EXPECT_TRUE(is_boundary(m.tags[a]) && m.tags[a] == m.tags[b]);
    }
}

}  // namespace

TEST(MeshStatistics, EquilateralTriangle) {
    const auto s = mesh_statistics(single_triangle({0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2.0}));
    EXPECT_NEAR(s.min_angle_deg, 60.0, 1e-10);
    EXPECT_EQ(s.n_triangles, 1u);
}

TEST(MeshStatistics, RightIsoscelesTriangle) {
    const auto s = mesh_statistics(single_triangle({0, 0}, {1, 0}, {0, 1}));
    EXPECT_NEAR(s.min_angle_deg, 45.0, 1e-10);
    EXPECT_NEAR(s.h_max, std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(s.h_min, 1.0, 1e-14);
}

TEST(GenerateMesh, ZeroRadiusHoleRejected) {
    EXPECT_THROW(generate_mesh(PuncturedDomain(SmoothDomain::disk(1.0), Hole{{0, 0}, 0.0}), 0.05, 4), GeometryError);
}

TEST(GenerateMesh, PreconditionsRejected) {
    const PuncturedDomain pd(SmoothDomain::disk(1.0), Hole{{0, 0}, 0.3});
    EXPECT_THROW(generate_mesh(pd, 0.4, 4), ConfigError);
    EXPECT_THROW(generate_mesh(pd, 0.05, 0.5), ConfigError);
    EXPECT_THROW(generate_mesh(pd, 0.05, 65), ConfigError);
}

TEST(GenerateMesh, DiskWithHoleInvariants) {
    const PuncturedDomain pd(SmoothDomain::disk(1.0), Hole{{0, 0}, 0.3});
    const Mesh m = generate_mesh(pd, 0.05, 4);
    expect_invariants(m, pd);
    EXPECT_GE(mesh_statistics(m).min_angle_deg, 20.0);
}

TEST(GenerateMesh, EllipseNearHoleResolution) {
    const PuncturedDomain pd(SmoothDomain::ellipse(1.4, 1.0), Hole{{0.0, 0.9}, 0.05});
    const Mesh m = generate_mesh(pd, 0.02, 8);
    expect_invariants(m, pd);
    EXPECT_GE(mesh_statistics(m).min_angle_deg, 20.0);
    double longest = 0.0;
    for (const auto& [a, b] : boundary_edges(m)) {
        if (m.tags[a] == BoundaryTag::hole_boundary) longest = std::max(longest, distance(m.vertices[a], m.vertices[b]));
    }
    EXPECT_GT(longest, 0.0);
    EXPECT_LE(longest, 0.005);
}

TEST(GenerateMesh, OffCenterHoleInvariants) {
    const PuncturedDomain pd(SmoothDomain::fourier_star(1.0, {{3, 0.1}}), Hole{{0.3, -0.2}, 0.15});
    expect_invariants(generate_mesh(pd, 0.05, 8), pd);
}

TEST(GenerateDomainMesh, DiskEdgeLengthBound) {
    const double h = 0.05;
    const Mesh m = generate_domain_mesh(SmoothDomain::disk(1.0), h);
    const auto s = mesh_statistics(m);
    EXPECT_LE(s.h_max, 1.5 * h);
    EXPECT_GE(s.min_angle_deg, 20.0);
    EXPECT_TRUE(check_mesh(m).ok());
}

TEST(GenerateMesh, RefinementAtLeastTriplesVertexCount) {
    const PuncturedDomain pd(SmoothDomain::disk(1.0), Hole{{0, 0}, 0.3});
    const auto coarse = generate_mesh(pd, 0.08, 4).num_vertices();
    const auto fine = generate_mesh(pd, 0.04, 4).num_vertices();
    EXPECT_GE(fine, 3 * coarse);
}

TEST(GenerateMesh, BitIdenticalForSameSeed) {
    const PuncturedDomain pd(SmoothDomain::ellipse(1.4, 1.0), Hole{{0.2, 0.3}, 0.2});
    const Mesh a = generate_mesh(pd, 0.05, 4, 99);
    const Mesh b = generate_mesh(pd, 0.05, 4, 99);
    ASSERT_EQ(a.num_vertices(), b.num_vertices());
    ASSERT_EQ(a.triangles, b.triangles);
    for (std::size_t i = 0; i < a.num_vertices(); ++i) {
        EXPECT_EQ(a.vertices[i].x, b.vertices[i].x);
        EXPECT_EQ(a.vertices[i].y, b.vertices[i].y);
    }
    EXPECT_EQ(a.tags, b.tags);
}

TEST(WriteVtk, LegacyAsciiLayout) {
    const Mesh m = single_triangle({0, 0}, {1, 0}, {0, 1});
    const std::vector<double> u{0.0, 0.5, 1.0};
    const VtkField f{"u", u};
    std::ostringstream os;
    write_vtk(os, m, std::span<const VtkField>(&f, 1));
    const std::string s = os.str();
    EXPECT_EQ(s.rfind("# vtk DataFile Version", 0), 0u);
    EXPECT_NE(s.find("ASCII"), std::string::npos);
    EXPECT_NE(s.find("DATASET UNSTRUCTURED_GRID"), std::string::npos);
    EXPECT_NE(s.find("POINTS 3"), std::string::npos);
    EXPECT_NE(s.find("CELLS 1 4"), std::string::npos);
    EXPECT_NE(s.find("CELL_TYPES 1\n5"), std::string::npos);
    EXPECT_NE(s.find("SCALARS boundary_tag"), std::string::npos);
    EXPECT_NE(s.find("SCALARS u"), std::string::npos);
}
