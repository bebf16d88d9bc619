#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "holeopt/errors.hpp"
#include "holeopt/vec2.hpp"

namespace holeopt {

/// Per-vertex boundary classification. floor/top are used by the model problems.
enum class BoundaryTag : std::uint8_t { interior = 0, outer_boundary = 1, hole_boundary = 2, floor = 3, top = 4 };

inline bool is_boundary(BoundaryTag t) { return t != BoundaryTag::interior; }

/// Conforming triangulation with counterclockwise triangles.
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryTag> tags;
    double target_h = 0.0;
    double hole_h = 0.0;
    Vec2 hole_center;          ///< circle whose vertices carry the hole_boundary tag
    double hole_radius = 0.0;  ///< 0 when the mesh has no hole

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_triangles() const { return triangles.size(); }

    double signed_area(std::size_t t) const {
        const auto& tr = triangles[t];
        return 0.5 * cross(vertices[tr[1]] - vertices[tr[0]], vertices[tr[2]] - vertices[tr[0]]);
    }
};

struct MeshStatistics {
    std::size_t n_vertices = 0;
    std::size_t n_triangles = 0;
    double min_angle_deg = 0.0;
    double max_aspect = 0.0;  ///< longest edge / shortest altitude
    double h_max = 0.0;       ///< longest edge
    double h_min = 0.0;       ///< shortest edge
    double min_area = 0.0;
};

inline double triangle_min_angle_deg(Vec2 a, Vec2 b, Vec2 c) {
    const std::array<Vec2, 3> p{a, b, c};
    double best = 180.0;
    for (int i = 0; i < 3; ++i) {
        const Vec2 u = p[(i + 1) % 3] - p[i], v = p[(i + 2) % 3] - p[i];
        const double ang = std::atan2(std::abs(cross(u, v)), dot(u, v)) * 180.0 / kPi;
        best = std::min(best, ang);
    }
    return best;
}

inline MeshStatistics mesh_statistics(const Mesh& m) {
    MeshStatistics s;
    s.n_vertices = m.vertices.size();
    s.n_triangles = m.triangles.size();
    if (m.triangles.empty()) return s;
    s.min_angle_deg = 180.0;
    s.h_min = std::numeric_limits<double>::max();
    s.min_area = std::numeric_limits<double>::max();
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tr = m.triangles[t];
        const Vec2 a = m.vertices[tr[0]], b = m.vertices[tr[1]], c = m.vertices[tr[2]];
        s.min_angle_deg = std::min(s.min_angle_deg, triangle_min_angle_deg(a, b, c));
        const double l0 = distance(a, b), l1 = distance(b, c), l2 = distance(c, a);
        const double lmax = std::max({l0, l1, l2});
        s.h_max = std::max(s.h_max, lmax);
        s.h_min = std::min({s.h_min, l0, l1, l2});
        const double area = m.signed_area(t);
        s.min_area = std::min(s.min_area, area);
        const double altitude = 2.0 * std::abs(area) / lmax;
        s.max_aspect = std::max(s.max_aspect, lmax / altitude);
    }
    return s;
}

/// Undirected edge -> number of incident triangles.
inline std::map<std::pair<int, int>, int> edge_incidence(const Mesh& m) {
    std::map<std::pair<int, int>, int> count;
    for (const auto& tr : m.triangles) {
        for (int e = 0; e < 3; ++e) {
            int a = tr[e], b = tr[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            ++count[{a, b}];
        }
    }
    return count;
}

/// Edges that belong to exactly one triangle, oriented as in that triangle.
inline std::vector<std::pair<int, int>> boundary_edges(const Mesh& m) {
    std::map<std::pair<int, int>, std::pair<int, int>> seen;  // key -> (count, oriented first)
    std::map<std::pair<int, int>, std::pair<int, int>> oriented;
    for (const auto& tr : m.triangles) {
        for (int e = 0; e < 3; ++e) {
            const int a = tr[e], b = tr[(e + 1) % 3];
            const auto key = std::minmax(a, b);
            auto& s = seen[{key.first, key.second}];
            ++s.first;
            oriented[{key.first, key.second}] = {a, b};
        }
    }
    std::vector<std::pair<int, int>> out;
    for (const auto& [key, s] : seen) {
        if (s.first == 1) out.push_back(oriented[key]);
    }
    return out;
}

/// Outcome of the structural checks; empty `problem` means valid.
struct MeshCheck {
    std::string problem;
    bool ok() const { return problem.empty(); }
};

/// Positive area, conformity (edges shared by <= 2 triangles; boundary edges join
/// boundary vertices) and the minimum angle bound.
inline MeshCheck check_mesh(const Mesh& m, double min_angle_deg = 20.0) {
    if (m.tags.size() != m.vertices.size()) return {"tag count differs from vertex count"};
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        for (int k = 0; k < 3; ++k) {
            const int v = m.triangles[t][k];
            if (v < 0 || std::size_t(v) >= m.vertices.size()) return {"triangle references a missing vertex"};
        }
        if (!(m.signed_area(t) >= 1e-14)) return {"triangle with non-positive or tiny area"};
    }
    for (const auto& [edge, n] : edge_incidence(m)) {
        if (n > 2) return {"edge shared by more than two triangles"};
        if (n == 1 && (!is_boundary(m.tags[edge.first]) || !is_boundary(m.tags[edge.second]))) {
            return {"boundary edge touches an interior vertex"};
        }
    }
    const auto st = mesh_statistics(m);
    if (st.min_angle_deg < min_angle_deg) return {"minimum angle " + std::to_string(st.min_angle_deg) + " deg below bound"};
    return {};
}

/// Nodal scalar field attached to a VTK export.
struct VtkField {
    std::string name;
    std::span<const double> values;
};

/// Legacy ASCII VTK unstructured grid (triangles are cell type 5) with a
/// `boundary_tag` point field plus any extra point fields.
inline void write_vtk(std::ostream& os, const Mesh& m, std::span<const VtkField> fields = {}) {
    os << "# vtk DataFile Version 3.0\n";
    os << "holeopt mesh\n";
    os << "ASCII\n";
    os << "DATASET UNSTRUCTURED_GRID\n";
    os.precision(17);
    os << "POINTS " << m.vertices.size() << " double\n";
    for (const auto& v : m.vertices) os << v.x << ' ' << v.y << " 0\n";
    os << "CELLS " << m.triangles.size() << ' ' << 4 * m.triangles.size() << '\n';
    for (const auto& t : m.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    os << "CELL_TYPES " << m.triangles.size() << '\n';
    for (std::size_t t = 0; t < m.triangles.size(); ++t) os << "5\n";
    os << "POINT_DATA " << m.vertices.size() << '\n';
    os << "SCALARS boundary_tag int 1\nLOOKUP_TABLE default\n";
    for (auto tag : m.tags) os << int(tag) << '\n';
    for (const auto& f : fields) {
        if (f.values.size() != m.vertices.size()) throw Error("VTK field '" + f.name + "' has wrong length");
        os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : f.values) os << v << '\n';
    }
}

}  // namespace holeopt
