#pragma once

// Linear (P1) finite elements on triangle meshes: assembly, point location,
// Dirichlet harmonic solves and gradient recovery.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "holeopt/errors.hpp"
#include "holeopt/mesh.hpp"
#include "holeopt/vec2.hpp"

namespace holeopt {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Element stiffness of the P1 basis on a counterclockwise triangle.
inline std::array<std::array<double, 3>, 3> element_stiffness(Vec2 a, Vec2 b, Vec2 c) {
    const std::array<Vec2, 3> p{a, b, c};
    const double area = 0.5 * cross(b - a, c - a);
    std::array<Vec2, 3> g;  // edge vectors opposite each vertex, rotated: grad phi_i = perp(e_i) / (2 area)
    for (int i = 0; i < 3; ++i) g[i] = p[(i + 2) % 3] - p[(i + 1) % 3];
    std::array<std::array<double, 3>, 3> k{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) k[i][j] = dot(g[i], g[j]) / (4.0 * area);
    }
    return k;
}

/// Consistent element mass: area/6 on the diagonal, area/12 off it.
inline std::array<std::array<double, 3>, 3> element_mass(Vec2 a, Vec2 b, Vec2 c) {
    const double area = 0.5 * cross(b - a, c - a);
    std::array<std::array<double, 3>, 3> m{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) m[i][j] = area * (i == j ? 1.0 / 6.0 : 1.0 / 12.0);
    }
    return m;
}

/// Gradient of the P1 interpolant of `u` on triangle t.
inline Vec2 triangle_gradient(const Mesh& m, std::size_t t, std::span<const double> u) {
    const auto& tr = m.triangles[t];
    const Vec2 a = m.vertices[tr[0]], b = m.vertices[tr[1]], c = m.vertices[tr[2]];
    const double two_area = cross(b - a, c - a);
    const std::array<Vec2, 3> e{c - b, a - c, b - a};
    Vec2 g{};
    for (int i = 0; i < 3; ++i) g += u[tr[i]] * perp(e[i]);
    return g / two_area;
}

/// Global stiffness and mass over all vertices, plus the interior numbering.
struct FemSystem {
    SparseMatrix K;  ///< all vertices
    SparseMatrix M;  ///< all vertices
    std::vector<int> dof;       ///< vertex -> interior index, -1 on tagged vertices
    std::vector<int> free_vertices;
    SparseMatrix K_ii;
    SparseMatrix M_ii;
    SparseMatrix K_ib;          ///< interior rows, boundary columns (boundary indexed by vertex)
};

inline FemSystem assemble(const Mesh& m) {
    const int n = int(m.vertices.size());
    FemSystem s;
    s.dof.assign(n, -1);
    for (int v = 0; v < n; ++v) {
        if (!is_boundary(m.tags[v])) {
            s.dof[v] = int(s.free_vertices.size());
            s.free_vertices.push_back(v);
        }
    }
    std::vector<Eigen::Triplet<double>> tk, tm, tki, tmi, tkb;
    tk.reserve(9 * m.triangles.size());
    tm.reserve(9 * m.triangles.size());
    for (const auto& tr : m.triangles) {
        const Vec2 a = m.vertices[tr[0]], b = m.vertices[tr[1]], c = m.vertices[tr[2]];
        const auto ke = element_stiffness(a, b, c);
        const auto me = element_mass(a, b, c);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                tk.emplace_back(tr[i], tr[j], ke[i][j]);
                tm.emplace_back(tr[i], tr[j], me[i][j]);
                const int di = s.dof[tr[i]], dj = s.dof[tr[j]];
                if (di >= 0 && dj >= 0) {
                    tki.emplace_back(di, dj, ke[i][j]);
                    tmi.emplace_back(di, dj, me[i][j]);
                } else if (di >= 0) {
                    tkb.emplace_back(di, tr[j], ke[i][j]);
                }
            }
        }
    }
    const int ni = int(s.free_vertices.size());
    s.K.resize(n, n);
    s.M.resize(n, n);
    s.K_ii.resize(ni, ni);
    s.M_ii.resize(ni, ni);
    s.K_ib.resize(ni, n);
    s.K.setFromTriplets(tk.begin(), tk.end());
    s.M.setFromTriplets(tm.begin(), tm.end());
    s.K_ii.setFromTriplets(tki.begin(), tki.end());
    s.M_ii.setFromTriplets(tmi.begin(), tmi.end());
    s.K_ib.setFromTriplets(tkb.begin(), tkb.end());
    return s;
}

/// Bucket grid over triangle bounding boxes for point location.
class MeshLocator {
public:
    explicit MeshLocator(const Mesh& m) : mesh_(&m) {
        lo_ = hi_ = m.vertices.empty() ? Vec2{} : m.vertices[0];
        for (const auto& v : m.vertices) {
            lo_ = {std::min(lo_.x, v.x), std::min(lo_.y, v.y)};
            hi_ = {std::max(hi_.x, v.x), std::max(hi_.y, v.y)};
        }
        const double span = std::max({hi_.x - lo_.x, hi_.y - lo_.y, 1e-300});
        const int cells = std::max(1, int(std::sqrt(double(m.triangles.size()) / 2.0)));
        cell_ = span / cells * (1.0 + 1e-9);
        nx_ = std::max(1, int(std::ceil((hi_.x - lo_.x) / cell_)) + 1);
        ny_ = std::max(1, int(std::ceil((hi_.y - lo_.y) / cell_)) + 1);
        start_.assign(std::size_t(nx_) * ny_ + 1, 0);
        auto range = [&](std::size_t t, auto&& f) {
            const auto& tr = m.triangles[t];
            Vec2 a = m.vertices[tr[0]], b = a;
            for (int k = 1; k < 3; ++k) {
                const Vec2 q = m.vertices[tr[k]];
                a = {std::min(a.x, q.x), std::min(a.y, q.y)};
                b = {std::max(b.x, q.x), std::max(b.y, q.y)};
            }
            const int i0 = cx(a.x), i1 = cx(b.x), j0 = cy(a.y), j1 = cy(b.y);
            for (int j = j0; j <= j1; ++j) {
                for (int i = i0; i <= i1; ++i) f(std::size_t(j) * nx_ + i);
            }
        };
        for (std::size_t t = 0; t < m.triangles.size(); ++t) range(t, [&](std::size_t c) { ++start_[c + 1]; });
        for (std::size_t c = 1; c < start_.size(); ++c) start_[c] += start_[c - 1];
        items_.resize(start_.back());
        std::vector<int> fill(start_.begin(), start_.end() - 1);
        for (std::size_t t = 0; t < m.triangles.size(); ++t) range(t, [&](std::size_t c) { items_[fill[c]++] = int(t); });
    }

    struct Hit {
        int triangle = -1;
        std::array<double, 3> bary{};
    };

    /// Containing triangle with barycentric coordinates; triangle = -1 when outside.
    Hit locate(Vec2 q) const {
        Hit best;
        if (q.x < lo_.x || q.y < lo_.y || q.x > hi_.x || q.y > hi_.y) return best;
        const std::size_t c = std::size_t(cy(q.y)) * nx_ + cx(q.x);
        double best_min = -std::numeric_limits<double>::infinity();
        for (int k = start_[c]; k < start_[c + 1]; ++k) {
            const int t = items_[k];
            const auto& tr = mesh_->triangles[t];
            const Vec2 a = mesh_->vertices[tr[0]], b = mesh_->vertices[tr[1]], cc = mesh_->vertices[tr[2]];
            const double area2 = cross(b - a, cc - a);
            std::array<double, 3> l{cross(b - q, cc - q) / area2, cross(cc - q, a - q) / area2, 0.0};
            l[2] = 1.0 - l[0] - l[1];
            const double mn = std::min({l[0], l[1], l[2]});
            if (mn > best_min) {
                best_min = mn;
                best.triangle = t;
                best.bary = l;
            }
            if (mn >= 0.0) return best;
        }
        if (best_min < -1e-12) best.triangle = -1;
        return best;
    }

    const Mesh& mesh() const { return *mesh_; }

private:
    int cx(double x) const { return std::clamp(int((x - lo_.x) / cell_), 0, nx_ - 1); }
    int cy(double y) const { return std::clamp(int((y - lo_.y) / cell_), 0, ny_ - 1); }

    const Mesh* mesh_;
    Vec2 lo_, hi_;
    double cell_ = 1.0;
    int nx_ = 1, ny_ = 1;
    std::vector<int> start_;
    std::vector<int> items_;
};

/// P1 interpolation of nodal values; throws OutsideMesh.
inline double interpolate(const MeshLocator& loc, std::span<const double> u, Vec2 q) {
    const auto hit = loc.locate(q);
    if (hit.triangle < 0) throw OutsideMesh("point (" + std::to_string(q.x) + ", " + std::to_string(q.y) + ") is outside the mesh");
    const auto& tr = loc.mesh().triangles[hit.triangle];
    return hit.bary[0] * u[tr[0]] + hit.bary[1] * u[tr[1]] + hit.bary[2] * u[tr[2]];
}

/// Area-weighted average of element gradients around each vertex.
inline std::vector<Vec2> recovered_gradient(const Mesh& m, std::span<const double> u) {
    std::vector<Vec2> g(m.vertices.size());
    std::vector<double> w(m.vertices.size(), 0.0);
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const Vec2 gt = triangle_gradient(m, t, u);
        const double a = m.signed_area(t);
        for (int v : m.triangles[t]) {
            g[v] += a * gt;
            w[v] += a;
        }
    }
    for (std::size_t v = 0; v < g.size(); ++v) {
        if (w[v] > 0.0) g[v] = g[v] / w[v];
    }
    return g;
}

/// Gradient at q averaged over the patch of the containing triangle's vertices.
inline Vec2 patch_gradient(const MeshLocator& loc, std::span<const Vec2> nodal_grad, Vec2 q) {
    const auto hit = loc.locate(q);
    if (hit.triangle < 0) throw OutsideMesh("gradient probe outside the mesh");
    const auto& tr = loc.mesh().triangles[hit.triangle];
    return hit.bary[0] * nodal_grad[tr[0]] + hit.bary[1] * nodal_grad[tr[1]] + hit.bary[2] * nodal_grad[tr[2]];
}

/// Solves the discrete Laplace equation with Dirichlet data on every tagged vertex.
inline std::vector<double> solve_harmonic(const Mesh& m, const FemSystem& sys, const std::function<double(int)>& boundary_value) {
    const int n = int(m.vertices.size());
    std::vector<double> v(n, 0.0);
    Vector vb = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        if (sys.dof[i] < 0) {
            v[i] = boundary_value(i);
            vb[i] = v[i];
        }
    }
    if (sys.free_vertices.empty()) return v;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(sys.K_ii);
    if (ldlt.info() != Eigen::Success) throw Error("harmonic solve: stiffness factorization failed");
    const Vector rhs = -(sys.K_ib * vb);
    const Vector x = ldlt.solve(rhs);
    for (std::size_t k = 0; k < sys.free_vertices.size(); ++k) v[sys.free_vertices[k]] = x[Eigen::Index(k)];
    return v;
}

/// Normal derivative on the boundary recovered from the weak-form residual
/// r = K u - lambda M u. Returns, per vertex, the derivative along the normal
/// pointing into the meshed region (zero at interior vertices). The boundary
/// mass system is assembled over all one-sided edges.
inline std::vector<double> consistent_flux(const Mesh& m, const FemSystem& sys, std::span<const double> u, double lambda) {
    const int n = int(m.vertices.size());
    Eigen::Map<const Vector> uu(u.data(), n);
    const Vector r = sys.K * uu - lambda * (sys.M * uu);
    std::vector<int> bidx(n, -1);
    std::vector<int> bverts;
    std::vector<Eigen::Triplet<double>> tb;
    for (const auto& [a, b] : boundary_edges(m)) {
        for (int v : {a, b}) {
            if (bidx[v] < 0) {
                bidx[v] = int(bverts.size());
                bverts.push_back(v);
            }
        }
        const double len = distance(m.vertices[a], m.vertices[b]);
        const int ia = bidx[a], ib = bidx[b];
        tb.emplace_back(ia, ia, len / 3.0);
        tb.emplace_back(ib, ib, len / 3.0);
        tb.emplace_back(ia, ib, len / 6.0);
        tb.emplace_back(ib, ia, len / 6.0);
    }
    const int nb = int(bverts.size());
    SparseMatrix mb(nb, nb);
    mb.setFromTriplets(tb.begin(), tb.end());
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(mb);
    if (ldlt.info() != Eigen::Success) throw SingularBoundaryMass("boundary mass matrix is singular");
    Vector rb(nb);
    for (int k = 0; k < nb; ++k) rb[k] = -r[bverts[k]];
    const Vector g = ldlt.solve(rb);
    if (ldlt.info() != Eigen::Success || !g.allFinite()) throw SingularBoundaryMass("boundary mass solve failed");
    std::vector<double> out(n, 0.0);
    for (int k = 0; k < nb; ++k) out[bverts[k]] = g[k];
    return out;
}

}  // namespace holeopt
