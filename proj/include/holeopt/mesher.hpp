#pragma once

// Signed-distance driven point relaxation (distmesh style) with fixed boundary
// nodes, plus the builders for punctured and unpunctured smooth domains.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "holeopt/delaunay.hpp"
#include "holeopt/errors.hpp"
#include "holeopt/geometry.hpp"
#include "holeopt/mesh.hpp"
#include "holeopt/vec2.hpp"

namespace holeopt {

/// Parametric boundary piece; nodes are placed on curve(t) for t in [t0, t1).
struct BoundaryPiece {
    std::function<Vec2(double)> curve;
    double t0 = 0.0;
    double t1 = 1.0;
    BoundaryTag tag = BoundaryTag::outer_boundary;
};

/// Closed chain of pieces; the end of each piece is the start of the next.
struct BoundaryLoop {
    std::vector<BoundaryPiece> pieces;
};

/// Everything the relaxation needs to know about a region.
struct MeshRegion {
    std::function<double(Vec2)> sd;    ///< negative inside
    std::function<double(Vec2)> size;  ///< desired local edge length
    double size_lipschitz = 0.0;
    double size_min = 0.0;
    Vec2 lo, hi;
    std::vector<BoundaryLoop> loops;
};

struct MesherOptions {
    double target_h = 0.1;          ///< termination scale
    int max_iter = 500;
    int stall_window = 40;          ///< stop once displacement has not improved for this many iterations
    double min_angle_deg = 20.0;
    std::uint64_t seed = 20240611;
    double dt = 0.2;
    double fscale = 1.2;
    double move_tol = 1e-3;         ///< stop when max displacement < move_tol * target_h
};

/// Diagnostics of a relaxation run.
struct MesherReport {
    int iterations = 0;
    int retriangulations = 0;
    bool converged = false;
    bool stalled = false;
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; independent of the library's distributions.
inline double unit_random(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

struct PlacedNodes {
    std::vector<Vec2> points;
    std::vector<BoundaryTag> tags;
    std::vector<std::pair<int, int>> edges;  // consecutive nodes along loops
};

inline PlacedNodes place_boundary_nodes(const MeshRegion& region) {
    PlacedNodes out;
    for (const auto& loop : region.loops) {
        const int loop_start = int(out.points.size());
        for (const auto& piece : loop.pieces) {
            // Cumulative integral of ds / h along the piece.
            const int m = 4096;
            std::vector<double> cum(m + 1, 0.0);
            Vec2 prev = piece.curve(piece.t0);
            for (int i = 1; i <= m; ++i) {
                const double t = piece.t0 + (piece.t1 - piece.t0) * i / m;
                const Vec2 cur = piece.curve(t);
                const Vec2 mid = piece.curve(piece.t0 + (piece.t1 - piece.t0) * (i - 0.5) / m);
                cum[i] = cum[i - 1] + distance(prev, cur) / region.size(mid);
                prev = cur;
            }
            const bool closed_single = loop.pieces.size() == 1;
            int n = std::max(1, int(std::lround(cum[m])));
            if (closed_single) n = std::max(n, 8);
            for (int k = 0; k < n; ++k) {
                const double target = cum[m] * k / n;
                auto it = std::lower_bound(cum.begin(), cum.end(), target);
                int i = int(it - cum.begin());
                double t;
                if (i == 0) {
                    t = piece.t0;
                } else {
                    const double frac = (target - cum[i - 1]) / (cum[i] - cum[i - 1]);
                    t = piece.t0 + (piece.t1 - piece.t0) * (i - 1 + frac) / m;
                }
                out.points.push_back(piece.curve(t));
                out.tags.push_back(piece.tag);
            }
        }
        const int loop_end = int(out.points.size());
        for (int i = loop_start; i < loop_end; ++i) {
            out.edges.emplace_back(i, i + 1 < loop_end ? i + 1 : loop_start);
        }
    }
    return out;
}

inline std::vector<Vec2> initial_interior_points(const MeshRegion& region, std::mt19937_64& rng) {
    std::vector<Vec2> pts;
    const Vec2 ext = region.hi - region.lo;
    const double tile = std::max(8.0 * region.size_min, std::max(ext.x, ext.y) / 256.0);
    const int nx = std::max(1, int(std::ceil(ext.x / tile)));
    const int ny = std::max(1, int(std::ceil(ext.y / tile)));
    const double half_diag = 0.5 * tile * std::sqrt(2.0);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Vec2 t0 = region.lo + Vec2{i * tile, j * tile};
            const Vec2 c = t0 + Vec2{0.5 * tile, 0.5 * tile};
            const double h_lo = std::max(region.size_min, region.size(c) - region.size_lipschitz * half_diag);
            const double dy = h_lo * std::sqrt(3.0) / 2.0;
            if (dy > 0.5 * tile) {
                // Coarser than the tile: scatter the expected number of points.
                const double expected = tile * tile / (h_lo * dy);
                int count = int(expected);
                if (unit_random(rng) < expected - count) ++count;
                for (int k = 0; k < count; ++k) {
                    const Vec2 q = t0 + Vec2{unit_random(rng) * tile, unit_random(rng) * tile};
                    const double h = region.size(q);
                    if (unit_random(rng) >= (h_lo / h) * (h_lo / h)) continue;
                    if (region.sd(q) < -0.5 * h) pts.push_back(q);
                }
                continue;
            }
            const int rows = int(std::ceil(tile / dy));
            const int cols = int(std::ceil(tile / h_lo)) + 1;
            for (int r = 0; r < rows; ++r) {
                const double y = t0.y + (r + 0.5) * dy;
                if (y >= t0.y + tile) break;
                for (int s = 0; s < cols; ++s) {
                    const double x = t0.x + (s + 0.25 + 0.5 * (r % 2)) * h_lo;
                    if (x >= t0.x + tile) break;
                    const Vec2 q{x, y};
                    const double h = region.size(q);
                    const double keep = (h_lo / h) * (h_lo / h);
                    if (unit_random(rng) >= keep) continue;
                    if (region.sd(q) < -0.5 * h) pts.push_back(q);
                }
            }
        }
    }
    return pts;
}

inline Vec2 sd_gradient(const MeshRegion& region, Vec2 q, double eps) {
    const double gx = region.sd(q + Vec2{eps, 0.0}) - region.sd(q - Vec2{eps, 0.0});
    const double gy = region.sd(q + Vec2{0.0, eps}) - region.sd(q - Vec2{0.0, eps});
    const Vec2 g{gx / (2 * eps), gy / (2 * eps)};
    const double n = norm(g);
    return n > 0.0 ? g / n : Vec2{};
}

template <class Retriangulate>
void improve_angles(std::vector<Vec2>& P, int nfix, const std::vector<std::array<int, 3>>& tris, double goal_deg,
                    Retriangulate&& retriangulate) {
    const int n = int(P.size());
    for (int sweep = 0; sweep < 20; ++sweep) {
        std::vector<std::vector<int>> star(n);
        for (int t = 0; t < int(tris.size()); ++t) {
            for (int k = 0; k < 3; ++k) star[tris[t][k]].push_back(t);
        }
        auto star_quality = [&](int v, Vec2 q) {
            double worst = 180.0;
            for (int t : star[v]) {
                std::array<Vec2, 3> c{P[tris[t][0]], P[tris[t][1]], P[tris[t][2]]};
                for (int k = 0; k < 3; ++k) {
                    if (tris[t][k] == v) c[k] = q;
                }
                if (cross(c[1] - c[0], c[2] - c[0]) <= 0.0) return -1.0;
                worst = std::min(worst, triangle_min_angle_deg(c[0], c[1], c[2]));
            }
            return worst;
        };
        std::vector<char> bad(n, 0);
        bool any = false;
        for (const auto& t : tris) {
            if (triangle_min_angle_deg(P[t[0]], P[t[1]], P[t[2]]) >= goal_deg) continue;
            for (int v : t) {
                if (v >= nfix) { bad[v] = 1; any = true; }
            }
        }
        if (!any) return;
        bool changed = false;
        for (int v = nfix; v < n; ++v) {
            if (!bad[v] || star[v].empty()) continue;
            Vec2 centroid{};
            int cnt = 0;
            for (int t : star[v]) {
                for (int w : tris[t]) {
                    if (w != v) { centroid += P[w]; ++cnt; }
                }
            }
            centroid = centroid / double(cnt);
            const double q0 = star_quality(v, P[v]);
            double best_q = q0;
            Vec2 best = P[v];
            for (double w : {1.0, 0.5, 0.25}) {
                const Vec2 cand = P[v] + w * (centroid - P[v]);
                const double q = star_quality(v, cand);
                if (q > best_q + 1e-9) { best_q = q; best = cand; }
            }
            if (!(best == P[v])) { P[v] = best; changed = true; }
        }
        if (!changed) return;
        retriangulate();
    }
}

}  // namespace detail

/// Relaxes interior points against fixed boundary nodes and returns the
/// triangulation. Throws MeshFailure if the boundary is not recovered or the
/// minimum angle bound is unmet after `max_iter` iterations.
inline Mesh relax_mesh(const MeshRegion& region, const MesherOptions& opt, MesherReport* report = nullptr) {
    std::mt19937_64 rng(opt.seed);
    const detail::PlacedNodes boundary = detail::place_boundary_nodes(region);
    const int nfix = int(boundary.points.size());
    std::vector<Vec2> P = boundary.points;
    {
        auto inner = detail::initial_interior_points(region, rng);
        P.insert(P.end(), inner.begin(), inner.end());
    }
    int n = int(P.size());

    std::vector<double> h(n);
    std::vector<double> sd_cache(n, -1.0);
    std::vector<double> moved(n, 0.0);
    for (int i = nfix; i < n; ++i) {
        h[i] = region.size(P[i]);
        sd_cache[i] = region.sd(P[i]);
    }

    std::vector<std::array<int, 3>> tris;
    std::vector<std::pair<int, int>> edges;
    std::vector<Vec2> P_at_tri;
    MesherReport rep;

    auto triangulate = [&]() {
        Delaunay dt(P);
        tris.clear();
        for (const auto& t : dt.triangles()) {
            if (t[0] >= nfix && t[1] >= nfix && t[2] >= nfix) {
                tris.push_back(t);
                continue;
            }
            const Vec2 c = (P[t[0]] + P[t[1]] + P[t[2]]) / 3.0;
            if (region.sd(c) < -1e-3 * region.size(c)) tris.push_back(t);
        }
        edges.clear();
        edges.reserve(tris.size() * 3);
        for (const auto& t : tris) {
            for (int e = 0; e < 3; ++e) edges.push_back(std::minmax(t[e], t[(e + 1) % 3]));
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        P_at_tri = P;
        ++rep.retriangulations;
    };

    auto min_angle = [&]() {
        double best = 180.0;
        for (const auto& t : tris) best = std::min(best, triangle_min_angle_deg(P[t[0]], P[t[1]], P[t[2]]));
        return best;
    };

    triangulate();
    std::vector<Vec2> force(n);
    double best_move = std::numeric_limits<double>::infinity();
    int best_it = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        rep.iterations = it + 1;
        double sum_l2 = 0.0, sum_h2 = 0.0;
        std::vector<double> len(edges.size()), hbar(edges.size());
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const Vec2 a = P[edges[e].first], b = P[edges[e].second];
            len[e] = distance(a, b);
            hbar[e] = region.size(0.5 * (a + b));
            sum_l2 += len[e] * len[e];
            sum_h2 += hbar[e] * hbar[e];
        }
        const double scale = opt.fscale * std::sqrt(sum_l2 / sum_h2);
        // Density control: drop free points on edges far shorter than desired.
        if (it > 0 && it % 30 == 0 && it < opt.max_iter / 2) {
            std::vector<char> drop(n, 0);
            bool any = false;
            for (std::size_t e = 0; e < edges.size(); ++e) {
                if (hbar[e] * scale > 2.0 * len[e]) {
                    for (int v : {edges[e].first, edges[e].second}) {
                        if (v >= nfix) { drop[v] = 1; any = true; }
                    }
                }
            }
            if (any) {
                int w = nfix;
                for (int i = nfix; i < n; ++i) {
                    if (drop[i]) continue;
                    P[w] = P[i]; h[w] = h[i]; sd_cache[w] = sd_cache[i]; moved[w] = moved[i];
                    ++w;
                }
                n = w;
                P.resize(n); h.resize(n); sd_cache.resize(n); moved.resize(n);
                force.resize(n);
                triangulate();
                continue;
            }
        }
        std::fill(force.begin(), force.end(), Vec2{});
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const double l0 = hbar[e] * scale;
            const double f = std::max(l0 - len[e], 0.0) / len[e];
            const Vec2 fv = f * (P[edges[e].first] - P[edges[e].second]);
            force[edges[e].first] += fv;
            force[edges[e].second] -= fv;
        }
        double max_move = 0.0, max_rel_drift = 0.0;
        for (int i = nfix; i < n; ++i) {
            const Vec2 before = P[i];
            const Vec2 step = opt.dt * force[i];
            P[i] += step;
            moved[i] += norm(step);
            h[i] = region.size(P[i]);
            if (sd_cache[i] + moved[i] > -0.35 * h[i]) {
                double d = region.sd(P[i]);
                if (d > -0.3 * h[i]) {
                    const Vec2 g = detail::sd_gradient(region, P[i], 1e-7 * std::max(h[i], 1e-12));
                    P[i] -= (d + 0.3 * h[i]) * g;
                    d = region.sd(P[i]);
                }
                sd_cache[i] = d;
                moved[i] = 0.0;
            }
            max_move = std::max(max_move, distance(P[i], before));
            max_rel_drift = std::max(max_rel_drift, distance(P[i], P_at_tri[i]) / h[i]);
        }
        if (max_move < opt.move_tol * opt.target_h) {
            rep.converged = true;
            break;
        }
        if (max_move < best_move) {
            best_move = max_move;
            best_it = it;
        } else if (it - best_it >= opt.stall_window) {
            rep.stalled = true;
            break;
        }
        if (max_rel_drift > 0.1) triangulate();
    }
    triangulate();
    detail::improve_angles(P, nfix, tris, opt.min_angle_deg + 5.0, triangulate);

    Mesh mesh;
    mesh.vertices = P;
    mesh.triangles = tris;
    mesh.tags.assign(n, BoundaryTag::interior);
    for (int i = 0; i < nfix; ++i) mesh.tags[i] = boundary.tags[i];
    mesh.target_h = opt.target_h;

    // Boundary recovery: the one-sided edges must be exactly the loop edges.
    {
        std::vector<std::pair<int, int>> expected;
        for (auto e : boundary.edges) expected.push_back(std::minmax(e.first, e.second));
        std::sort(expected.begin(), expected.end());
        std::vector<std::pair<int, int>> found;
        for (auto e : boundary_edges(mesh)) found.push_back(std::minmax(e.first, e.second));
        std::sort(found.begin(), found.end());
        if (found != expected) throw MeshFailure("mesher: boundary edges were not recovered by the triangulation");
    }
    const double worst = min_angle();
    if (worst < opt.min_angle_deg) {
        std::ostringstream os;
        os << "mesher: minimum angle " << worst << " deg below " << opt.min_angle_deg << " after "
           << rep.iterations << " iterations";
        throw MeshFailure(os.str());
    }
    if (report) *report = rep;
    return mesh;
}

/// Sizing used around a hole: target_h * min(1, dist(q, circle)/(4 delta) + 1/factor).
inline double hole_size_field(Vec2 q, Vec2 center, double delta, double target_h, double factor) {
    const double a = std::max(0.0, distance(q, center) - delta);
    return target_h * std::min(1.0, a / (4.0 * delta) + 1.0 / factor);
}

/// Mesh of the punctured domain with graded refinement toward the hole.
inline Mesh generate_mesh(const PuncturedDomain& pd, double target_h, double hole_refine_factor,
                          std::uint64_t seed = 20240611, MesherReport* report = nullptr) {
    if (!(pd.clearance() > 0.0)) throw GeometryError("generate_mesh: hole is not inside the domain");
    if (!(target_h > 0.0 && target_h < pd.delta())) throw ConfigError("generate_mesh: target_h must lie in (0, delta)");
    if (!(hole_refine_factor >= 1.0 && hole_refine_factor <= 64.0)) {
        throw ConfigError("generate_mesh: hole_refine_factor must lie in [1, 64]");
    }
    const SmoothDomain& dom = pd.domain();
    const Vec2 p = pd.center();
    const double delta = pd.delta();

    MeshRegion region;
    region.sd = [&dom, p, delta](Vec2 q) { return std::max(dom.signed_distance(q), delta - distance(q, p)); };
    region.size = [=](Vec2 q) { return hole_size_field(q, p, delta, target_h, hole_refine_factor); };
    region.size_lipschitz = target_h / (4.0 * delta);
    region.size_min = target_h / hole_refine_factor;
    region.lo = dom.bbox_lo();
    region.hi = dom.bbox_hi();
    region.loops.push_back(BoundaryLoop{{BoundaryPiece{[&dom](double t) { return dom.point(t); }, 0.0, kTwoPi,
                                                       BoundaryTag::outer_boundary}}});
    region.loops.push_back(BoundaryLoop{{BoundaryPiece{[p, delta](double t) { return p + delta * unit_at(t); }, 0.0,
                                                       kTwoPi, BoundaryTag::hole_boundary}}});
    MesherOptions opt;
    opt.target_h = target_h;
    opt.seed = seed;
    Mesh m = relax_mesh(region, opt, report);
    m.hole_h = target_h / hole_refine_factor;
    m.hole_center = p;
    m.hole_radius = delta;
    return m;
}

/// Quasi-uniform mesh of the domain without a hole.
inline Mesh generate_domain_mesh(const SmoothDomain& dom, double target_h, std::uint64_t seed = 20240611,
                                 MesherReport* report = nullptr) {
    if (!(target_h > 0.0)) throw ConfigError("generate_domain_mesh: target_h must be positive");
    MeshRegion region;
    region.sd = [&dom](Vec2 q) { return dom.signed_distance(q); };
    region.size = [target_h](Vec2) { return target_h; };
    region.size_lipschitz = 0.0;
    region.size_min = target_h;
    region.lo = dom.bbox_lo();
    region.hi = dom.bbox_hi();
    region.loops.push_back(BoundaryLoop{{BoundaryPiece{[&dom](double t) { return dom.point(t); }, 0.0, kTwoPi,
                                                       BoundaryTag::outer_boundary}}});
    MesherOptions opt;
    opt.target_h = target_h;
    opt.seed = seed;
    Mesh m = relax_mesh(region, opt, report);
    m.hole_h = 0.0;
    return m;
}

}  // namespace holeopt
