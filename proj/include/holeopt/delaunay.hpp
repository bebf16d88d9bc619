#pragma once

// Incremental Bowyer-Watson Delaunay triangulation with filtered exact
// predicates (double filter, GMP rational fallback).

#include <gmpxx.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "holeopt/errors.hpp"
#include "holeopt/vec2.hpp"

namespace holeopt {

namespace predicates {

inline constexpr double kEps = std::numeric_limits<double>::epsilon() * 0.5;

/// Sign of the orientation determinant: > 0 iff a, b, c turn counterclockwise.
inline int orient2d(Vec2 a, Vec2 b, Vec2 c) {
    const double detl = (a.x - c.x) * (b.y - c.y);
    const double detr = (a.y - c.y) * (b.x - c.x);
    const double det = detl - detr;
    const double bound = (3.0 + 16.0 * kEps) * kEps * (std::abs(detl) + std::abs(detr));
    if (det > bound) return 1;
    if (-det > bound) return -1;
    const mpq_class ax(a.x), ay(a.y), bx(b.x), by(b.y), cx(c.x), cy(c.y);
    const mpq_class e = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx);
    return sgn(e);
}

/// > 0 iff d lies strictly inside the circle through the counterclockwise a, b, c.
inline int incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;
    const double bc = bdx * cdy - cdx * bdy;
    const double ca = cdx * ady - adx * cdy;
    const double ab = adx * bdy - bdx * ady;
    const double det = alift * bc + blift * ca + clift * ab;
    const double permanent = (std::abs(bdx * cdy) + std::abs(cdx * bdy)) * alift +
                             (std::abs(cdx * ady) + std::abs(adx * cdy)) * blift +
                             (std::abs(adx * bdy) + std::abs(bdx * ady)) * clift;
    const double bound = (10.0 + 96.0 * kEps) * kEps * permanent;
    if (det > bound) return 1;
    if (-det > bound) return -1;
    const mpq_class dx(d.x), dy(d.y);
    const mpq_class qadx = mpq_class(a.x) - dx, qady = mpq_class(a.y) - dy;
    const mpq_class qbdx = mpq_class(b.x) - dx, qbdy = mpq_class(b.y) - dy;
    const mpq_class qcdx = mpq_class(c.x) - dx, qcdy = mpq_class(c.y) - dy;
    const mpq_class e = (qadx * qadx + qady * qady) * (qbdx * qcdy - qcdx * qbdy) +
                        (qbdx * qbdx + qbdy * qbdy) * (qcdx * qady - qadx * qcdy) +
                        (qcdx * qcdx + qcdy * qcdy) * (qadx * qbdy - qbdx * qady);
    return sgn(e);
}

}  // namespace predicates

/// Delaunay triangulation of a point set. Output triangles are counterclockwise
/// and index into the input span; duplicate points are left unused.
class Delaunay {
public:
    explicit Delaunay(std::span<const Vec2> points) { build(points); }

    const std::vector<std::array<int, 3>>& triangles() const { return out_; }

private:
    struct Tri {
        std::array<int, 3> v;
        std::array<int, 3> nb;  // neighbour opposite v[i], -1 if none
        bool alive = true;
    };

    std::vector<Vec2> pts_;
    std::vector<Tri> tris_;
    std::vector<std::array<int, 3>> out_;
    int last_ = 0;

    // Hilbert-curve key on a 2^16 grid for locality of insertion.
    static std::uint64_t hilbert_key(std::uint32_t x, std::uint32_t y) {
        std::uint64_t d = 0;
        for (std::uint32_t s = 1u << 15; s > 0; s >>= 1) {
            const std::uint32_t rx = (x & s) ? 1u : 0u;
            const std::uint32_t ry = (y & s) ? 1u : 0u;
            d += std::uint64_t(s) * s * ((3u * rx) ^ ry);
            if (ry == 0) {
                if (rx == 1) {
                    x = s - 1 - x;
                    y = s - 1 - y;
                }
                std::swap(x, y);
            }
        }
        return d;
    }

    void build(std::span<const Vec2> points) {
        const int n = int(points.size());
        if (n < 3) return;
        Vec2 lo = points[0], hi = points[0];
        for (const auto& p : points) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
        }
        const double span = std::max({hi.x - lo.x, hi.y - lo.y, 1e-300});
        const Vec2 mid = 0.5 * (lo + hi);
        pts_.assign(points.begin(), points.end());
        // Super triangle far outside the data.
        const double big = 1e4 * span;
        pts_.push_back(mid + Vec2{-big, -big});
        pts_.push_back(mid + Vec2{big, -big});
        pts_.push_back(mid + Vec2{0.0, big});
        tris_.reserve(std::size_t(2 * n + 16) * 2);
        tris_.push_back(Tri{{n, n + 1, n + 2}, {-1, -1, -1}, true});
        last_ = 0;

        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::vector<std::uint64_t> keys(n);
        for (int i = 0; i < n; ++i) {
            const auto qx = std::uint32_t(std::clamp((points[i].x - lo.x) / span, 0.0, 1.0) * 65535.0);
            const auto qy = std::uint32_t(std::clamp((points[i].y - lo.y) / span, 0.0, 1.0) * 65535.0);
            keys[i] = hilbert_key(qx, qy);
        }
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return keys[a] < keys[b]; });

        std::vector<int> cavity, stack;
        std::vector<char> in_cavity;
        for (int idx : order) insert(idx, cavity, stack, in_cavity);

        for (const auto& t : tris_) {
            if (!t.alive) continue;
            if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
            out_.push_back(t.v);
        }
    }

    int locate(Vec2 p) const {
        int t = last_;
        if (!tris_[t].alive) {
            for (int i = int(tris_.size()) - 1; i >= 0; --i) {
                if (tris_[i].alive) { t = i; break; }
            }
        }
        // Visibility walk; terminates on Delaunay triangulations.
        std::size_t guard = 0;
        const std::size_t limit = 4 * tris_.size() + 100;
        while (guard++ < limit) {
            const Tri& tr = tris_[t];
            bool moved = false;
            for (int e = 0; e < 3; ++e) {
                const Vec2 a = pts_[tr.v[(e + 1) % 3]], b = pts_[tr.v[(e + 2) % 3]];
                if (predicates::orient2d(a, b, p) < 0) {
                    if (tr.nb[e] < 0) return -1;
                    t = tr.nb[e];
                    moved = true;
                    break;
                }
            }
            if (!moved) return t;
        }
        // Fallback: exhaustive search.
        for (int i = 0; i < int(tris_.size()); ++i) {
            const Tri& tr = tris_[i];
            if (!tr.alive) continue;
            bool ok = true;
            for (int e = 0; e < 3 && ok; ++e) {
                ok = predicates::orient2d(pts_[tr.v[(e + 1) % 3]], pts_[tr.v[(e + 2) % 3]], p) >= 0;
            }
            if (ok) return i;
        }
        return -1;
    }

    void insert(int pi, std::vector<int>& cavity, std::vector<int>& stack, std::vector<char>& in_cavity) {
        const Vec2 p = pts_[pi];
        const int t0 = locate(p);
        if (t0 < 0) throw MeshFailure("Delaunay: point location failed");
        for (int k = 0; k < 3; ++k) {
            if (pts_[tris_[t0].v[k]] == p) return;  // duplicate
        }
        cavity.clear();
        stack.clear();
        if (in_cavity.size() < tris_.size()) in_cavity.resize(tris_.size() * 2, 0);
        stack.push_back(t0);
        in_cavity[t0] = 1;
        while (!stack.empty()) {
            const int t = stack.back();
            stack.pop_back();
            cavity.push_back(t);
            for (int e = 0; e < 3; ++e) {
                const int nb = tris_[t].nb[e];
                if (nb < 0 || in_cavity[nb]) continue;
                const auto& v = tris_[nb].v;
                if (predicates::incircle(pts_[v[0]], pts_[v[1]], pts_[v[2]], p) > 0) {
                    in_cavity[nb] = 1;
                    stack.push_back(nb);
                }
            }
        }
        // Boundary edges of the cavity, each forming a new triangle with p.
        struct Edge { int a, b, outside; };
        std::vector<Edge> edges;
        edges.reserve(cavity.size() + 2);
        for (int t : cavity) {
            for (int e = 0; e < 3; ++e) {
                const int nb = tris_[t].nb[e];
                if (nb >= 0 && in_cavity[nb]) continue;
                edges.push_back({tris_[t].v[(e + 1) % 3], tris_[t].v[(e + 2) % 3], nb});
            }
        }
        for (int t : cavity) {
            tris_[t].alive = false;
            in_cavity[t] = 0;
        }
        // New triangles (a, b, p); link them through the shared vertex map.
        std::vector<std::pair<int, int>> by_start;  // (a, new tri index)
        by_start.reserve(edges.size());
        const int first = int(tris_.size());
        for (const auto& e : edges) {
            Tri nt{{e.a, e.b, pi}, {-1, -1, e.outside}, true};
            const int id = int(tris_.size());
            tris_.push_back(nt);
            if (e.outside >= 0) {
                Tri& o = tris_[e.outside];
                for (int k = 0; k < 3; ++k) {
                    const int oa = o.v[(k + 1) % 3], ob = o.v[(k + 2) % 3];
                    if (oa == e.b && ob == e.a) { o.nb[k] = id; break; }
                }
            }
            by_start.emplace_back(e.a, id);
        }
        std::sort(by_start.begin(), by_start.end());
        auto find_start = [&](int a) {
            auto it = std::lower_bound(by_start.begin(), by_start.end(), std::make_pair(a, -1));
            return (it != by_start.end() && it->first == a) ? it->second : -1;
        };
        for (int id = first; id < int(tris_.size()); ++id) {
            Tri& t = tris_[id];
            // Edge (b, p) is opposite a: neighbour starts at b.
            t.nb[0] = find_start(t.v[1]);
            // Edge (p, a) is opposite b: neighbour is the triangle ending at a, i.e. (x, a, p).
            t.nb[1] = -1;
        }
        for (int id = first; id < int(tris_.size()); ++id) {
            const int nb0 = tris_[id].nb[0];
            if (nb0 >= 0) tris_[nb0].nb[1] = id;
        }
        last_ = int(tris_.size()) - 1;
        if (in_cavity.size() < tris_.size()) in_cavity.resize(tris_.size() * 2, 0);
    }
};

}  // namespace holeopt
