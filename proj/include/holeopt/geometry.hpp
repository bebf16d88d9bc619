#pragma once

// Smooth planar domains, circular holes and the nearest-point projection
// onto the outer boundary.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "holeopt/errors.hpp"
#include "holeopt/vec2.hpp"

namespace holeopt {

/// Cosine mode (k, a_k) of a Fourier star boundary r(phi) = r0 + sum a_k cos(k phi).
struct FourierMode {
    int k = 0;
    double a = 0.0;
};

/// Result of a nearest-point query on the outer boundary.
struct BoundaryPoint {
    double t = 0.0;        ///< curve parameter of the nearest point
    Vec2 z;                ///< nearest point on the curve
    double distance = 0.0; ///< |q - z|
};

/// Closed counterclockwise C-infinity curve from one of three parametric families.
///
/// All queries are const and allocation free, so instances can be shared by
/// concurrent workers.
class SmoothDomain {
public:
    enum class Kind { disk, ellipse, fourier_star };

    static constexpr int kSamples = 4096;

    static SmoothDomain disk(double radius) {
        if (!(radius > 0.0)) throw GeometryError("disk radius must be positive");
        return SmoothDomain(Kind::disk, radius, radius, {});
    }

    static SmoothDomain ellipse(double a, double b) {
        if (!(a > 0.0 && b > 0.0)) throw GeometryError("ellipse semi-axes must be positive");
        return SmoothDomain(Kind::ellipse, a, b, {});
    }

    static SmoothDomain fourier_star(double r0, std::vector<FourierMode> modes) {
        if (!(r0 > 0.0)) throw GeometryError("fourier_star r0 must be positive");
        for (const auto& m : modes) {
            if (m.k < 1) throw GeometryError("fourier_star mode index must be >= 1");
        }
        return SmoothDomain(Kind::fourier_star, r0, r0, std::move(modes));
    }

    Kind kind() const { return kind_; }
    double param_a() const { return a_; }
    double param_b() const { return b_; }
    const std::vector<FourierMode>& modes() const { return modes_; }

    /// Short identifier used in CSV output.
    std::string id() const {
        std::ostringstream os;
        os.precision(6);
        switch (kind_) {
            case Kind::disk: os << "disk_" << a_; break;
            case Kind::ellipse: os << "ellipse_" << a_ << "x" << b_; break;
            case Kind::fourier_star:
                os << "star_" << a_;
                for (const auto& m : modes_) os << "_k" << m.k << "a" << m.a;
                break;
        }
        return os.str();
    }

    Vec2 point(double t) const {
        switch (kind_) {
            case Kind::disk: return {a_ * std::cos(t), a_ * std::sin(t)};
            case Kind::ellipse: return {a_ * std::cos(t), b_ * std::sin(t)};
            case Kind::fourier_star: return star_radius(t) * unit_at(t);
        }
        return {};
    }

    Vec2 tangent(double t) const {
        switch (kind_) {
            case Kind::disk: return {-a_ * std::sin(t), a_ * std::cos(t)};
            case Kind::ellipse: return {-a_ * std::sin(t), b_ * std::cos(t)};
            case Kind::fourier_star: {
                const double r = star_radius(t), dr = star_radius_d1(t);
                return dr * unit_at(t) + r * perp(unit_at(t));
            }
        }
        return {};
    }

    Vec2 second_derivative(double t) const {
        switch (kind_) {
            case Kind::disk: return {-a_ * std::cos(t), -a_ * std::sin(t)};
            case Kind::ellipse: return {-a_ * std::cos(t), -b_ * std::sin(t)};
            case Kind::fourier_star: {
                const double r = star_radius(t), dr = star_radius_d1(t), ddr = star_radius_d2(t);
                const Vec2 e = unit_at(t);
                return (ddr - r) * e + 2.0 * dr * perp(e);
            }
        }
        return {};
    }

    /// Signed curvature; positive for a convex counterclockwise arc.
    double curvature(double t) const {
        const Vec2 d1 = tangent(t), d2 = second_derivative(t);
        return cross(d1, d2) / std::pow(norm(d1), 3);
    }

    /// Outward unit normal at parameter t.
    Vec2 outward_normal(double t) const {
        const Vec2 d1 = tangent(t);
        return normalized(Vec2{d1.y, -d1.x});
    }

    bool inside(Vec2 q) const {
        switch (kind_) {
            case Kind::disk: return norm2(q) < a_ * a_;
            case Kind::ellipse: {
                const double u = q.x / a_, v = q.y / b_;
                return u * u + v * v < 1.0;
            }
            case Kind::fourier_star: {
                if (norm2(q) == 0.0) return true;
                return norm(q) < star_radius(std::atan2(q.y, q.x));
            }
        }
        return false;
    }

    /// Unrestricted nearest point (global minimum over the curve).
    BoundaryPoint nearest(Vec2 q) const { return nearest_impl(q, nullptr); }

    /// Distance to the boundary, negative inside.
    double signed_distance(Vec2 q) const {
        const double d = nearest(q).distance;
        return inside(q) ? -d : d;
    }

    /// Inverse of the largest absolute curvature over the samples.
    double reach() const { return 1.0 / max_abs_curvature_; }
    double max_abs_curvature() const { return max_abs_curvature_; }

    /// Boundary length from the sample polyline.
    double perimeter() const { return perimeter_; }

    Vec2 bbox_lo() const { return lo_; }
    Vec2 bbox_hi() const { return hi_; }

    const std::vector<Vec2>& samples() const { return samples_; }

    double sample_spacing() const { return kTwoPi / kSamples; }

    /// Candidate projection parameters, used for the ambiguity test.
    std::vector<BoundaryPoint> near_minimizers(Vec2 q, double rel_tol) const {
        std::vector<BoundaryPoint> out;
        nearest_impl(q, &out, rel_tol);
        return out;
    }

private:
    SmoothDomain(Kind kind, double a, double b, std::vector<FourierMode> modes)
        : kind_(kind), a_(a), b_(b), modes_(std::move(modes)) {
        build_samples();
        validate();
        build_grid();
    }

    double star_radius(double t) const {
        double r = a_;
        for (const auto& m : modes_) r += m.a * std::cos(m.k * t);
        return r;
    }
    double star_radius_d1(double t) const {
        double r = 0.0;
        for (const auto& m : modes_) r -= m.a * m.k * std::sin(m.k * t);
        return r;
    }
    double star_radius_d2(double t) const {
        double r = 0.0;
        for (const auto& m : modes_) r -= m.a * m.k * m.k * std::cos(m.k * t);
        return r;
    }

    void build_samples() {
        samples_.resize(kSamples);
        lo_ = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
        hi_ = {-lo_.x, -lo_.y};
        max_abs_curvature_ = 0.0;
        for (int i = 0; i < kSamples; ++i) {
            const double t = kTwoPi * i / kSamples;
            samples_[i] = point(t);
            lo_ = {std::min(lo_.x, samples_[i].x), std::min(lo_.y, samples_[i].y)};
            hi_ = {std::max(hi_.x, samples_[i].x), std::max(hi_.y, samples_[i].y)};
            const double k = curvature(t);
            if (!std::isfinite(k)) throw GeometryError("boundary curvature is not finite");
            max_abs_curvature_ = std::max(max_abs_curvature_, std::abs(k));
        }
        perimeter_ = 0.0;
        for (int i = 0; i < kSamples; ++i) perimeter_ += distance(samples_[i], samples_[(i + 1) % kSamples]);
    }

    void validate() const {
        if (kind_ == Kind::fourier_star) {
            for (int i = 0; i < kSamples; ++i) {
                if (!(star_radius(kTwoPi * i / kSamples) > 0.0)) {
                    throw GeometryError("fourier_star radius is not positive everywhere");
                }
            }
        }
        if (polyline_self_intersects()) throw GeometryError("boundary curve is not simple");
    }

    // Segment crossing test, bucketed on a coarse grid.
    bool polyline_self_intersects() const {
        const int n = kSamples;
        const int cells = 64;
        const Vec2 ext = hi_ - lo_;
        const double cw = ext.x / cells + 1e-12, ch = ext.y / cells + 1e-12;
        std::vector<std::vector<int>> grid(cells * cells);
        auto cell_range = [&](Vec2 a, Vec2 b, int& i0, int& i1, int& j0, int& j1) {
            i0 = std::clamp(int((std::min(a.x, b.x) - lo_.x) / cw), 0, cells - 1);
            i1 = std::clamp(int((std::max(a.x, b.x) - lo_.x) / cw), 0, cells - 1);
            j0 = std::clamp(int((std::min(a.y, b.y) - lo_.y) / ch), 0, cells - 1);
            j1 = std::clamp(int((std::max(a.y, b.y) - lo_.y) / ch), 0, cells - 1);
        };
        for (int s = 0; s < n; ++s) {
            int i0, i1, j0, j1;
            cell_range(samples_[s], samples_[(s + 1) % n], i0, i1, j0, j1);
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) grid[j * cells + i].push_back(s);
        }
        auto orient = [](Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); };
        for (const auto& bucket : grid) {
            for (std::size_t u = 0; u < bucket.size(); ++u) {
                for (std::size_t v = u + 1; v < bucket.size(); ++v) {
                    const int s = bucket[u], r = bucket[v];
                    const int gap = std::abs(s - r);
                    if (gap <= 1 || gap == n - 1) continue;
                    const Vec2 a = samples_[s], b = samples_[(s + 1) % n];
                    const Vec2 c = samples_[r], d = samples_[(r + 1) % n];
                    const double o1 = orient(a, b, c), o2 = orient(a, b, d);
                    const double o3 = orient(c, d, a), o4 = orient(c, d, b);
                    if (o1 * o2 < 0.0 && o3 * o4 < 0.0) return true;
                }
            }
        }
        return false;
    }

    void build_grid() {
        const Vec2 ext = hi_ - lo_;
        const double pad = 0.05 * std::max(ext.x, ext.y);
        glo_ = lo_ - Vec2{pad, pad};
        ghi_ = hi_ + Vec2{pad, pad};
        cell_ = std::max(ghi_.x - glo_.x, ghi_.y - glo_.y) / kGridCells;
        nx_ = int(std::ceil((ghi_.x - glo_.x) / cell_));
        ny_ = int(std::ceil((ghi_.y - glo_.y) / cell_));
        cell_start_.assign(std::size_t(nx_) * ny_ + 1, 0);
        std::vector<int> cell_of(kSamples);
        for (int i = 0; i < kSamples; ++i) {
            const int cx = std::clamp(int((samples_[i].x - glo_.x) / cell_), 0, nx_ - 1);
            const int cy = std::clamp(int((samples_[i].y - glo_.y) / cell_), 0, ny_ - 1);
            cell_of[i] = cy * nx_ + cx;
            ++cell_start_[cell_of[i] + 1];
        }
        for (std::size_t c = 1; c < cell_start_.size(); ++c) cell_start_[c] += cell_start_[c - 1];
        cell_items_.assign(kSamples, 0);
        std::vector<int> fill(cell_start_.begin(), cell_start_.end() - 1);
        for (int i = 0; i < kSamples; ++i) cell_items_[fill[cell_of[i]]++] = i;
    }

    // Index of the closest sample (ties broken by lowest index).
    int closest_sample(Vec2 q) const {
        int best = -1;
        double best_d2 = std::numeric_limits<double>::max();
        const bool in_grid = q.x >= glo_.x && q.x <= ghi_.x && q.y >= glo_.y && q.y <= ghi_.y;
        if (!in_grid) {
            for (int i = 0; i < kSamples; ++i) {
                const double d2 = norm2(samples_[i] - q);
                if (d2 < best_d2) { best_d2 = d2; best = i; }
            }
            return best;
        }
        const int cx = std::clamp(int((q.x - glo_.x) / cell_), 0, nx_ - 1);
        const int cy = std::clamp(int((q.y - glo_.y) / cell_), 0, ny_ - 1);
        const int max_ring = std::max(nx_, ny_);
        auto scan_cell = [&](int i, int j) {
            if (i < 0 || i >= nx_ || j < 0 || j >= ny_) return;
            const int c = j * nx_ + i;
            for (int k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
                const int s = cell_items_[k];
                const double d2 = norm2(samples_[s] - q);
                if (d2 < best_d2 || (d2 == best_d2 && s < best)) { best_d2 = d2; best = s; }
            }
        };
        for (int r = 0; r <= max_ring; ++r) {
            if (r == 0) {
                scan_cell(cx, cy);
            } else {
                for (int i = cx - r; i <= cx + r; ++i) {
                    scan_cell(i, cy - r);
                    scan_cell(i, cy + r);
                }
                for (int j = cy - r + 1; j <= cy + r - 1; ++j) {
                    scan_cell(cx - r, j);
                    scan_cell(cx + r, j);
                }
            }
            if (best >= 0 && double(r) * cell_ >= std::sqrt(best_d2)) break;
        }
        return best;
    }

    // Safeguarded Newton on f'(t) = <gamma(t) - q, gamma'(t)> inside [lo, hi].
    BoundaryPoint polish(Vec2 q, double t_guess) const {
        const double span = sample_spacing();
        double lo = t_guess - span, hi = t_guess + span;
        auto fp = [&](double t) { return dot(point(t) - q, tangent(t)); };
        auto fpp = [&](double t) {
            return norm2(tangent(t)) + dot(point(t) - q, second_derivative(t));
        };
        double flo = fp(lo), fhi = fp(hi);
        double t = t_guess;
        if (flo < 0.0 && fhi > 0.0) {
            for (int it = 0; it < 100; ++it) {
                const double g = fp(t), h = fpp(t);
                if (g == 0.0) break;
                if (g < 0.0) lo = t; else hi = t;
                double tn = (h > 0.0) ? t - g / h : 0.5 * (lo + hi);
                if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
                const double step = std::abs(tn - t);
                t = tn;
                if (step < 1e-15 || hi - lo < 1e-15) break;
            }
        } else {
            // Degenerate bracket (q near the curve centre of curvature): golden section.
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            auto f = [&](double s) { return norm2(point(s) - q); };
            double a = lo, b = hi;
            double c = b - gr * (b - a), d = a + gr * (b - a);
            for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
                if (f(c) < f(d)) b = d; else a = c;
                c = b - gr * (b - a);
                d = a + gr * (b - a);
            }
            t = 0.5 * (a + b);
        }
        BoundaryPoint bp;
        bp.t = wrap_angle(t);
        bp.z = point(bp.t);
        bp.distance = distance(bp.z, q);
        return bp;
    }

    BoundaryPoint nearest_impl(Vec2 q, std::vector<BoundaryPoint>* candidates, double rel_tol = 0.0) const {
        const int s = closest_sample(q);
        const double spacing = sample_spacing();
        BoundaryPoint best = polish(q, spacing * s);
        if (candidates == nullptr) return best;
        // Collect every polished local minimum whose distance ties the global one.
        std::vector<BoundaryPoint> mins;
        for (int i = 0; i < kSamples; ++i) {
            const double di = distance(samples_[i], q);
            const double dn = distance(samples_[(i + 1) % kSamples], q);
            const double dp = distance(samples_[(i + kSamples - 1) % kSamples], q);
            if (di <= dn && di <= dp) mins.push_back(polish(q, spacing * i));
        }
        for (const auto& m : mins) if (m.distance < best.distance) best = m;
        const double tol = rel_tol * std::max(1.0, best.distance);
        for (const auto& m : mins) {
            if (m.distance <= best.distance + tol) candidates->push_back(m);
        }
        return best;
    }

    static constexpr int kGridCells = 64;

    Kind kind_;
    double a_, b_;
    std::vector<FourierMode> modes_;
    std::vector<Vec2> samples_;
    Vec2 lo_, hi_;
    double max_abs_curvature_ = 0.0;
    double perimeter_ = 0.0;

    Vec2 glo_, ghi_;
    double cell_ = 1.0;
    int nx_ = 1, ny_ = 1;
    std::vector<int> cell_start_;
    std::vector<int> cell_items_;
};

/// Closed ball B_delta(p) removed from the domain.
struct Hole {
    Vec2 center;
    double radius = 0.0;
};

inline double signed_distance(const SmoothDomain& domain, Vec2 q) { return domain.signed_distance(q); }

/// Nearest boundary point z(q) and the inward unit normal (q - z)/|q - z|.
struct Projection {
    Vec2 z;
    Vec2 inward_normal;
    double t = 0.0;
    double distance = 0.0;
};

/// Projection onto the outer boundary, valid inside the tubular neighbourhood
/// of width 0.9 * reach.
inline Projection project_to_boundary(const SmoothDomain& domain, Vec2 q) {
    if (!domain.inside(q)) throw GeometryError("project_to_boundary: query point is not inside the domain");
    const double limit = 0.9 * domain.reach();
    const auto candidates = domain.near_minimizers(q, 1e-10);
    if (candidates.empty()) throw AmbiguousProjection("project_to_boundary: no minimiser found");
    BoundaryPoint best = candidates.front();
    for (const auto& c : candidates) if (c.distance < best.distance) best = c;
    if (best.distance >= limit) {
        std::ostringstream os;
        os << "project_to_boundary: distance " << best.distance << " exceeds 0.9*reach = " << limit;
        throw AmbiguousProjection(os.str());
    }
    const double spacing = domain.sample_spacing();
    for (const auto& c : candidates) {
        double gap = std::abs(c.t - best.t);
        gap = std::min(gap, kTwoPi - gap);
        if (gap > spacing) throw AmbiguousProjection("project_to_boundary: nearest boundary point is not unique");
    }
    if (best.distance == 0.0) throw GeometryError("project_to_boundary: query point lies on the boundary");
    Projection out;
    out.z = best.z;
    out.t = best.t;
    out.distance = best.distance;
    out.inward_normal = (q - best.z) / best.distance;
    return out;
}

/// dist(p, boundary) - delta; positive iff the closed ball sits inside the domain.
inline double contains_ball(const SmoothDomain& domain, const Hole& hole) {
    return -domain.signed_distance(hole.center) - hole.radius;
}

/// Domain with a hole and its clearance dist_min(boundary, ball).
class PuncturedDomain {
public:
    PuncturedDomain(SmoothDomain domain, Hole hole) : domain_(std::move(domain)), hole_(hole) {
        if (!(hole_.radius > 0.0)) throw GeometryError("hole radius must be positive");
        clearance_ = contains_ball(domain_, hole_);
        if (!(clearance_ > 0.0)) {
            std::ostringstream os;
            os << "hole is not contained in the domain (clearance " << clearance_ << ")";
            throw GeometryError(os.str());
        }
    }

    const SmoothDomain& domain() const { return domain_; }
    const Hole& hole() const { return hole_; }
    Vec2 center() const { return hole_.center; }
    double delta() const { return hole_.radius; }
    double clearance() const { return clearance_; }

    /// Same domain, hole moved to a new centre.
    PuncturedDomain moved_to(Vec2 center) const { return PuncturedDomain(domain_, Hole{center, hole_.radius}); }

private:
    SmoothDomain domain_;
    Hole hole_;
    double clearance_ = 0.0;
};

/// Closed angular interval [start, end] in absolute polar angle about the hole centre.
struct AngularInterval {
    double start = 0.0;
    double end = 0.0;
    double measure() const { return end - start; }
    bool contains(double angle) const {
        const double rel = wrap_angle(angle - start);
        return rel <= measure() + 1e-15 || measure() >= kTwoPi;
    }
};

/// Split of the hole circle into top, bottom and side arcs relative to the axis
/// pointing from z(p) to p.
struct ArcDecomposition {
    double theta = 0.0;
    Vec2 axis;             ///< e_y: unit vector from z(p) to p
    double axis_angle = 0.0;
    Vec2 foot;             ///< z(p)

    /// Arc facing away from the boundary, <z - p, e_y> >= |z - p| cos(theta).
    AngularInterval top() const { return {axis_angle - theta, axis_angle + theta}; }
    /// Arc facing the boundary.
    AngularInterval bottom() const { return {axis_angle + kPi - theta, axis_angle + kPi + theta}; }
    /// Side arc on the e_x = rotate(e_y, -90 deg) side.
    AngularInterval side_right() const { return {axis_angle - kPi + theta, axis_angle - theta}; }
    AngularInterval side_left() const { return {axis_angle + theta, axis_angle + kPi - theta}; }

    double total_measure() const {
        return top().measure() + bottom().measure() + side_left().measure() + side_right().measure();
    }
    double sides_measure() const { return side_left().measure() + side_right().measure(); }

    /// Decomposition for an explicitly chosen axis (e.g. a concentric hole, where z(p) is not unique).
    static ArcDecomposition with_axis(Vec2 axis, double theta, Vec2 foot = {}) {
        if (!(theta > 0.0 && theta < 0.5 * kPi)) throw GeometryError("arc angle theta must lie in (0, pi/2)");
        ArcDecomposition d;
        d.theta = theta;
        d.axis = normalized(axis);
        d.axis_angle = std::atan2(d.axis.y, d.axis.x);
        d.foot = foot;
        return d;
    }
};

/// Arc decomposition of the hole circle; the axis is (p - z(p)) / |p - z(p)|.
inline ArcDecomposition arc_decomposition(const PuncturedDomain& pd, double theta) {
    if (!(theta > 0.0 && theta < 0.5 * kPi)) throw GeometryError("arc angle theta must lie in (0, pi/2)");
    const Projection pr = project_to_boundary(pd.domain(), pd.center());
    return ArcDecomposition::with_axis(pr.inward_normal, theta, pr.z);
}

/// Centre at distance delta + clearance from the boundary point gamma(t), along the inward normal.
inline Vec2 center_near_boundary(const SmoothDomain& domain, double t, double delta, double clearance) {
    return domain.point(t) - (delta + clearance) * domain.outward_normal(t);
}

}  // namespace holeopt
