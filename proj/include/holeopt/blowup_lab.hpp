#pragma once

// Model harmonic problems: the truncated exterior domain K_R with its
// boundary-flux diagnostics, the parabola barrier, and the checks that tie
// them back to eigenfunctions of the punctured domain.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "holeopt/eigensolver.hpp"
#include "holeopt/errors.hpp"
#include "holeopt/fem.hpp"
#include "holeopt/geometry.hpp"
#include "holeopt/mesh.hpp"
#include "holeopt/mesher.hpp"
#include "holeopt/shape_analysis.hpp"

namespace holeopt {

struct TruncatedKOptions {
    double R = 8.0;
    double x_cut = 0.25;     ///< the cusp {|x| < x_cut, y < 0} below the circle is removed
    double h_circle = 0.02;
    double h_far = 0.4;
    double grade = 0.12;     ///< growth of the element size per unit distance from the circle
    std::uint64_t seed = 20240611;
};

/// Mesh of (B_R(0) n {y > -1}) - B_1(0), mirror symmetric about x = 0.
/// Tags: floor (y = -1 and the cusp cut), hole_boundary (unit circle), outer_boundary (|x| = R).
struct TruncatedK {
    double R = 8.0;
    double x_cut = 0.25;
    std::shared_ptr<const Mesh> mesh;
    std::vector<int> mirror;  ///< vertex index of the reflected vertex
};

namespace detail {

inline double k_cut_distance(Vec2 q, double x_cut) {
    // Signed distance to the quadrant {x < x_cut, y < 0}; positive outside it.
    if (q.x < x_cut && q.y < 0.0) return -std::min(x_cut - q.x, -q.y);
    return std::hypot(std::max(q.x - x_cut, 0.0), std::max(q.y, 0.0));
}

}  // namespace detail

inline TruncatedK make_truncated_k(const TruncatedKOptions& opt = {}) {
    if (!(opt.R >= 4.0)) throw ConfigError("truncated K: R must be >= 4");
    if (!(opt.x_cut > 0.0 && opt.x_cut < 0.5)) throw ConfigError("truncated K: x_cut must lie in (0, 0.5)");
    if (!(opt.h_circle > 0.0 && opt.h_far >= opt.h_circle)) throw ConfigError("truncated K: bad size parameters");
    const double R = opt.R, xc = opt.x_cut;
    const double yc = -std::sqrt(1.0 - xc * xc);
    const double floor_x = std::sqrt(R * R - 1.0);

    MeshRegion region;
    region.sd = [R, xc](Vec2 q) {
        const double r = norm(q);
        return std::max({r - R, -(q.y + 1.0), 1.0 - r, -q.x, -detail::k_cut_distance(q, xc)});
    };
    // Near the cusp the wedge between floor and circle is thinner than h_circle.
    const double h_min = 0.3 * (1.0 + yc);
    region.size = [opt, xc, h_min](Vec2 q) {
        double h = std::min(opt.h_far, opt.h_circle + opt.grade * std::max(0.0, norm(q) - 1.0));
        const double ax = std::max(std::abs(q.x), xc);
        if (ax < 1.0 && q.y < 0.0) h = std::min(h, std::max(h_min, 0.3 * (1.0 - std::sqrt(1.0 - ax * ax))));
        return h;
    };
    region.size_lipschitz = std::max(opt.grade, 0.5);
    region.size_min = std::min(opt.h_circle, h_min);
    region.lo = {0.0, -1.0};
    region.hi = {R, R};
    BoundaryLoop loop;
    loop.pieces.push_back({[](double t) { return Vec2{0.0, t}; }, 1.0, R, BoundaryTag::interior});
    loop.pieces.push_back({[R](double t) { return R * unit_at(t); }, 0.5 * kPi, -std::asin(1.0 / R), BoundaryTag::outer_boundary});
    loop.pieces.push_back({[](double t) { return Vec2{t, -1.0}; }, floor_x, xc, BoundaryTag::floor});
    loop.pieces.push_back({[xc](double t) { return Vec2{xc, t}; }, -1.0, yc, BoundaryTag::floor});
    loop.pieces.push_back({[](double t) { return unit_at(t); }, std::atan2(yc, xc), 0.5 * kPi, BoundaryTag::hole_boundary});
    region.loops.push_back(loop);

    MesherOptions mo;
    mo.target_h = opt.h_circle;
    mo.seed = opt.seed;
    Mesh half = relax_mesh(region, mo);
    // The loop starts at (0, 1), which lies on the circle.
    for (std::size_t v = 0; v < half.vertices.size(); ++v) {
        if (std::abs(half.vertices[v].x) < 1e-12) half.vertices[v].x = 0.0;
        if (half.vertices[v].x == 0.0 && half.vertices[v].y == 1.0) half.tags[v] = BoundaryTag::hole_boundary;
    }

    Mesh full;
    full.target_h = opt.h_circle;
    full.hole_h = opt.h_circle;
    full.hole_center = {0.0, 0.0};
    full.hole_radius = 1.0;
    const int n = int(half.vertices.size());
    std::vector<int> image(n);
    full.vertices = half.vertices;
    full.tags = half.tags;
    for (int v = 0; v < n; ++v) {
        if (half.vertices[v].x == 0.0) {
            image[v] = v;
        } else {
            image[v] = int(full.vertices.size());
            full.vertices.push_back({-half.vertices[v].x, half.vertices[v].y});
            full.tags.push_back(half.tags[v]);
        }
    }
    full.triangles = half.triangles;
    for (const auto& t : half.triangles) full.triangles.push_back({image[t[0]], image[t[2]], image[t[1]]});
    TruncatedK k;
    k.R = R;
    k.x_cut = xc;
    k.mirror.assign(full.vertices.size(), -1);
    for (int v = 0; v < n; ++v) {
        k.mirror[v] = image[v];
        k.mirror[image[v]] = v;
    }
    const auto chk = check_mesh(full);
    if (!chk.ok()) throw MeshFailure("truncated K mesh: " + chk.problem);
    k.mesh = std::make_shared<const Mesh>(std::move(full));
    return k;
}

/// Outer boundary data for the K_R problem.
struct OuterData {
    enum class Kind { linear_alpha, sampled } kind = Kind::linear_alpha;
    double alpha = 1.0;
    /// sampled: value at a point of |x| = R in blowup coordinates.
    std::function<double(Vec2)> sample;
    std::string description() const {
        return kind == Kind::linear_alpha ? "linear_alpha(" + std::to_string(alpha) + ")" : "sampled";
    }
};

inline OuterData linear_alpha(double alpha) {
    OuterData d;
    d.alpha = alpha;
    return d;
}

/// Rescaled eigenfunction u(p + delta (X e_x + Y e_y)) / delta, with e_y the
/// axis from z(p) to p and e_x = e_y turned by -90 degrees; 0 outside the mesh.
inline OuterData sampled_blowup(std::shared_ptr<const EigenSolution> sol, Vec2 p, double delta, Vec2 axis) {
    auto probe = std::make_shared<SolutionProbe>(*sol);
    const Vec2 ey = normalized(axis);
    const Vec2 ex{ey.y, -ey.x};
    OuterData d;
    d.kind = OuterData::Kind::sampled;
    d.alpha = 0.0;
    d.sample = [sol, probe, p, delta, ex, ey](Vec2 X) {
        const Vec2 q = p + delta * (X.x * ex + X.y * ey);
        const auto hit = probe->locator().locate(q);
        if (hit.triangle < 0) return 0.0;
        return (*probe)(q) / delta;
    };
    return d;
}

struct HarmonicSolution {
    std::shared_ptr<const TruncatedK> domain;
    std::shared_ptr<const FemSystem> system;
    std::vector<double> v;
    OuterData data;

    const Mesh& mesh() const { return *domain->mesh; }
    double max_value() const { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }
};

inline HarmonicSolution solve_blowup(std::shared_ptr<const TruncatedK> k, const OuterData& data) {
    HarmonicSolution s;
    s.domain = k;
    s.data = data;
    s.system = std::make_shared<const FemSystem>(assemble(*k->mesh));
    const Mesh& m = *k->mesh;
    s.v = solve_harmonic(m, *s.system, [&](int i) {
        if (m.tags[i] != BoundaryTag::outer_boundary) return 0.0;
        const Vec2 q = m.vertices[i];
        return data.kind == OuterData::Kind::linear_alpha ? data.alpha * (q.y + 1.0) : data.sample(q);
    });
    return s;
}

inline HarmonicSolution solve_blowup(double R, const OuterData& data, TruncatedKOptions opt = {}) {
    opt.R = R;
    return solve_blowup(std::make_shared<const TruncatedK>(make_truncated_k(opt)), data);
}

/// Sanity of a K_R solve: zero trace, sign, maximum principle.
struct HarmonicChecks {
    double min_value = 0.0;
    double max_interior = 0.0;
    double max_outer = 0.0;
    double max_zero_trace = 0.0;  ///< max |v| on floor and circle vertices
    bool ok() const { return min_value >= -1e-10 && max_interior <= max_outer + 1e-12 && max_zero_trace == 0.0; }
};

inline HarmonicChecks harmonic_checks(const HarmonicSolution& s) {
    HarmonicChecks c;
    const Mesh& m = s.mesh();
    c.min_value = *std::min_element(s.v.begin(), s.v.end());
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        switch (m.tags[i]) {
            case BoundaryTag::interior: c.max_interior = std::max(c.max_interior, s.v[i]); break;
            case BoundaryTag::outer_boundary: c.max_outer = std::max(c.max_outer, s.v[i]); break;
            default: c.max_zero_trace = std::max(c.max_zero_trace, std::abs(s.v[i])); break;
        }
    }
    return c;
}

/// max_i |v(x_i, y_i) - v(-x_i, y_i)| / max |v|.
inline double mirror_defect(const HarmonicSolution& s) {
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < s.v.size(); ++i) {
        worst = std::max(worst, std::abs(s.v[i] - s.v[s.domain->mirror[i]]));
        scale = std::max(scale, std::abs(s.v[i]));
    }
    return scale > 0.0 ? worst / scale : worst;
}

/// Points of K_R at least `clearance_h` local element sizes away from every boundary piece.
inline std::vector<Vec2> default_probes(const TruncatedK& k, double spacing = 0.25, double clearance_h = 2.0) {
    const MeshLocator loc(*k.mesh);
    std::vector<Vec2> out;
    const int n = int(std::floor(k.R / spacing));
    for (int j = 0; j <= n + int(1.0 / spacing); ++j) {
        for (int i = -n; i <= n; ++i) {
            const Vec2 q{i * spacing, -1.0 + j * spacing};
            const auto hit = loc.locate(q);
            if (hit.triangle < 0) continue;
            // Local size: longest edge of the containing triangle.
            const auto& t = k.mesh->triangles[hit.triangle];
            const Vec2 a = k.mesh->vertices[t[0]], b = k.mesh->vertices[t[1]], c = k.mesh->vertices[t[2]];
            const double h = std::max({distance(a, b), distance(b, c), distance(c, a)});
            const double gap = std::min({norm(q) - 1.0, q.y + 1.0, k.R - norm(q), detail::k_cut_distance({std::abs(q.x), q.y}, k.x_cut)});
            if (gap >= clearance_h * h) out.push_back(q);
        }
    }
    return out;
}

struct AngularDerivative {
    std::vector<Vec2> probes;
    std::vector<double> values;  ///< <grad v, (-y, x)>
    double max_gradient = 0.0;   ///< max |grad v| over the recovered nodal gradients
};

inline AngularDerivative angular_derivative(const HarmonicSolution& s, std::span<const Vec2> probes) {
    const Mesh& m = s.mesh();
    const auto grad = recovered_gradient(m, s.v);
    const MeshLocator loc(m);
    AngularDerivative out;
    for (const auto& g : grad) out.max_gradient = std::max(out.max_gradient, norm(g));
    for (const Vec2 q : probes) {
        const Vec2 g = patch_gradient(loc, grad, q);
        out.probes.push_back(q);
        out.values.push_back(dot(g, Vec2{-q.y, q.x}));
    }
    return out;
}

/// dv/dnu on the unit circle (nu = radial direction, into K), ordered by angle.
inline HoleFlux circle_flux(const HarmonicSolution& s) {
    const auto g = consistent_flux(s.mesh(), *s.system, s.v, 0.0);
    const Mesh& m = s.mesh();
    HoleFlux f;
    f.center = {0.0, 0.0};
    f.radius = 1.0;
    std::vector<int> idx;
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        if (m.tags[i] == BoundaryTag::hole_boundary) idx.push_back(int(i));
    }
    auto ang = [&](int i) { return wrap_angle(std::atan2(m.vertices[i].y, m.vertices[i].x)); };
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return ang(a) < ang(b); });
    for (int i : idx) {
        f.vertices.push_back(i);
        f.angles.push_back(ang(i));
        f.values.push_back(g[i]);
    }
    return f;
}

/// Right side arc A_1' = {-cos th0 <= y <= cos th0, x >= 0} of the unit circle.
inline bool in_right_side_arc(double angle, double theta0) {
    const double a = std::remainder(angle, kTwoPi);  // (-pi, pi]
    return std::abs(a) <= 0.5 * kPi - theta0 + 1e-12;
}

struct HopfArcReport {
    double gamma_est = 0.0;  ///< min over A_1' of d/dtheta (dv/dnu)
    std::vector<double> angles;
    std::vector<double> derivative;
};

inline HopfArcReport hopf_arc_check(const HarmonicSolution& s, double theta0) {
    if (!(theta0 > 0.0 && theta0 < 0.5 * kPi)) throw ConfigError("hopf_arc_check: theta0 must lie in (0, pi/2)");
    const HoleFlux f = circle_flux(s);
    const std::size_t n = f.values.size();
    HopfArcReport r;
    r.gamma_est = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        if (!in_right_side_arc(f.angles[k], theta0)) continue;
        const std::size_t a = (k + n - 1) % n, b = (k + 1) % n;
        const double span = wrap_angle(f.angles[b] - f.angles[a]);
        const double d = (f.values[b] - f.values[a]) / span;
        r.angles.push_back(f.angles[k]);
        r.derivative.push_back(d);
        r.gamma_est = std::min(r.gamma_est, d);
    }
    if (r.angles.empty()) throw Error("hopf_arc_check: no circle vertices on the arc");
    return r;
}

struct SideTopIntegrals {
    double sides_right = 0.0;  ///< A_1', x >= 0
    double sides_left = 0.0;   ///< A_2', x <= 0
    double top = 0.0;          ///< C^+ around (0, 1)
};

/// Integrals of (dv/dnu)^2 <e_y, nu> over the side and top arcs of the unit circle.
inline SideTopIntegrals side_and_top_integrals(const HarmonicSolution& s, double theta0) {
    if (!(theta0 > 0.0 && theta0 < 0.5 * kPi)) throw ConfigError("side_and_top_integrals: theta0 must lie in (0, pi/2)");
    const HoleFlux f = circle_flux(s);
    const auto integrand = hadamard_integrand(f, {0.0, 1.0});
    const PeriodicLinear pl(f.angles, integrand);
    const double q = 0.5 * kPi;
    SideTopIntegrals r;
    r.sides_right = pl.integrate(-(q - theta0), q - theta0);
    r.top = pl.integrate(q - theta0, q + theta0);
    r.sides_left = pl.integrate(q + theta0, 3.0 * q - theta0);
    return r;
}

struct BlowdownRow {
    double radius = 0.0;
    double slope = 0.0;
    double residual = 0.0;  ///< relative rms misfit of v against slope (y + 1)
    std::size_t samples = 0;
};

/// Least-squares slope of v against (y + 1) on the part of each circle |x| = r inside K.
inline std::vector<BlowdownRow> blowdown_check(const HarmonicSolution& s, std::span<const double> radii, int samples = 721) {
    const MeshLocator loc(s.mesh());
    std::vector<BlowdownRow> out;
    for (double r : radii) {
        if (!(r > 1.0 && r < s.domain->R / 1.5)) throw ConfigError("blowdown_check: radii must lie in (1, R/1.5)");
        const double a0 = -std::asin(1.0 / r);
        double svy = 0.0, syy = 0.0, svv = 0.0;
        std::vector<std::pair<double, double>> pts;
        for (int k = 1; k < samples - 1; ++k) {
            const double phi = a0 + (kPi - 2.0 * a0) * k / (samples - 1);
            const Vec2 q = r * unit_at(phi);
            const auto hit = loc.locate(q);
            if (hit.triangle < 0) continue;
            const double v = interpolate(loc, s.v, q);
            pts.emplace_back(v, q.y + 1.0);
            svy += v * (q.y + 1.0);
            syy += (q.y + 1.0) * (q.y + 1.0);
            svv += v * v;
        }
        BlowdownRow row;
        row.radius = r;
        row.samples = pts.size();
        row.slope = syy > 0.0 ? svy / syy : 0.0;
        double ss = 0.0;
        for (const auto& [v, y1] : pts) ss += (v - row.slope * y1) * (v - row.slope * y1);
        row.residual = svv > 0.0 ? std::sqrt(ss / svv) : 0.0;
        out.push_back(row);
    }
    return out;
}

/// Harmonic barrier on P_{M,d} = {y >= M x^2, y <= 3d/2}.
struct ParabolaProblem {
    double M = 0.0, d = 0.0, Lambda = 0.0;
    std::shared_ptr<const Mesh> mesh;
    std::shared_ptr<const FemSystem> system;
    std::vector<double> w;

    double half_width() const { return std::sqrt(1.5 * d / M); }
    double top_value(double x) const { return Lambda * d / 8.0 * std::cos(0.5 * kPi * std::sqrt(2.0 * M / (3.0 * d)) * x); }
};

inline ParabolaProblem solve_parabola(double M, double d, double Lambda, double h = 0.0, std::uint64_t seed = 20240611) {
    if (!(M > 0.0 && d > 0.0 && Lambda >= 0.0)) throw ConfigError("solve_parabola: need M > 0, d > 0, Lambda >= 0");
    ParabolaProblem pp;
    pp.M = M;
    pp.d = d;
    pp.Lambda = Lambda;
    const double a = pp.half_width(), top = 1.5 * d;
    if (h <= 0.0) h = std::min(2.0 * a, top) / 40.0;
    MeshRegion region;
    region.sd = [M, top](Vec2 q) {
        const double para = (M * q.x * q.x - q.y) / std::sqrt(1.0 + 4.0 * M * M * q.x * q.x);
        return std::max(q.y - top, para);
    };
    region.size = [h](Vec2) { return h; };
    region.size_lipschitz = 0.0;
    region.size_min = h;
    region.lo = {-a, 0.0};
    region.hi = {a, top};
    BoundaryLoop loop;
    loop.pieces.push_back({[M](double t) { return Vec2{t, M * t * t}; }, -a, a, BoundaryTag::floor});
    loop.pieces.push_back({[top](double t) { return Vec2{t, top}; }, a, -a, BoundaryTag::top});
    region.loops.push_back(loop);
    MesherOptions mo;
    mo.target_h = h;
    mo.seed = seed;
    pp.mesh = std::make_shared<const Mesh>(relax_mesh(region, mo));
    pp.system = std::make_shared<const FemSystem>(assemble(*pp.mesh));
    const Mesh& m = *pp.mesh;
    pp.w = solve_harmonic(m, *pp.system, [&](int i) { return m.tags[i] == BoundaryTag::top ? std::max(0.0, pp.top_value(m.vertices[i].x)) : 0.0; });
    return pp;
}

/// Local frame at a near-boundary hole: origin p, e_y from z(p) to p, e_x = e_y turned by -90 degrees.
struct LocalFrame {
    Vec2 origin, ex, ey;
    Vec2 to_world(Vec2 local) const { return origin + local.x * ex + local.y * ey; }
};

inline LocalFrame local_frame(const PuncturedDomain& pd) {
    const auto pr = project_to_boundary(pd.domain(), pd.center());
    const Vec2 ey = pr.inward_normal;
    return {pd.center(), {ey.y, -ey.x}, ey};
}

/// Midpoint-rule integral of u^2 over the rectangle [x0, x1] x [y0, y1] of a local frame.
inline double integrate_square_local(const SolutionProbe& u, const LocalFrame& f, double x0, double x1, double y0, double y1, int nx = 64,
                                     int ny = 32) {
    const double dx = (x1 - x0) / nx, dy = (y1 - y0) / ny;
    double s = 0.0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double val = u(f.to_world({x0 + (i + 0.5) * dx, y0 + (j + 0.5) * dy}));
            s += val * val;
        }
    }
    return s * dx * dy;
}

struct BarrierOptions {
    double boundary_t = 1.0;        ///< fixture hole sits along the normal at gamma(boundary_t)
    double clearance_ratio = 0.5;   ///< clearance = ratio * delta^2
    double delta = 0.06;            ///< hole used for the comparison w <= u
    std::vector<double> ratio_deltas{0.08, 0.06, 0.04};
    double M = 4.0;
    double d = 0.2;
    std::optional<double> Lambda;   ///< overrides the unpunctured flux minimum
    double target_h = 0.02;
    double hole_refine_factor = 8.0;
    std::uint64_t seed = 20240611;
    int probes_x = 41, probes_y = 31;
};

struct BarrierReport {
    double Lambda = 0.0;
    bool vacuous = false;            ///< Lambda == 0 makes the barrier identically zero
    std::size_t probes = 0;
    std::size_t violations = 0;      ///< probes with w > u + 1e-3 max u
    double max_excess = 0.0;         ///< max (w - u) / max u over probes
    std::vector<double> deltas;
    std::vector<double> ratios;      ///< (int over Qbar of u^2) / delta^4
    double sigma_est = 0.0;          ///< min ratio
    double ratio_spread = 0.0;       ///< max / min ratio
};

inline PuncturedDomain near_boundary_fixture(const SmoothDomain& dom, double t, double delta, double clearance) {
    return PuncturedDomain(dom, Hole{center_near_boundary(dom, t, delta, clearance), delta});
}

inline EigenSolution solve_near_boundary(const PuncturedDomain& pd, double target_h, double base_factor, std::uint64_t seed) {
    const double h = std::min(target_h, 0.9 * pd.delta());
    const double factor = std::clamp(std::max(base_factor, std::ceil(h / (0.9 * pd.clearance()))), 1.0, 64.0);
    return solve_lambda1(generate_mesh(pd, h, factor, seed));
}

inline BarrierReport barrier_comparison(const SmoothDomain& dom, const BarrierOptions& opt = {}) {
    BarrierReport rep;
    if (opt.Lambda) {
        rep.Lambda = *opt.Lambda;
    } else {
        const auto base = solve_lambda1(generate_domain_mesh(dom, opt.target_h, opt.seed));
        const auto f = boundary_flux(base, BoundaryTag::outer_boundary, {0.0, 0.0}, 1.0);
        rep.Lambda = f.min_value();
    }
    rep.vacuous = rep.Lambda == 0.0;
    if (rep.Lambda < 0.0) throw Error("barrier_comparison: negative flux constant");

    const PuncturedDomain pd = near_boundary_fixture(dom, opt.boundary_t, opt.delta, opt.clearance_ratio * opt.delta * opt.delta);
    const auto u = solve_near_boundary(pd, opt.target_h, opt.hole_refine_factor, opt.seed);
    const SolutionProbe probe(u);
    const LocalFrame frame = local_frame(pd);
    const ParabolaProblem par = solve_parabola(opt.M, opt.d, rep.Lambda, 0.0, opt.seed);
    const MeshLocator ploc(*par.mesh);
    // The parabola region, placed with its vertex at the top of the hole, must lie in the meshed domain.
    const Vec2 vertex{0.0, pd.delta()};
    for (std::size_t i = 0; i < par.mesh->vertices.size(); ++i) {
        if (par.mesh->tags[i] == BoundaryTag::interior) continue;
        const Vec2 q = frame.to_world(vertex + par.mesh->vertices[i]);
        if (dom.signed_distance(q) >= 0.0 || distance(q, pd.center()) < pd.delta() * (1.0 - 1e-9)) {
            throw GeometryError("barrier_comparison: translated parabola leaves the punctured domain");
        }
    }
    const double umax = *std::max_element(u.u.begin(), u.u.end());
    const double a = par.half_width(), top = 1.5 * opt.d;
    for (int j = 1; j < opt.probes_y; ++j) {
        for (int i = 1; i < opt.probes_x; ++i) {
            const Vec2 local{-a + 2.0 * a * i / opt.probes_x, top * j / opt.probes_y};
            if (local.y <= opt.M * local.x * local.x) continue;
            const auto hit = ploc.locate(local);
            if (hit.triangle < 0) continue;
            const double w = interpolate(ploc, par.w, local);
            const double uv = probe(frame.to_world(vertex + local));
            ++rep.probes;
            rep.max_excess = std::max(rep.max_excess, (w - uv) / umax);
            if (w > uv + 1e-3 * umax) ++rep.violations;
        }
    }
    for (double delta : opt.ratio_deltas) {
        const PuncturedDomain pk = near_boundary_fixture(dom, opt.boundary_t, delta, opt.clearance_ratio * delta * delta);
        const auto uk = solve_near_boundary(pk, opt.target_h, opt.hole_refine_factor, opt.seed);
        const SolutionProbe pr(uk);
        const double integral = integrate_square_local(pr, local_frame(pk), -delta, delta, 1.5 * delta, 2.0 * delta);
        rep.deltas.push_back(delta);
        rep.ratios.push_back(integral / std::pow(delta, 4));
    }
    const auto [mn, mx] = std::minmax_element(rep.ratios.begin(), rep.ratios.end());
    rep.sigma_est = *mn;
    rep.ratio_spread = *mn > 0.0 ? *mx / *mn : std::numeric_limits<double>::infinity();
    return rep;
}

/// Log-log fit of |arc_bottom(theta)| = C delta theta^k.
struct BottomScan {
    std::vector<double> thetas;
    std::vector<double> values;   ///< arc_bottom(theta)
    std::size_t fitted = 0;       ///< samples with nonzero value used by the fit
    bool fit_defined = false;
    double exponent = 0.0;
    double prefactor = 0.0;       ///< C in C delta theta^k
    double quadratic_constant = 0.0;  ///< max |arc_bottom| / (delta theta^2) over the grid
};

inline BottomScan bottom_bound_fit(std::span<const double> thetas, std::span<const double> bottoms, double delta) {
    BottomScan s;
    s.thetas.assign(thetas.begin(), thetas.end());
    s.values.assign(bottoms.begin(), bottoms.end());
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        s.quadratic_constant = std::max(s.quadratic_constant, std::abs(bottoms[i]) / (delta * thetas[i] * thetas[i]));
        if (bottoms[i] != 0.0) {
            lx.push_back(std::log(thetas[i]));
            ly.push_back(std::log(std::abs(bottoms[i])));
        }
    }
    s.fitted = lx.size();
    if (lx.size() < 2) return s;
    const double n = double(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n, my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (!(sxx > 0.0)) return s;
    s.fit_defined = true;
    s.exponent = sxy / sxx;
    s.prefactor = std::exp(my - s.exponent * mx) / delta;
    return s;
}

/// |arc_bottom| over a theta grid for one solution; `axis` overrides the projection axis.
inline BottomScan bottom_bound_scan(const EigenSolution& sol, const PuncturedDomain& pd, std::span<const double> thetas,
                                    std::optional<Vec2> axis = std::nullopt) {
    if (thetas.size() < 2) throw ConfigError("bottom_bound_scan: at least two angles are required for a fit");
    const HoleFlux flux = hole_flux(sol);
    std::vector<double> bottoms;
    for (double th : thetas) {
        const auto d = axis ? ArcDecomposition::with_axis(*axis, th) : arc_decomposition(pd, th);
        bottoms.push_back(arc_integrals(flux, d).arc_bottom);
    }
    return bottom_bound_fit(thetas, bottoms, pd.delta());
}

}  // namespace holeopt
