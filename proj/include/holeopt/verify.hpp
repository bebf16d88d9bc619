#pragma once

// Verification suites over the shipped fixtures. Each check yields one row
// (check_id, parameters, statistic, threshold, pass).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "holeopt/blowup_lab.hpp"
#include "holeopt/errors.hpp"
#include "holeopt/geometry.hpp"
#include "holeopt/optimizer.hpp"
#include "holeopt/shape_analysis.hpp"

namespace holeopt {

struct CheckRow {
    std::string check_id;
    std::string parameters;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

inline bool all_pass(const std::vector<CheckRow>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

struct VerifySettings {
    double target_h = 0.02;
    double hole_refine_factor = 8.0;
    std::uint64_t seed = 20240611;
    EigenOptions eigen;
};

namespace fixtures {

inline SmoothDomain ellipse() { return SmoothDomain::ellipse(1.4, 1.0); }
inline constexpr double kBoundaryT = 1.0;
inline constexpr double kClearanceRatio = 0.5;  ///< clearance = ratio * delta^2
inline constexpr double kConcentricDelta = 0.05;
inline const std::vector<double> kThetas{0.1, 0.2, 0.3, 0.4, 0.5};
inline const std::vector<double> kNearDeltas{0.05, 0.03};

inline PuncturedDomain near(double delta, double t = kBoundaryT) {
    return near_boundary_fixture(ellipse(), t, delta, kClearanceRatio * delta * delta);
}

inline PuncturedDomain concentric() { return PuncturedDomain(SmoothDomain::disk(1.0), Hole{{0.0, 0.0}, kConcentricDelta}); }

/// Ten boundary parameters spread around the ellipse, avoiding the symmetry axes.
inline std::vector<double> repulsion_ts() {
    std::vector<double> ts;
    for (int k = 0; k < 10; ++k) ts.push_back(kTwoPi * (k + 0.3) / 10.0);
    return ts;
}

}  // namespace fixtures

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline EigenSolution solve_fixture(const PuncturedDomain& pd, const VerifySettings& s) {
    const double h = std::min(s.target_h, 0.9 * pd.delta());
    const double factor = factor_for_clearance(h, pd.clearance(), s.hole_refine_factor);
    return solve_lambda1(generate_mesh(pd, h, factor, s.seed), s.eigen);
}

/// |Hadamard gradient| on the concentric disk fixture, where it vanishes exactly.
inline double concentric_noise(const VerifySettings& s) {
    return norm(hadamard_gradient(hole_flux(solve_fixture(fixtures::concentric(), s))));
}

}  // namespace detail

inline std::vector<CheckRow> verify_repulsion(const VerifySettings& s = {}) {
    std::vector<CheckRow> rows;
    for (double delta : fixtures::kNearDeltas) {
        for (double t : fixtures::repulsion_ts()) {
            const PuncturedDomain pd = fixtures::near(delta, t);
            const auto sol = detail::solve_fixture(pd, s);
            const Vec2 axis = arc_decomposition(pd, 0.25 * kPi).axis;
            const double d = hadamard_derivative(hole_flux(sol), axis);
            rows.push_back({"repulsion", "delta=" + detail::fmt(delta) + ";t=" + detail::fmt(t) + ";clearance=" + detail::fmt(pd.clearance()),
                            d, 0.0, d > 0.0});
        }
    }
    return rows;
}

/// Bottom-arc scaling on the near fixture against the concentric control, plus C theta^2 < c theta.
inline std::vector<CheckRow> verify_bottom(const VerifySettings& s = {}) {
    std::vector<CheckRow> rows;
    const auto& th = fixtures::kThetas;
    const PuncturedDomain pd = fixtures::near(0.05);
    const auto sol = detail::solve_fixture(pd, s);
    const HoleFlux flux = hole_flux(sol);
    std::vector<double> bottoms, tops;
    for (double t : th) {
        const auto r = arc_integrals(flux, arc_decomposition(pd, t));
        bottoms.push_back(r.arc_bottom);
        tops.push_back(r.arc_top);
    }
    const BottomScan near = bottom_bound_fit(th, bottoms, pd.delta());
    rows.push_back({"bottom_exponent_near", "delta=0.05;fitted=" + std::to_string(near.fitted) + ";thetas=0.1..0.5", near.exponent, 1.8,
                    near.fit_defined && near.exponent >= 1.8});

    const PuncturedDomain cc = fixtures::concentric();
    const auto csol = detail::solve_fixture(cc, s);
    const BottomScan ctrl = bottom_bound_scan(csol, cc, th, Vec2{0.0, 1.0});
    rows.push_back({"bottom_exponent_concentric", "delta=" + detail::fmt(cc.delta()) + ";axis=(0,1)", ctrl.exponent, 1.3,
                    ctrl.fit_defined && ctrl.exponent <= 1.3});

    // C from the bottom scan, c = min arc_top / (theta delta); look for theta with C theta^2 < c theta.
    double c = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < th.size(); ++i) c = std::min(c, tops[i] / (th[i] * pd.delta()));
    std::size_t witnesses = 0;
    for (double t : th) {
        if (near.quadratic_constant * t * t < c * t) ++witnesses;
    }
    rows.push_back({"combination", "C=" + detail::fmt(near.quadratic_constant) + ";c=" + detail::fmt(c), double(witnesses), 1.0,
                    witnesses >= 1});
    return rows;
}

/// arc_top / (theta delta) bounded below by a positive constant across the grid.
inline std::vector<CheckRow> verify_top(const VerifySettings& s = {}) {
    std::vector<CheckRow> rows;
    for (double delta : fixtures::kNearDeltas) {
        const PuncturedDomain pd = fixtures::near(delta);
        const HoleFlux flux = hole_flux(detail::solve_fixture(pd, s));
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (double t : fixtures::kThetas) {
            const double c = arc_integrals(flux, arc_decomposition(pd, t)).arc_top / (t * delta);
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        rows.push_back({"top_c_min", "delta=" + detail::fmt(delta), lo, 0.0, lo > 0.0});
        rows.push_back({"top_c_ratio", "delta=" + detail::fmt(delta) + ";c_max=" + detail::fmt(hi), hi > 0.0 ? lo / hi : 0.0, 0.3,
                        hi > 0.0 && lo / hi >= 0.3});
    }
    return rows;
}

/// Right and left side arcs are nonnegative up to the concentric noise floor.
inline std::vector<CheckRow> verify_sides(const VerifySettings& s = {}) {
    std::vector<CheckRow> rows;
    const double eps = detail::concentric_noise(s);
    for (double delta : fixtures::kNearDeltas) {
        const PuncturedDomain pd = fixtures::near(delta);
        const HoleFlux flux = hole_flux(detail::solve_fixture(pd, s));
        for (double t : fixtures::kThetas) {
            const auto r = arc_integrals(flux, arc_decomposition(pd, t));
            const std::string par = "delta=" + detail::fmt(delta) + ";theta=" + detail::fmt(t);
            rows.push_back({"sides_right", par, r.arc_side_right, -eps, r.arc_side_right >= -eps});
            rows.push_back({"sides_left", par, r.arc_side_left, -eps, r.arc_side_left >= -eps});
        }
    }
    return rows;
}

inline std::vector<CheckRow> verify_barrier(const VerifySettings& s = {}) {
    BarrierOptions o;
    o.target_h = s.target_h;
    o.hole_refine_factor = s.hole_refine_factor;
    o.seed = s.seed;
    const BarrierReport r = barrier_comparison(fixtures::ellipse(), o);
    const std::string par = "M=" + detail::fmt(o.M) + ";d=" + detail::fmt(o.d) + ";Lambda=" + detail::fmt(r.Lambda);
    return {
        {"barrier_lambda", par, r.Lambda, 0.0, r.Lambda > 0.0},
        {"barrier_violations", par + ";probes=" + std::to_string(r.probes), double(r.violations), 0.0, r.probes > 0 && r.violations == 0},
        {"barrier_sigma", "deltas=0.08/0.06/0.04", r.sigma_est, 0.0, r.sigma_est > 0.0},
        {"barrier_ratio_spread", "deltas=0.08/0.06/0.04", r.ratio_spread, 5.0, r.ratio_spread <= 5.0},
    };
}

struct FlucherSettings {
    std::vector<double> radii{0.1, 0.07, 0.05, 0.035, 0.02};
    Vec2 peak{0.0, 0.0};
    Vec2 off_peak{0.5, 0.0};
    double target_h = 0.015;
};

inline std::vector<CheckRow> verify_flucher(const VerifySettings& s = {}, const FlucherSettings& f = {}) {
    FlucherOptions o;
    o.target_h = std::min(f.target_h, s.target_h);
    o.hole_refine_factor = s.hole_refine_factor;
    o.seed = s.seed;
    o.eigen = s.eigen;
    const SmoothDomain disk = SmoothDomain::disk(1.0);
    const FlucherFit at_peak = flucher_fit(disk, f.peak, f.radii, o);
    const FlucherFit off = flucher_fit(disk, f.off_peak, f.radii, o);
    const double rel = std::abs(at_peak.a_fit / at_peak.reference - 1.0);
    return {
        {"flucher_coefficient", "x=(0,0);a_fit=" + detail::fmt(at_peak.a_fit) + ";reference=" + detail::fmt(at_peak.reference), rel, 0.15,
         rel <= 0.15},
        {"flucher_peak_ordering", "a_peak=" + detail::fmt(at_peak.a_fit) + ";a_off=" + detail::fmt(off.a_fit), at_peak.a_fit - off.a_fit,
         0.0, at_peak.a_fit > off.a_fit},
    };
}

struct BlowupSettings {
    double R = 8.0;
    double alpha = 1.0;
    double theta0 = kPi / 6.0;
    std::vector<double> radii{2.0, 3.0, 4.0, 5.0};
};

inline std::vector<CheckRow> blowup_checks(const HarmonicSolution& sol, const BlowupSettings& b) {
    std::vector<CheckRow> rows;
    const std::string base = "R=" + detail::fmt(b.R) + ";alpha=" + detail::fmt(b.alpha);
    const HarmonicChecks hc = harmonic_checks(sol);
    rows.push_back({"harmonic_min", base, hc.min_value, -1e-10, hc.min_value >= -1e-10});
    rows.push_back({"harmonic_max_principle", base, hc.max_interior - hc.max_outer, 1e-12, hc.max_interior <= hc.max_outer + 1e-12});
    rows.push_back({"harmonic_zero_trace", base, hc.max_zero_trace, 0.0, hc.max_zero_trace == 0.0});
    const double mirror = mirror_defect(sol);
    rows.push_back({"mirror_symmetry", base, mirror, 1e-3, mirror <= 1e-3});

    const Mesh& m = sol.mesh();
    double excess = 0.0;
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        excess = std::max(excess, sol.v[i] - 1.05 * b.alpha * (m.vertices[i].y + 1.0));
    }
    rows.push_back({"linear_bound", base + ";C=1.05", excess, 0.0, excess <= 0.0});

    const auto probes = default_probes(*sol.domain);
    const auto ad = angular_derivative(sol, probes);
    double worst_right = std::numeric_limits<double>::infinity(), worst_axis = 0.0;
    std::size_t n_right = 0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        if (probes[i].x > 0.2) {
            worst_right = std::min(worst_right, ad.values[i]);
            ++n_right;
        }
        if (probes[i].x == 0.0) worst_axis = std::max(worst_axis, std::abs(ad.values[i]));
    }
    const double gscale = ad.max_gradient;
    rows.push_back({"angular_monotone", base + ";probes=" + std::to_string(n_right), gscale > 0.0 ? worst_right / gscale : 0.0, -1e-3,
                    n_right > 0 && worst_right >= -1e-3 * gscale});
    rows.push_back({"angular_axis", base, gscale > 0.0 ? worst_axis / gscale : 0.0, 1e-3, worst_axis <= 1e-3 * gscale});

    const HopfArcReport hopf = hopf_arc_check(sol, b.theta0);
    rows.push_back({"hopf_gamma", base + ";theta0=" + detail::fmt(b.theta0), hopf.gamma_est, 0.0, hopf.gamma_est > 0.0});
    const SideTopIntegrals st = side_and_top_integrals(sol, b.theta0);
    rows.push_back({"side_integral_right", base, st.sides_right, 0.0, st.sides_right >= 0.0});
    rows.push_back({"side_integral_left", base, st.sides_left, 0.0, st.sides_left >= 0.0});
    const double sym = std::abs(st.sides_right - st.sides_left) / std::max(std::abs(st.sides_right), 1e-300);
    rows.push_back({"side_integral_symmetry", base, sym, 1e-3, sym <= 1e-3});
    rows.push_back({"top_integral", base, st.top, 0.0, st.top > 0.0});

    // Slope at r = R / 2 against the linear profile.
    std::vector<double> radii = b.radii;
    if (std::find(radii.begin(), radii.end(), 0.5 * b.R) == radii.end()) radii.push_back(0.5 * b.R);
    std::sort(radii.begin(), radii.end());
    const auto bd = blowdown_check(sol, radii);
    for (const auto& row : bd) {
        if (row.radius != 0.5 * b.R) continue;
        const double rel = b.alpha != 0.0 ? std::abs(row.slope - b.alpha) / std::abs(b.alpha) : std::abs(row.slope);
        rows.push_back({"blowdown_slope", base + ";r=" + detail::fmt(row.radius) + ";slope=" + detail::fmt(row.slope), rel, 0.05,
                        rel <= 0.05});
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < bd.size(); ++i) decreasing = decreasing && bd[i].residual < bd[i - 1].residual;
    rows.push_back({"blowdown_residual_trend", base + ";radii=" + std::to_string(bd.size()), bd.empty() ? 0.0 : bd.back().residual, 0.0,
                    decreasing});
    return rows;
}

inline std::vector<CheckRow> verify_blowup(const VerifySettings& s = {}, const BlowupSettings& b = {}) {
    TruncatedKOptions k;
    k.R = b.R;
    k.seed = s.seed;
    return blowup_checks(solve_blowup(b.R, linear_alpha(b.alpha), k), b);
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"repulsion", "bottom", "top", "sides", "barrier", "flucher", "blowup", "all"};
    return names;
}

/// Runs one suite, or every suite for "all" with up to `jobs` suites in flight; rows keep suite order.
inline std::vector<CheckRow> verify_all(const std::string& suite, const VerifySettings& s = {}, int jobs = 1) {
    static const std::map<std::string, std::function<std::vector<CheckRow>(const VerifySettings&)>> table{
        {"repulsion", [](const VerifySettings& v) { return verify_repulsion(v); }},
        {"bottom", [](const VerifySettings& v) { return verify_bottom(v); }},
        {"top", [](const VerifySettings& v) { return verify_top(v); }},
        {"sides", [](const VerifySettings& v) { return verify_sides(v); }},
        {"barrier", [](const VerifySettings& v) { return verify_barrier(v); }},
        {"flucher", [](const VerifySettings& v) { return verify_flucher(v); }},
        {"blowup", [](const VerifySettings& v) { return verify_blowup(v); }},
    };
    if (suite != "all") {
        const auto it = table.find(suite);
        if (it == table.end()) throw ConfigError("verify: unknown suite '" + suite + "'");
        return it->second(s);
    }
    std::vector<std::string> names;
    for (const auto& name : suite_names()) {
        if (name != "all") names.push_back(name);
    }
    std::vector<std::vector<CheckRow>> parts(names.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (std::size_t k = next++; k < names.size(); k = next++) {
            try {
                parts[k] = table.at(names[k])(s);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::min<int>(jobs, int(names.size())); ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    std::vector<CheckRow> rows;
    for (auto& part : parts) rows.insert(rows.end(), part.begin(), part.end());
    return rows;
}

}  // namespace holeopt
