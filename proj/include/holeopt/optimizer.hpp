#pragma once

// Projected gradient ascent of p -> lambda_1(Omega - B_delta(p)) and a
// brute-force grid scan.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "holeopt/eigensolver.hpp"
#include "holeopt/errors.hpp"
#include "holeopt/geometry.hpp"
#include "holeopt/mesher.hpp"
#include "holeopt/shape_analysis.hpp"

namespace holeopt {

enum class Termination { gradient_small, step_small, max_iter, boundary_stall };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::gradient_small: return "gradient_small";
        case Termination::step_small: return "step_small";
        case Termination::max_iter: return "max_iter";
        case Termination::boundary_stall: return "boundary_stall";
    }
    return "unknown";
}

struct Iterate {
    Vec2 p;
    double lambda1 = 0.0;
    Vec2 gradient;
    double clearance = 0.0;
    double step = 0.0;  ///< step parameter s that produced this iterate (0 for the start)
    bool projected = false;
};

struct Trajectory {
    std::vector<Iterate> iterates;
    Termination termination = Termination::max_iter;
    double g_tol = 0.0;
};

/// Mesh resolution shared by the optimizer and the scan.
struct Resolution {
    double target_h = 0.0;          ///< 0 selects min(0.05, delta / 2)
    double hole_refine_factor = 8.0;
    std::uint64_t seed = 20240611;
    EigenOptions eigen;

    double h_for(double delta) const { return target_h > 0.0 ? target_h : std::min(0.05, 0.5 * delta); }
};

/// Refinement factor that resolves a gap of width `clearance` next to the hole.
inline double factor_for_clearance(double target_h, double clearance, double base_factor) {
    const double needed = std::ceil(target_h / (0.9 * clearance));
    return std::clamp(std::max(base_factor, needed), 1.0, 64.0);
}

/// |Hadamard gradient| for a concentric hole in the unit disk, where the exact value is 0.
inline double gradient_noise_floor(double delta, const Resolution& res) {
    const PuncturedDomain pd(SmoothDomain::disk(1.0), Hole{{0.0, 0.0}, delta});
    const auto sol = solve_lambda1(generate_mesh(pd, res.h_for(delta), res.hole_refine_factor, res.seed), res.eigen);
    return norm(hadamard_gradient(hole_flux(sol)));
}

struct OptimizeOptions {
    int max_iter = 40;
    double g_tol = 0.0;       ///< 0 selects 3x the concentric-disk noise floor
    double step0 = 0.02;      ///< initial s in p + s G
    double shrink = 0.5;
    double sufficient_increase = 0.25;  ///< accept when the gain is at least this fraction of G . (p' - p)
    double margin = -1.0;     ///< feasibility margin; negative selects 0.1 delta^2
    Resolution resolution;
};

namespace detail {

// Projection onto {dist(p, boundary) >= delta + margin} along the boundary normal.
inline Vec2 project_feasible(const SmoothDomain& dom, Vec2 p, double need, bool* active) {
    const BoundaryPoint bp = dom.nearest(p);
    const double depth = -dom.signed_distance(p);
    if (depth >= need) {
        *active = false;
        return p;
    }
    *active = true;
    return dom.point(bp.t) - need * dom.outward_normal(bp.t);
}

struct Evaluated {
    Mesh mesh;
    EigenSolution sol;
    HoleFlux flux;
};

inline Evaluated evaluate_at(const SmoothDomain& dom, Vec2 p, double delta, const Resolution& res) {
    const PuncturedDomain pd(dom, Hole{p, delta});
    const double h = std::min(res.h_for(delta), 64.0 * 0.9 * pd.clearance());
    const double factor = factor_for_clearance(h, pd.clearance(), res.hole_refine_factor);
    Mesh m = generate_mesh(pd, h, factor, res.seed);
    auto sol = solve_lambda1(m, res.eigen);
    auto flux = hole_flux(sol);
    return {std::move(m), std::move(sol), std::move(flux)};
}

}  // namespace detail

inline Trajectory optimize_hole(const SmoothDomain& dom, double delta, Vec2 p0, OptimizeOptions opt = {}) {
    if (!(delta > 0.0)) throw ConfigError("optimize_hole: delta must be positive");
    if (!(contains_ball(dom, Hole{p0, delta}) > 0.0)) throw InfeasibleStart("optimize_hole: start ball is not inside the domain");
    if (!(opt.shrink > 0.0 && opt.shrink < 1.0)) throw ConfigError("optimize_hole: shrink must lie in (0, 1)");
    if (!(opt.step0 > 0.0)) throw ConfigError("optimize_hole: step0 must be positive");
    if (!(opt.sufficient_increase >= 0.0 && opt.sufficient_increase < 1.0)) {
        throw ConfigError("optimize_hole: sufficient_increase must lie in [0, 1)");
    }
    const double margin = opt.margin >= 0.0 ? opt.margin : 0.1 * delta * delta;
    Trajectory tr;
    tr.g_tol = opt.g_tol > 0.0 ? opt.g_tol : 3.0 * gradient_noise_floor(delta, opt.resolution);

    auto cur = detail::evaluate_at(dom, p0, delta, opt.resolution);
    Vec2 p = p0;
    Iterate first{p, cur.sol.lambda1, hadamard_gradient(cur.flux), contains_ball(dom, Hole{p, delta}), 0.0, false};
    tr.iterates.push_back(first);
    double s_prev = opt.step0;
    for (int it = 0; it < opt.max_iter; ++it) {
        const Iterate& here = tr.iterates.back();
        const Vec2 G = here.gradient;
        if (norm(G) <= tr.g_tol) {
            tr.termination = Termination::gradient_small;
            return tr;
        }
        double s = std::min(opt.step0, 2.0 * s_prev);
        bool accepted = false;
        bool active = false;
        Vec2 next;
        while (s * norm(G) >= 1e-6 * delta) {
            next = detail::project_feasible(dom, p + s * G, delta + margin, &active);
            // Compare on the transported mesh so both values share one discretization.
            double trial;
            auto moved = transport_mesh(cur.mesh, dom, next - p, 15.0);
            if (moved) {
                trial = solve_lambda1(std::move(*moved), opt.resolution.eigen).lambda1;
            } else {
                trial = detail::evaluate_at(dom, next, delta, opt.resolution).sol.lambda1;
            }
            const double predicted = dot(G, next - p);
            const double need = predicted > 0.0 ? opt.sufficient_increase * predicted : 0.0;
            if (trial - here.lambda1 > need) {
                accepted = true;
                break;
            }
            s *= opt.shrink;
        }
        if (!accepted) {
            tr.termination = Termination::step_small;
            return tr;
        }
        const double moved_by = distance(next, p);
        s_prev = s;
        p = next;
        cur = detail::evaluate_at(dom, p, delta, opt.resolution);
        tr.iterates.push_back(Iterate{p, cur.sol.lambda1, hadamard_gradient(cur.flux), contains_ball(dom, Hole{p, delta}), s, active});
        if (active && moved_by < 1e-4 * delta) {
            tr.termination = Termination::boundary_stall;
            return tr;
        }
    }
    tr.termination = Termination::max_iter;
    return tr;
}

struct GridSpec {
    Vec2 lo, hi;
    int nx = 9;
    int ny = 9;
};

struct ScanPoint {
    Vec2 p;
    double clearance = 0.0;
    double lambda1 = 0.0;
};

struct Landscape {
    std::vector<ScanPoint> points;  ///< feasible nodes in row-major grid order
    std::size_t argmax = 0;
    double spacing_x = 0.0, spacing_y = 0.0;
};

/// lambda_1 at every grid node whose ball fits (clearance > 0); `jobs` worker threads.
inline Landscape landscape_scan(const SmoothDomain& dom, double delta, const GridSpec& grid, const Resolution& res = {},
                                int jobs = 1) {
    if (grid.nx < 2 || grid.ny < 2) throw ConfigError("landscape_scan: grid needs at least 2 x 2 nodes");
    Landscape out;
    out.spacing_x = (grid.hi.x - grid.lo.x) / (grid.nx - 1);
    out.spacing_y = (grid.hi.y - grid.lo.y) / (grid.ny - 1);
    const double h = res.h_for(delta);
    if (std::min(out.spacing_x, out.spacing_y) < 2.0 * h) throw ConfigError("landscape_scan: grid spacing must be >= 2 target_h");
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const Vec2 p{grid.lo.x + i * out.spacing_x, grid.lo.y + j * out.spacing_y};
            const double c = contains_ball(dom, Hole{p, delta});
            if (c > 0.0) out.points.push_back(ScanPoint{p, c, 0.0});
        }
    }
    if (out.points.empty()) throw ConfigError("landscape_scan: no feasible grid node");
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (std::size_t k = next++; k < out.points.size(); k = next++) {
            try {
                out.points[k].lambda1 = detail::evaluate_at(dom, out.points[k].p, delta, res).sol.lambda1;
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(jobs, int(out.points.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    for (std::size_t k = 1; k < out.points.size(); ++k) {
        if (out.points[k].lambda1 > out.points[out.argmax].lambda1) out.argmax = k;
    }
    return out;
}

}  // namespace holeopt
