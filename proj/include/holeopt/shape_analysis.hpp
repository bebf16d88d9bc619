#pragma once

// Hadamard derivative of the first eigenvalue under hole translation, its
// restriction to the top/bottom/side arcs, a finite-difference check, and the
// small-hole asymptotic fit.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "holeopt/eigensolver.hpp"
#include "holeopt/errors.hpp"
#include "holeopt/geometry.hpp"
#include "holeopt/mesher.hpp"

namespace holeopt {

/// Angular integral of the periodic piecewise-linear interpolant of samples
/// (angles increasing in [0, 2 pi)). Intervals may start anywhere and wrap.
class PeriodicLinear {
public:
    PeriodicLinear(std::span<const double> angles, std::span<const double> values)
        : phi_(angles.begin(), angles.end()), f_(values.begin(), values.end()) {
        const std::size_t n = phi_.size();
        if (n < 2) throw Error("periodic interpolant needs at least two samples");
        cum_.assign(n + 1, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            cum_[k + 1] = cum_[k] + 0.5 * (f_[k] + f_[(k + 1) % n]) * width(k);
        }
    }

    double total() const { return cum_.back(); }

    /// Integral over [a, b] with b - a in [0, 2 pi].
    double integrate(double a, double b) const { return antiderivative(b) - antiderivative(a); }

private:
    std::vector<double> phi_, f_, cum_;

    double width(std::size_t k) const {
        const std::size_t n = phi_.size();
        return k + 1 < n ? phi_[k + 1] - phi_[k] : phi_[0] + kTwoPi - phi_[n - 1];
    }

    // G(x) = integral from phi_0 to x, extended by G(x + 2 pi) = G(x) + total.
    double antiderivative(double x) const {
        const double period = std::floor((x - phi_[0]) / kTwoPi);
        double y = x - period * kTwoPi;  // in [phi_0, phi_0 + 2 pi)
        if (y < phi_[0]) y = phi_[0];
        const std::size_t n = phi_.size();
        auto it = std::upper_bound(phi_.begin(), phi_.end(), y);
        const std::size_t k = std::size_t(it - phi_.begin()) - 1;
        const double w = width(k);
        const double s = std::min(y - phi_[k], w);
        const double f0 = f_[k], f1 = f_[(k + 1) % n];
        const double part = f0 * s + 0.5 * (f1 - f0) * s * s / w;
        return period * total() + cum_[k] + part;
    }
};

/// Samples of (dU/dnu)^2 <v, nu> on the hole circle.
inline std::vector<double> hadamard_integrand(const HoleFlux& flux, Vec2 v) {
    std::vector<double> f(flux.values.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        f[k] = flux.values[k] * flux.values[k] * dot(v, unit_at(flux.angles[k]));
    }
    return f;
}

/// d lambda / dt for the hole moving with velocity v.
inline double hadamard_derivative(const HoleFlux& flux, Vec2 v) {
    const auto f = hadamard_integrand(flux, v);
    return flux.radius * PeriodicLinear(flux.angles, f).total();
}

inline double hadamard_derivative(const EigenSolution& sol, Vec2 v) { return hadamard_derivative(hole_flux(sol), v); }

/// Both gradient components at once.
inline Vec2 hadamard_gradient(const HoleFlux& flux) {
    return {hadamard_derivative(flux, {1.0, 0.0}), hadamard_derivative(flux, {0.0, 1.0})};
}

struct ShapeReport {
    Vec2 direction;
    double theta = 0.0;
    double hadamard_total = 0.0;
    double arc_top = 0.0;
    double arc_bottom = 0.0;
    double arc_sides = 0.0;
    double arc_side_right = 0.0;
    double arc_side_left = 0.0;
    double fd_value = std::numeric_limits<double>::quiet_NaN();
    double fd_noise = std::numeric_limits<double>::quiet_NaN();

    /// |top + bottom + sides - total| relative to the arc magnitudes.
    double decomposition_defect() const {
        const double scale = std::max({std::abs(arc_top) + std::abs(arc_bottom) + std::abs(arc_sides), 1e-300});
        return std::abs(arc_top + arc_bottom + arc_sides - hadamard_total) / scale;
    }
};

/// Arc integrals of the Hadamard integrand with v = decomposition axis.
inline ShapeReport arc_integrals(const HoleFlux& flux, const ArcDecomposition& d) {
    const auto f = hadamard_integrand(flux, d.axis);
    const PeriodicLinear pl(flux.angles, f);
    auto on = [&](const AngularInterval& a) { return flux.radius * pl.integrate(a.start, a.end); };
    ShapeReport r;
    r.direction = d.axis;
    r.theta = d.theta;
    r.hadamard_total = flux.radius * pl.total();
    r.arc_top = on(d.top());
    r.arc_bottom = on(d.bottom());
    r.arc_side_right = on(d.side_right());
    r.arc_side_left = on(d.side_left());
    r.arc_sides = r.arc_side_right + r.arc_side_left;
    return r;
}

inline ShapeReport arc_integrals(const EigenSolution& sol, const ArcDecomposition& d) { return arc_integrals(hole_flux(sol), d); }

/// Moves the hole of a mesh by `shift`, carrying interior vertices with the
/// blended field shift * b / (a + b), a = distance to the hole circle,
/// b = distance to the outer boundary. Outer vertices stay fixed and hole
/// vertices translate rigidly. Returns nothing if a triangle degrades below
/// `min_angle_deg` or inverts.
inline std::optional<Mesh> transport_mesh(const Mesh& m, const SmoothDomain& dom, Vec2 shift, double min_angle_deg = 0.0) {
    if (!(m.hole_radius > 0.0)) throw Error("transport_mesh: mesh has no hole");
    Mesh out = m;
    for (std::size_t v = 0; v < m.vertices.size(); ++v) {
        const Vec2 x = m.vertices[v];
        double chi = 0.0;
        if (m.tags[v] == BoundaryTag::hole_boundary) {
            chi = 1.0;
        } else if (m.tags[v] == BoundaryTag::interior) {
            const double a = std::max(0.0, distance(x, m.hole_center) - m.hole_radius);
            const double b = std::max(0.0, -dom.signed_distance(x));
            chi = a + b > 0.0 ? b / (a + b) : 0.0;
        }
        out.vertices[v] = x + chi * shift;
    }
    out.hole_center = m.hole_center + shift;
    for (std::size_t t = 0; t < out.triangles.size(); ++t) {
        if (!(out.signed_area(t) > 0.0)) return std::nullopt;
        if (min_angle_deg > 0.0) {
            const auto& tr = out.triangles[t];
            if (triangle_min_angle_deg(out.vertices[tr[0]], out.vertices[tr[1]], out.vertices[tr[2]]) < min_angle_deg) {
                return std::nullopt;
            }
        }
    }
    return out;
}

enum class FdMode { transport, remesh };

struct FdOptions {
    double step = 0.0;  ///< 0 selects 1e-3 * delta
    double target_h = 0.01;
    double hole_refine_factor = 8.0;
    std::uint64_t seed = 20240611;
    FdMode mode = FdMode::transport;
    EigenOptions eigen;
};

struct FdResult {
    double value = 0.0;       ///< central difference at `step`
    double half_step = 0.0;   ///< central difference at `step / 2`
    double noise = 0.0;       ///< |value - half_step|
    double step = 0.0;
};

/// Central-difference derivative of lambda_1 along v for the hole centre.
inline FdResult fd_derivative(const PuncturedDomain& pd, Vec2 v, const FdOptions& opt = {}) {
    const double step = opt.step > 0.0 ? opt.step : 1e-3 * pd.delta();
    if (!(step >= 1e-4 * pd.delta() && step <= 1e-2 * pd.delta())) {
        throw ConfigError("fd_derivative: step must lie in [1e-4, 1e-2] * delta");
    }
    v = normalized(v);
    for (double s : {step, -step}) {
        if (!(contains_ball(pd.domain(), Hole{pd.center() + s * v, pd.delta()}) > 0.0)) {
            throw GeometryError("fd_derivative: shifted hole leaves the domain");
        }
    }
    std::optional<Mesh> base;
    if (opt.mode == FdMode::transport) base = generate_mesh(pd, opt.target_h, opt.hole_refine_factor, opt.seed);
    auto lambda_at = [&](double s) {
        if (opt.mode == FdMode::transport) {
            auto moved = transport_mesh(*base, pd.domain(), s * v);
            if (!moved) throw MeshFailure("fd_derivative: transported mesh inverted");
            return solve_lambda1(std::move(*moved), opt.eigen).lambda1;
        }
        const PuncturedDomain shifted = pd.moved_to(pd.center() + s * v);
        return solve_lambda1(generate_mesh(shifted, opt.target_h, opt.hole_refine_factor, opt.seed), opt.eigen).lambda1;
    };
    FdResult r;
    r.step = step;
    r.value = (lambda_at(step) - lambda_at(-step)) / (2.0 * step);
    r.half_step = (lambda_at(0.5 * step) - lambda_at(-0.5 * step)) / step;
    r.noise = std::abs(r.value - r.half_step);
    return r;
}

/// Two-parameter fit lambda(r) = lambda_0 + a / (-log r + c).
struct FlucherFit {
    double a_fit = 0.0;
    double c_fit = 0.0;
    double reference = 0.0;  ///< 2 pi u_0(x)^2 from the unpunctured solve
    double lambda0 = 0.0;
    std::vector<double> radii;
    std::vector<double> lambdas;
    int iterations = 0;
    double rms_residual = 0.0;
};

/// Gauss-Newton fit of (a, c) given lambda_0 and samples lambda(r_i).
inline FlucherFit fit_log_model(double lambda0, std::span<const double> radii, std::span<const double> lambdas) {
    const std::size_t n = radii.size();
    if (n < 2 || lambdas.size() != n) throw ConfigError("flucher fit: need matching radius/eigenvalue samples");
    FlucherFit fit;
    fit.lambda0 = lambda0;
    fit.radii.assign(radii.begin(), radii.end());
    fit.lambdas.assign(lambdas.begin(), lambdas.end());
    std::vector<double> L(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(radii[i] > 0.0 && radii[i] < 1.0)) throw ConfigError("flucher fit: radii must lie in (0, 1)");
        L[i] = -std::log(radii[i]);
        y[i] = lambdas[i] - lambda0;
    }
    // Start from the c = 0 least-squares slope.
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += y[i] / L[i];
        den += 1.0 / (L[i] * L[i]);
    }
    double a = num / den, c = 0.0;
    for (int it = 1; it <= 100; ++it) {
        Eigen::MatrixXd J(n, 2);
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double q = L[i] + c;
            if (!(q > 0.0)) throw FitDiverged("flucher fit: model pole crossed");
            J(Eigen::Index(i), 0) = 1.0 / q;
            J(Eigen::Index(i), 1) = -a / (q * q);
            r[Eigen::Index(i)] = y[i] - a / q;
        }
        const Eigen::Matrix2d JtJ = J.transpose() * J;
        const double scale = std::max(JtJ.diagonal().maxCoeff(), 1e-300);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
        const auto sv = svd.singularValues();
        if (!(sv[1] > 1e-10 * sv[0]) || !(JtJ.determinant() > 1e-20 * scale * scale)) {
            throw FitDiverged("flucher fit: singular design (radii not distinct?)");
        }
        const Eigen::Vector2d dx = JtJ.ldlt().solve(J.transpose() * r);
        // Damped step keeps -log r + c positive.
        double t = 1.0;
        double min_q = std::numeric_limits<double>::infinity();
        for (double l : L) min_q = std::min(min_q, l + c);
        if (min_q + dx[1] <= 0.0) t = 0.5 * min_q / std::abs(dx[1]);
        a += t * dx[0];
        c += t * dx[1];
        fit.iterations = it;
        if (std::abs(t * dx[0]) <= 1e-12 * std::max(1.0, std::abs(a)) && std::abs(t * dx[1]) <= 1e-12 * std::max(1.0, std::abs(c))) {
            fit.a_fit = a;
            fit.c_fit = c;
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) ss += std::pow(y[i] - a / (L[i] + c), 2);
            fit.rms_residual = std::sqrt(ss / double(n));
            return fit;
        }
    }
    throw FitDiverged("flucher fit: Gauss-Newton did not converge in 100 iterations");
}

struct FlucherOptions {
    double target_h = 0.015;
    double hole_refine_factor = 8.0;
    std::uint64_t seed = 20240611;
    EigenOptions eigen;
};

/// Small-hole asymptotic fit at x over decreasing radii.
inline FlucherFit flucher_fit(const SmoothDomain& dom, Vec2 x, std::span<const double> radii, const FlucherOptions& opt = {}) {
    if (radii.size() < 4) throw ConfigError("flucher_fit: at least four radii are required");
    for (std::size_t i = 1; i < radii.size(); ++i) {
        if (!(radii[i] <= radii[i - 1])) throw ConfigError("flucher_fit: radii must be decreasing");
    }
    const auto base = solve_lambda1(generate_domain_mesh(dom, opt.target_h, opt.seed), opt.eigen);
    const double u0 = evaluate_u(base, x);
    std::vector<double> lambdas;
    for (double r : radii) {
        const PuncturedDomain pd(dom, Hole{x, r});
        const double h = std::min(opt.target_h, 0.9 * r);
        lambdas.push_back(solve_lambda1(generate_mesh(pd, h, opt.hole_refine_factor, opt.seed), opt.eigen).lambda1);
    }
    FlucherFit fit = fit_log_model(base.lambda1, radii, lambdas);
    fit.reference = kTwoPi * u0 * u0;
    return fit;
}

}  // namespace holeopt
