#pragma once

// First Dirichlet eigenpair by inverse iteration, P1 evaluation, and the
// consistent normal derivative on the hole boundary.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "holeopt/errors.hpp"
#include "holeopt/fem.hpp"
#include "holeopt/geometry.hpp"
#include "holeopt/mesh.hpp"
#include "holeopt/mesher.hpp"

namespace holeopt {

struct EigenOptions {
    double tol = 1e-10;
    int max_iter = 500;
};

/// Smallest eigenpair of the discrete Dirichlet problem on a mesh.
struct EigenSolution {
    std::shared_ptr<const Mesh> mesh;
    std::shared_ptr<const FemSystem> system;
    double lambda1 = 0.0;
    std::vector<double> u;  ///< nodal values on every vertex, zero on tagged vertices
    double residual = 0.0;  ///< lumped dual norm of K u - lambda M u, relative to lambda
    bool normalized = false;
    int iterations = 0;
};

/// Inverse iteration ran out of steps; carries the last iterate.
class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, EigenSolution best) : Error(what), best_(std::move(best)) {}
    const EigenSolution& best() const { return best_; }

private:
    EigenSolution best_;
};

inline EigenSolution solve_lambda1(std::shared_ptr<const Mesh> mesh, const EigenOptions& opt = {}) {
    auto sys = std::make_shared<const FemSystem>(assemble(*mesh));
    const Eigen::Index ni = Eigen::Index(sys->free_vertices.size());
    if (ni == 0) throw Error("eigensolver: mesh has no interior vertices");
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(sys->K_ii);
    if (ldlt.info() != Eigen::Success) throw Error("eigensolver: stiffness factorization failed");

    Vector lumped = Vector::Zero(ni);
    for (int k = 0; k < sys->M_ii.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(sys->M_ii, k); it; ++it) lumped[it.row()] += it.value();
    }

    Vector x = Vector::Ones(ni);
    x /= std::sqrt(x.dot(sys->M_ii * x));
    double lambda = x.dot(sys->K_ii * x);
    double residual = std::numeric_limits<double>::infinity();

    auto pack = [&](const Vector& v, double lam, double res, int iters) {
        EigenSolution s;
        s.mesh = mesh;
        s.system = sys;
        s.lambda1 = lam;
        s.residual = res;
        s.iterations = iters;
        s.u.assign(mesh->vertices.size(), 0.0);
        const double sign = v.sum() < 0.0 ? -1.0 : 1.0;
        for (Eigen::Index k = 0; k < ni; ++k) s.u[sys->free_vertices[k]] = sign * v[k];
        s.normalized = true;
        return s;
    };

    for (int it = 1; it <= opt.max_iter; ++it) {
        Vector y = ldlt.solve(sys->M_ii * x);
        const Vector My = sys->M_ii * y;
        const double mnorm = std::sqrt(y.dot(My));
        y /= mnorm;
        const Vector Ky = sys->K_ii * y;
        const double next = y.dot(Ky);
        const Vector r = Ky - next * (My / mnorm);
        residual = std::sqrt(r.cwiseProduct(r).cwiseQuotient(lumped).sum()) / next;
        const bool done = std::abs(next - lambda) <= opt.tol * lambda && residual <= 10.0 * opt.tol;
        x = y;
        lambda = next;
        if (done) return pack(x, lambda, residual, it);
    }
    throw NoConvergence("eigensolver: inverse iteration did not converge in " + std::to_string(opt.max_iter) + " steps",
                        pack(x, lambda, residual, opt.max_iter));
}

inline EigenSolution solve_lambda1(Mesh mesh, const EigenOptions& opt = {}) {
    return solve_lambda1(std::make_shared<const Mesh>(std::move(mesh)), opt);
}

/// Point evaluation of a solution (P1 interpolation). Builds a locator per
/// call; use SolutionProbe for repeated queries.
class SolutionProbe {
public:
    explicit SolutionProbe(const EigenSolution& sol) : sol_(&sol), loc_(*sol.mesh) {}
    double operator()(Vec2 q) const { return interpolate(loc_, sol_->u, q); }
    const MeshLocator& locator() const { return loc_; }

private:
    const EigenSolution* sol_;
    MeshLocator loc_;
};

inline double evaluate_u(const EigenSolution& sol, Vec2 q) { return SolutionProbe(sol)(q); }

/// Normal derivative of u on the hole circle, along the normal exterior to the
/// ball (pointing into the domain), ordered by angle about the hole centre.
struct HoleFlux {
    Vec2 center;
    double radius = 0.0;
    std::vector<double> angles;  ///< in [0, 2 pi), increasing
    std::vector<double> values;
    std::vector<int> vertices;

    double max_value() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
    double min_value() const { return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end()); }
};

/// Flux on vertices carrying `tag`, measured about `center`.
inline HoleFlux boundary_flux(const EigenSolution& sol, BoundaryTag tag, Vec2 center, double radius) {
    const auto g = consistent_flux(*sol.mesh, *sol.system, sol.u, sol.lambda1);
    HoleFlux f;
    f.center = center;
    f.radius = radius;
    std::vector<int> idx;
    for (std::size_t v = 0; v < sol.mesh->vertices.size(); ++v) {
        if (sol.mesh->tags[v] == tag) idx.push_back(int(v));
    }
    std::vector<double> ang(sol.mesh->vertices.size(), 0.0);
    for (int v : idx) {
        const Vec2 d = sol.mesh->vertices[v] - center;
        ang[v] = wrap_angle(std::atan2(d.y, d.x));
    }
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return ang[a] < ang[b]; });
    for (int v : idx) {
        f.vertices.push_back(v);
        f.angles.push_back(ang[v]);
        f.values.push_back(g[v]);
    }
    return f;
}

inline HoleFlux hole_flux(const EigenSolution& sol) {
    if (!(sol.mesh->hole_radius > 0.0)) throw Error("hole_flux: mesh has no hole");
    auto f = boundary_flux(sol, BoundaryTag::hole_boundary, sol.mesh->hole_center, sol.mesh->hole_radius);
    if (f.values.size() < 3) throw SingularBoundaryMass("hole_flux: fewer than three hole vertices");
    return f;
}

/// Observed order and extrapolated limit from three refinement levels.
struct RichardsonEstimate {
    bool defined = false;
    double order = 0.0;
    double extrapolated = 0.0;
};

inline RichardsonEstimate richardson(double h1, double l1, double h2, double l2, double h3, double l3) {
    RichardsonEstimate r;
    const double d12 = l1 - l2, d23 = l2 - l3;
    if (d12 == 0.0 || d23 == 0.0 || (d12 > 0.0) != (d23 > 0.0)) return r;
    const double target = d12 / d23;
    // (h1^p - h2^p) / (h2^p - h3^p) is increasing in p for h1 > h2 > h3.
    auto ratio = [&](double p) { return (std::pow(h1, p) - std::pow(h2, p)) / (std::pow(h2, p) - std::pow(h3, p)); };
    double lo = 0.05, hi = 12.0;
    if (!(ratio(lo) <= target && target <= ratio(hi))) return r;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ratio(mid) < target ? lo : hi) = mid;
    }
    r.defined = true;
    r.order = 0.5 * (lo + hi);
    r.extrapolated = l3 - d23 * std::pow(h3, r.order) / (std::pow(h2, r.order) - std::pow(h3, r.order));
    return r;
}

struct ConvergenceRow {
    double h = 0.0;
    double lambda1 = 0.0;
    std::size_t n_vertices = 0;
    RichardsonEstimate estimate;  ///< from this row and the two before it
};

/// Solves on each mesh size (coarse to fine) and estimates the observed order.
inline std::vector<ConvergenceRow> convergence_study(const std::function<Mesh(double)>& make_mesh, std::span<const double> h_list,
                                                     const EigenOptions& opt = {}) {
    if (h_list.size() < 3) throw ConfigError("convergence_study: at least three mesh sizes are required");
    std::vector<ConvergenceRow> rows;
    for (double h : h_list) {
        ConvergenceRow row;
        row.h = h;
        auto sol = solve_lambda1(make_mesh(h), opt);
        row.lambda1 = sol.lambda1;
        row.n_vertices = sol.mesh->vertices.size();
        rows.push_back(row);
        const std::size_t k = rows.size();
        if (k >= 3) {
            rows[k - 1].estimate = richardson(rows[k - 3].h, rows[k - 3].lambda1, rows[k - 2].h, rows[k - 2].lambda1,
                                              rows[k - 1].h, rows[k - 1].lambda1);
        }
    }
    return rows;
}

inline std::vector<ConvergenceRow> convergence_study(const PuncturedDomain& pd, std::span<const double> h_list,
                                                     double hole_refine_factor = 8.0, std::uint64_t seed = 20240611,
                                                     const EigenOptions& opt = {}) {
    return convergence_study([&](double h) { return generate_mesh(pd, h, hole_refine_factor, seed); }, h_list, opt);
}

}  // namespace holeopt
