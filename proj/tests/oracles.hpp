#pragma once

// Independent reference values for the tests: Bessel functions from their
// power series, roots by bisection, and the exact blowup limit on K.

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>

namespace oracle {

constexpr long double kPiL = 3.141592653589793238462643383279502884L;
constexpr long double kEulerGamma = 0.577215664901532860606512090082402431L;

inline long double bessel_j0(long double x) {
    const long double q = x * x / 4.0L;
    long double term = 1.0L, sum = 1.0L;
    for (int k = 1; k < 200; ++k) {
        term *= -q / (static_cast<long double>(k) * k);
        sum += term;
        if (std::fabs(term) < 1e-30L * std::fabs(sum)) break;
    }
    return sum;
}

inline long double bessel_j1(long double x) {
    const long double q = x * x / 4.0L;
    long double term = x / 2.0L, sum = term;
    for (int k = 1; k < 200; ++k) {
        term *= -q / (static_cast<long double>(k) * (k + 1));
        sum += term;
        if (std::fabs(term) < 1e-30L * std::fabs(sum)) break;
    }
    return sum;
}

inline long double bessel_y0(long double x) {
    const long double q = x * x / 4.0L;
    long double term = 1.0L, harmonic = 0.0L, series = 0.0L;
    for (int k = 1; k < 200; ++k) {
        term *= -q / (static_cast<long double>(k) * k);
        harmonic += 1.0L / k;
        const long double add = -term * harmonic;
        series += add;
        if (std::fabs(add) < 1e-30L * (std::fabs(series) + 1e-300L)) break;
    }
    return (2.0L / kPiL) * ((std::log(x / 2.0L) + kEulerGamma) * bessel_j0(x) + series);
}

/// First root of f in [lo, hi] found by scanning with step `scan` and bisecting.
inline double first_root(const std::function<long double(long double)>& f, double lo, double hi, double scan) {
    long double a = lo, fa = f(a);
    for (long double b = lo + scan; b <= hi; b += scan) {
        const long double fb = f(b);
        if ((fa < 0) != (fb < 0)) {
            for (int i = 0; i < 200; ++i) {
                const long double m = 0.5L * (a + b), fm = f(m);
                if ((fa < 0) == (fm < 0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            return double(0.5L * (a + b));
        }
        a = b;
        fa = fb;
    }
    throw std::runtime_error("oracle: no sign change");
}

inline double j01() { return first_root([](long double x) { return bessel_j0(x); }, 1.0, 4.0, 0.01); }

/// lambda_1 of the unit disk.
inline double disk_lambda1() {
    const double j = j01();
    return j * j;
}

/// u(0) of the L2-normalized first eigenfunction of the unit disk.
inline double disk_u0() { return double(1.0L / (std::sqrt(kPiL) * std::fabs(bessel_j1(j01())))); }

/// Radial profile J0(k r) Y0(k a) - J0(k a) Y0(k r) of the annulus a < r < 1.
inline long double annulus_profile(long double k, long double a, long double r) {
    return bessel_j0(k * r) * bessel_y0(k * a) - bessel_j0(k * a) * bessel_y0(k * r);
}

/// First k with annulus_profile(k, a, 1) = 0.
inline double annulus_k(double a) {
    return first_root([a](long double k) { return annulus_profile(k, a, 1.0L); }, 0.5, 40.0, 0.01);
}

inline double annulus_lambda1(double a) {
    const double k = annulus_k(a);
    return k * k;
}

/// |du/dr| at r = a for the L2-normalized annulus eigenfunction. The profile
/// derivative at r = a is -2 / (pi a) by the Wronskian J1 Y0 - J0 Y1 = 2 / (pi x).
inline double annulus_inner_flux(double a) {
    const long double k = annulus_k(a);
    const int n = 4000;
    const long double h = (1.0L - a) / n;
    long double s = 0.0L;
    for (int i = 0; i <= n; ++i) {
        const long double r = a + i * h;
        const long double f = annulus_profile(k, a, r);
        const long double w = (i == 0 || i == n) ? 1.0L : (i % 2 ? 4.0L : 2.0L);
        s += w * f * f * r;
    }
    const long double norm2 = 2.0L * kPiL * s * h / 3.0L;
    return double((2.0L / (kPiL * a)) / std::sqrt(norm2));
}

/// Harmonic function on K = {y > -1} minus the unit disk, zero on the boundary,
/// with v ~ y + 1 at infinity: Im(pi coth(pi / (z + i))).
inline double k_limit(double x, double y) {
    using C = std::complex<double>;
    const C w = 1.0 / C(x, y + 1.0);
    const C coth = std::cosh(M_PI * w) / std::sinh(M_PI * w);
    return (M_PI * coth).imag();
}

}  // namespace oracle
