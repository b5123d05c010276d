#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "mflab/errors.hpp"

namespace mflab {

// Convergence rule shared by the deterministic maximizer and the quadratures:
// successive refinements must agree to this relative tolerance.
inline constexpr double kRefineRelTol = 1e-6;

// Dense-grid maximizer with local refinement. Deterministic; no derivatives.
// One global pass locates the basin, then the window around the best node is
// re-gridded until the maximum stabilizes.
inline double refine_max(const std::function<double(double)>& f, double a, double b,
                         int grid = 4096) {
    auto scan = [&](double lo, double hi, int n, double& arg) {
        double best = -HUGE_VAL;
        for (int i = 0; i <= n; ++i) {
            const double x = lo + (hi - lo) * static_cast<double>(i) / n;
            const double v = f(x);
            if (!std::isfinite(v)) throw NonFiniteDerivative("refine_max: non-finite value");
            if (v > best) {
                best = v;
                arg = x;
            }
        }
        return best;
    };

    double arg = a;
    double best = scan(a, b, grid, arg);
    double lo = a, hi = b;
    for (int pass = 0; pass < 60; ++pass) {
        const double w = (hi - lo) / grid;
        lo = std::max(a, arg - 2.0 * w);
        hi = std::min(b, arg + 2.0 * w);
        const double prev = best;
        best = std::max(best, scan(lo, hi, grid, arg));
        if (std::fabs(best - prev) <= kRefineRelTol * std::max(std::fabs(best), 1e-12)) break;
    }
    return best;
}

// Composite Simpson with interval doubling until two refinements agree.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        int n0 = 256) {
    if (b <= a) return 0.0;
    auto simpson = [&](int n) {
        const double h = (b - a) / n;
        double s = f(a) + f(b);
        for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
        return s * h / 3.0;
    };
    double prev = simpson(n0);
    for (int n = 2 * n0; n <= (1 << 22); n *= 2) {
        const double cur = simpson(n);
        if (std::fabs(cur - prev) <= kRefineRelTol * std::max(std::fabs(cur), 1e-12)) return cur;
        prev = cur;
    }
    return prev;
}

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// (w * rho)(r) for radial w and rho on R^3 via the two-shell reduction
//   (w*rho)(r) = (2 pi / r) int_s s rho(s) int_{|r-s|}^{min(r+s,S)} u w(u) du ds
// with the r -> 0 limit 4 pi int s^2 w(s) rho(s) ds. S, P are the support
// radii of w and rho; both integrals run over the supports only.
inline double radial_convolution(const std::function<double(double)>& w, double w_support,
                                 const std::function<double(double)>& rho, double rho_support,
                                 double r) {
    if (r < 1e-12) {
        const double hi = std::min(w_support, rho_support);
        if (hi <= 0.0) return 0.0;
        return 4.0 * kPi * integrate([&](double s) { return s * s * w(s) * rho(s); }, 0.0, hi);
    }
    const double lo = std::max(0.0, r - w_support);
    const double hi = std::min(rho_support, r + w_support);
    if (hi <= lo) return 0.0;
    auto outer = [&](double s) -> double {
        const double ua = std::fabs(r - s);
        const double ub = std::min(r + s, w_support);
        if (ub <= ua) return 0.0;
        return s * rho(s) * integrate([&](double u) { return u * w(u); }, ua, ub, 64);
    };
    return (2.0 * kPi / r) * integrate(outer, lo, hi, 128);
}

// Radial component of (k * rho)(r e_z) for a radial gradient field
// k(x) = m(|x|) x/|x|, m the signed magnitude. Same substitution gives
//   (k*rho)_z(r) = (pi / r^2) int_s s rho(s) int_u m(u) (r^2 - s^2 + u^2) du ds.
// Odd kernel, so the value at r = 0 is zero.
inline double radial_vector_convolution(const std::function<double(double)>& m, double m_support,
                                        const std::function<double(double)>& rho,
                                        double rho_support, double r) {
    if (r < 1e-9) return 0.0;
    const double lo = std::max(0.0, r - m_support);
    const double hi = std::min(rho_support, r + m_support);
    if (hi <= lo) return 0.0;
    auto outer = [&](double s) -> double {
        const double ua = std::fabs(r - s);
        const double ub = std::min(r + s, m_support);
        if (ub <= ua) return 0.0;
        const double inner =
            integrate([&](double u) { return m(u) * (r * r - s * s + u * u); }, ua, ub, 64);
        return s * rho(s) * inner;
    };
    return (kPi / (r * r)) * integrate(outer, lo, hi, 128);
}

// Mass of a radial density inside a ball of radius b centered at distance r
// from the origin. Special case of radial_convolution with an indicator
// kernel, with the inner integral taken in closed form.
inline double radial_ball_mass(const std::function<double(double)>& rho, double rho_support,
                               double r, double b) {
    if (b <= 0.0) return 0.0;
    if (r < 1e-12) {
        const double hi = std::min(b, rho_support);
        if (hi <= 0.0) return 0.0;
        return 4.0 * kPi * integrate([&](double s) { return s * s * rho(s); }, 0.0, hi);
    }
    const double lo = std::max(0.0, r - b);
    const double hi = std::min(rho_support, r + b);
    if (hi <= lo) return 0.0;
    auto outer = [&](double s) -> double {
        const double ua = std::fabs(r - s);
        const double ub = std::min(r + s, b);
        if (ub <= ua) return 0.0;
        return s * rho(s) * 0.5 * (ub * ub - ua * ua);
    };
    return (2.0 * kPi / r) * integrate(outer, lo, hi, 256);
}

// Bisection for strictly increasing F; returns x with F(x) = target to ~1e-15
// of the bracket width. Deterministic fixed iteration count.
inline double invert_monotone(const std::function<double(double)>& F, double lo, double hi,
                              double target) {
    for (int i = 0; i < 64; ++i) {
        const double mid = 0.5 * (lo + hi);
        (F(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw InsufficientData("median of empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Linear-interpolation quantile, q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw InsufficientData("quantile of empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    const double frac = pos - static_cast<double>(i);
    return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw InsufficientData("mean of empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace mflab
