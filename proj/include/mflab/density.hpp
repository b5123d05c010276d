#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "mflab/ensemble.hpp"
#include "mflab/errors.hpp"
#include "mflab/kernel.hpp"
#include "mflab/numerics.hpp"
#include "mflab/rng.hpp"

namespace mflab {

enum class SpatialProfile { poly_bump_space, uniform_ball };
enum class MomentumProfile { gaussian };

inline SpatialProfile spatial_profile_from_string(std::string_view s) {
    if (s == "poly-bump-space") return SpatialProfile::poly_bump_space;
    if (s == "uniform-ball") return SpatialProfile::uniform_ball;
    throw ConfigError("initial.spatial: unknown profile '" + std::string(s) + "'");
}

inline std::string to_string(SpatialProfile s) {
    return s == SpatialProfile::poly_bump_space ? "poly-bump-space" : "uniform-ball";
}

// Product initial density k0(q, p) = rho(q) * M(p): radial non-increasing
// spatial part, isotropic truncated Gaussian momenta.
struct InitialDensity {
    SpatialProfile spatial = SpatialProfile::poly_bump_space;
    double r_q = 2.0;  // spatial support radius
    MomentumProfile momentum = MomentumProfile::gaussian;
    double sigma_p = 0.5;
    double r_p_factor = 6.0;  // truncation at r_p_factor * sigma_p

    void validate() const {
        if (!(r_q > 0.0)) throw InvalidDensity("initial.r_q must be positive");
        if (!(sigma_p > 0.0)) throw InvalidDensity("initial.sigma_p must be positive");
        if (!(r_p_factor > 1.0)) throw InvalidDensity("initial.r_p_factor must exceed 1");
    }

    double r_p() const { return r_p_factor * sigma_p; }

    // Normalization constant of rho.
    double rho0() const {
        const double r3 = r_q * r_q * r_q;
        if (spatial == SpatialProfile::poly_bump_space)
            return 3465.0 / (512.0 * 3.14159265358979323846264338327950288 * r3);
        return 3.0 / (4.0 * 3.14159265358979323846264338327950288 * r3);
    }

    double rho(double r) const {
        if (r >= r_q) return 0.0;
        if (spatial == SpatialProfile::uniform_ball) return rho0();
        const double u = 1.0 - (r / r_q) * (r / r_q);
        const double u2 = u * u;
        return rho0() * u2 * u2;
    }

    // Probability mass of the ball |q| <= r. Closed polynomial form, exact.
    double mass_within(double r) const {
        const double t = std::min(r / r_q, 1.0);
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        if (spatial == SpatialProfile::uniform_ball) return t * t * t;
        const double t2 = t * t;
        const double poly =
            t2 * t *
            (1.0 / 3.0 +
             t2 * (-4.0 / 5.0 + t2 * (6.0 / 7.0 + t2 * (-4.0 / 9.0 + t2 / 11.0))));
        return (3465.0 / 128.0) * poly;
    }

    // The spatial marginal expressed as a radial profile, so the kernel
    // module's refinement machinery provides its derivative bounds.
    BaseProfile spatial_as_profile() const {
        if (spatial != SpatialProfile::poly_bump_space)
            throw NonSmoothDensity("spatial profile lacks the required derivative bounds");
        return BaseProfile{ProfileShape::poly_bump, r_q, rho0()};
    }

    // Gaussian momentum marginal density (truncation mass < 1e-8 at the
    // default factor 6, ignored in the value).
    double momentum_density(double p_norm) const {
        if (p_norm > r_p()) return 0.0;
        const double two_pi = 6.283185307179586476925286766559;
        const double s2 = sigma_p * sigma_p;
        return std::exp(-0.5 * p_norm * p_norm / s2) / std::pow(two_pi * s2, 1.5);
    }
};

struct DensityMarginalBounds {
    double sup_k = 0.0;       // sup ktilde
    double sup_grad_k = 0.0;  // sup |grad ktilde|
    double sup_lap_k = 0.0;   // sup |lap ktilde|
    double sup_momentum = 0.0;
};

inline DensityMarginalBounds density_marginal_bounds(const InitialDensity& d) {
    d.validate();
    const BaseProfile rho = d.spatial_as_profile();  // throws NonSmoothDensity
    DensityMarginalBounds b;
    b.sup_k = rho.h(0.0);
    b.sup_grad_k = refine_max([&](double r) { return std::fabs(rho.dh(r)); }, 0.0, d.r_q);
    b.sup_lap_k = refine_max([&](double r) { return std::fabs(rho.lap(r)); }, 0.0, d.r_q);
    const double two_pi = 6.283185307179586476925286766559;
    b.sup_momentum = 1.0 / std::pow(two_pi * d.sigma_p * d.sigma_p, 1.5);
    return b;
}

// n i.i.d. draws from k0. Radial inverse-CDF for |q|, uniform direction,
// Box-Muller momenta redrawn while |p| exceeds the truncation radius.
// Sequential in particle index so a seed pins the ensemble bit for bit.
inline ParticleEnsemble sample_ensemble(const InitialDensity& d, std::size_t n,
                                        std::uint64_t seed) {
    d.validate();
    if (n < 1) throw SizeMismatch("sample_ensemble: n must be >= 1");
    ParticleEnsemble e;
    e.seed = seed;
    e.time = 0.0;
    e.q.resize(n);
    e.p.resize(n);
    Rng rng(seed);
    const double two_pi = 6.283185307179586476925286766559;
    const double r_p = d.r_p();
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        double r;
        if (d.spatial == SpatialProfile::uniform_ball) {
            r = d.r_q * std::cbrt(u);
        } else {
            r = invert_monotone([&](double x) { return d.mass_within(x); }, 0.0, d.r_q, u);
        }
        const double cz = rng.uniform(-1.0, 1.0);
        const double az = rng.uniform(0.0, two_pi);
        const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
        e.q[i] = {r * sz * std::cos(az), r * sz * std::sin(az), r * cz};
        Vec3 p;
        do {
            rng.discard_spare();  // fixed two-normal-per-call consumption
            p = {d.sigma_p * rng.normal(), d.sigma_p * rng.normal(),
                 d.sigma_p * rng.normal()};
        } while (norm2(p) > r_p);
        e.p[i] = p;
    }
    return e;
}

}  // namespace mflab
