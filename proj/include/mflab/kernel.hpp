#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "mflab/errors.hpp"
#include "mflab/numerics.hpp"
#include "mflab/vec3.hpp"

namespace mflab {

// Radial interaction profiles. Both are compactly supported with bounded first
// and second derivatives and a critical point at the origin.
enum class ProfileShape { poly_bump, smooth_bump };

inline ProfileShape profile_shape_from_string(std::string_view s) {
    if (s == "poly-bump") return ProfileShape::poly_bump;
    if (s == "smooth-bump") return ProfileShape::smooth_bump;
    throw ConfigError("kernel.shape: unknown profile '" + std::string(s) + "'");
}

inline std::string to_string(ProfileShape s) {
    return s == ProfileShape::poly_bump ? "poly-bump" : "smooth-bump";
}

struct BaseProfile {
    ProfileShape shape = ProfileShape::poly_bump;
    double radius = 1.0;     // support radius of the potential
    double amplitude = 1.0;  // potential height at the origin

    // Radial potential value h(r), with phi(x) = h(|x|).
    double h(double r) const {
        if (r >= radius || amplitude == 0.0) return 0.0;
        const double u = 1.0 - (r / radius) * (r / radius);
        if (shape == ProfileShape::poly_bump) {
            const double u2 = u * u;
            return amplitude * u2 * u2;
        }
        if (u <= 1e-9) return 0.0;
        return amplitude * std::exp(1.0 - 1.0 / u);
    }

    // dh/dr; the radial force profile is l(x) = h'(|x|) * x/|x|.
    double dh(double r) const {
        if (r >= radius || amplitude == 0.0) return 0.0;
        const double R2 = radius * radius;
        const double u = 1.0 - r * r / R2;
        if (shape == ProfileShape::poly_bump) {
            return -8.0 * amplitude * r / R2 * u * u * u;
        }
        if (u <= 1e-9) return 0.0;
        const double psi = std::exp(1.0 - 1.0 / u);
        return -2.0 * amplitude * r / (R2 * u * u) * psi;
    }

    // d2h/dr2.
    double d2h(double r) const {
        if (r >= radius || amplitude == 0.0) return 0.0;
        const double R2 = radius * radius;
        const double u = 1.0 - r * r / R2;
        if (shape == ProfileShape::poly_bump) {
            return 8.0 * amplitude / R2 * u * u * (6.0 * r * r / R2 - u);
        }
        if (u <= 1e-9) return 0.0;
        const double psi = std::exp(1.0 - 1.0 / u);
        const double u2 = u * u;
        return -2.0 * amplitude / R2 * psi / u2 *
               (1.0 - 2.0 * r * r / R2 * (1.0 - 2.0 * u) / u2);
    }

    // h'(r)/r extended continuously to r = 0 (limit h''(0)).
    double dh_over_r(double r) const {
        if (r < 1e-12 * radius) return d2h(0.0);
        return dh(r) / r;
    }

    // Laplacian of phi along a radial ray: h'' + 2 h'/r.
    double lap(double r) const { return d2h(r) + 2.0 * dh_over_r(r); }
};

// Analytic constants of one profile, computed once by deterministic grid
// refinement and cached inside the kernel spec.
struct ProfileConstants {
    double s_axis[3] = {0, 0, 0};  // per-axis sup-norms of the partials of l
    double lipschitz_l = 0.0;      // sqrt(S1^2 + S2^2 + S3^2)
    double sup_l = 0.0;            // sup |l|
    double l1_l = 0.0;             // integral of |l|
    double l2_l_sq = 0.0;          // integral of |l|^2
    double l1_phi = 0.0;           // integral of |phi|
    double sup_lap_phi = 0.0;      // sup |laplacian(phi)|
};

// For radial l(x) = h'(r) x/|x| the Jacobian column d_i l has squared norm
// (h'/r)^2 + ((h'')^2 - (h'/r)^2) * (x_i/r)^2, affine in (x_i/r)^2, so the
// per-axis sup reduces to a 1-D maximization of max(|h'/r|, |h''|).
inline ProfileConstants compute_profile_constants(const BaseProfile& p) {
    ProfileConstants c;
    if (p.amplitude == 0.0) return c;
    if (p.radius <= 0.0) throw ConfigError("kernel.radius must be positive");
    const double R = p.radius;
    const double s_sup = refine_max(
        [&](double r) { return std::max(std::fabs(p.dh_over_r(r)), std::fabs(p.d2h(r))); }, 0.0,
        R);
    c.s_axis[0] = c.s_axis[1] = c.s_axis[2] = s_sup;
    c.lipschitz_l = std::sqrt(3.0) * s_sup;
    c.sup_l = refine_max([&](double r) { return std::fabs(p.dh(r)); }, 0.0, R);
    const double four_pi = 4.0 * 3.14159265358979323846264338327950288;
    c.l1_l = integrate([&](double r) { return four_pi * r * r * std::fabs(p.dh(r)); }, 0.0, R);
    c.l2_l_sq =
        integrate([&](double r) { return four_pi * r * r * p.dh(r) * p.dh(r); }, 0.0, R);
    c.l1_phi = integrate([&](double r) { return four_pi * r * r * std::fabs(p.h(r)); }, 0.0, R);
    c.sup_lap_phi = refine_max([&](double r) { return std::fabs(p.lap(r)); }, 0.0, R);
    return c;
}

// The scaled interaction of an N-particle system at exponent beta:
//   phi_scaled(x) = N^(3*beta-1) * phi(N^beta x)
//   force(q)      = N^(4*beta)   * l(N^beta q)
//   g(q)          = L * N^(5*beta) on the (enlarged) support, else 0.
struct KernelSpec {
    BaseProfile profile;
    double beta = 0.0;
    std::uint64_t n_particles = 1;
    std::optional<double> alpha_enlarge;  // no value: g uses supp l itself
    ProfileConstants constants;

    // cached powers of N
    double pow_b = 1.0;     // N^beta
    double pow_3bm1 = 1.0;  // N^(3*beta-1)
    double pow_4b = 1.0;    // N^(4*beta)
    double pow_5b = 1.0;    // N^(5*beta)

    double n_real() const { return static_cast<double>(n_particles); }
    double lipschitz_L() const { return constants.lipschitz_l; }
    double scaled_support() const { return profile.radius / pow_b; }

    // Support radius of g in the scaled variable y = N^beta q. The margin
    // 2*sqrt(3)*N^(beta-alpha) covers every displacement with
    // |delta|_inf <= 2 N^(-alpha); sqrt(3) converts the inf-norm box to the
    // Euclidean ball the support lives in.
    double g_support_scaled() const {
        if (!alpha_enlarge) return profile.radius;
        return profile.radius +
               2.0 * std::sqrt(3.0) * std::pow(n_real(), beta - *alpha_enlarge);
    }

    // Same radius in the physical variable q (search radius for g sums).
    double g_support_real() const { return g_support_scaled() / pow_b; }
};

inline KernelSpec make_kernel_spec(const BaseProfile& profile, double beta,
                                   std::uint64_t n_particles,
                                   std::optional<double> alpha_enlarge = std::nullopt) {
    if (!(beta >= 0.0 && beta < 1.0 / 7.0))
        throw ConfigError("kernel.beta must satisfy 0 <= beta < 1/7");
    if (n_particles < 1) throw ConfigError("kernel.n_particles must be >= 1");
    if (profile.radius <= 0.0) throw ConfigError("kernel.radius must be positive");
    if (profile.amplitude < 0.0) throw ConfigError("kernel.amplitude must be >= 0");
    if (alpha_enlarge && !(*alpha_enlarge > 0.0))
        throw ConfigError("kernel.alpha_enlarge must be positive when set");
    KernelSpec s;
    s.profile = profile;
    s.beta = beta;
    s.n_particles = n_particles;
    s.alpha_enlarge = alpha_enlarge;
    s.constants = compute_profile_constants(profile);
    const double n = s.n_real();
    s.pow_b = std::pow(n, beta);
    s.pow_3bm1 = std::pow(n, 3.0 * beta - 1.0);
    s.pow_4b = std::pow(n, 4.0 * beta);
    s.pow_5b = std::pow(n, 5.0 * beta);
    return s;
}

// Copy of a spec whose g reverts to the bare indicator of supp l. The
// fluctuation statistics use this form; see stats module.
inline KernelSpec with_bare_g(KernelSpec spec) {
    spec.alpha_enlarge.reset();
    return spec;
}

inline double eval_phi_scaled(const KernelSpec& spec, const Vec3& x) {
    return spec.pow_3bm1 * spec.profile.h(spec.pow_b * norm2(x));
}

inline Vec3 eval_force(const KernelSpec& spec, const Vec3& q) {
    const double r = norm2(q);
    if (r == 0.0) return {};  // critical point of phi, exact by branch
    const double rs = spec.pow_b * r;
    if (rs >= spec.profile.radius) return {};
    const double mag = spec.pow_4b * spec.profile.dh(rs) / r;
    return {mag * q.x, mag * q.y, mag * q.z};
}

inline double eval_g(const KernelSpec& spec, const Vec3& q) {
    const double rs = spec.pow_b * norm2(q);
    if (rs > spec.g_support_scaled()) return 0.0;
    return spec.constants.lipschitz_l * spec.pow_5b;
}

// N * laplacian(phi_scaled) at q, i.e. N^(5*beta) * (lap phi)(N^beta q): the
// second-derivative kernel whose convolution with ktilde stays N-uniformly
// bounded (used by the mean-field bound checks).
inline double eval_lap_kernel(const KernelSpec& spec, const Vec3& q) {
    return spec.pow_5b * spec.profile.lap(spec.pow_b * norm2(q));
}

}  // namespace mflab
