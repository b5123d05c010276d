#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mflab/kernel.hpp"
#include "mflab/rng.hpp"

using namespace mflab;

namespace {

// Closed-form radial integrals of the quartic bump via the Beta function:
// int_0^1 r^a (1 - r^2)^b dr = B((a+1)/2, b+1) / 2.
double half_beta(double x, double y) {
    return 0.5 * std::exp(std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y));
}

Vec3 random_in_box(Rng& rng, double half_width) {
    return {rng.uniform(-half_width, half_width), rng.uniform(-half_width, half_width),
            rng.uniform(-half_width, half_width)};
}

}  // namespace

TEST_CASE("quartic bump constants match closed forms", "[kernel]") {
    const BaseProfile p{ProfileShape::poly_bump, 1.0, 1.0};
    const ProfileConstants c = compute_profile_constants(p);

    // dh = -8 r (1-r^2)^3: both |h'/r| and |h''| peak at the origin with value 8,
    // so the per-axis Jacobian sup is exactly 8 and the Lipschitz constant 8*sqrt(3).
    CHECK_THAT(c.lipschitz_l, Catch::Matchers::WithinRel(8.0 * std::sqrt(3.0), 1e-9));

    // sup |h'| at r = 1/sqrt(7): 8/sqrt(7) * (6/7)^3.
    const double sup_l = 8.0 / std::sqrt(7.0) * std::pow(6.0 / 7.0, 3.0);
    CHECK_THAT(c.sup_l, Catch::Matchers::WithinRel(sup_l, 1e-9));

    // integral identities: |l|_1 = 32 pi B(2,4)/... reduces to 4 pi / 5;
    // |phi|_1 = 512 pi / 3465; |l|_2^2 = 256 pi * B(5/2,7)/2.
    CHECK_THAT(c.l1_l, Catch::Matchers::WithinRel(4.0 * kPi / 5.0, 1e-7));
    CHECK_THAT(c.l1_phi, Catch::Matchers::WithinRel(512.0 * kPi / 3465.0, 1e-7));
    CHECK_THAT(c.l2_l_sq,
               Catch::Matchers::WithinRel(256.0 * kPi * half_beta(2.5, 7.0), 1e-7));

    // lap phi = h'' + 2h'/r has |.| maximized at the origin: |3 h''(0)| = 24.
    CHECK_THAT(c.sup_lap_phi, Catch::Matchers::WithinRel(24.0, 1e-9));

    // amplitude scales every constant linearly
    const ProfileConstants c3 = compute_profile_constants({ProfileShape::poly_bump, 1.0, 3.0});
    CHECK_THAT(c3.sup_l, Catch::Matchers::WithinRel(3.0 * c.sup_l, 1e-12));
    CHECK_THAT(c3.l1_phi, Catch::Matchers::WithinRel(3.0 * c.l1_phi, 1e-12));
}

TEST_CASE("profile derivatives agree with central differences", "[kernel]") {
    for (const ProfileShape shape : {ProfileShape::poly_bump, ProfileShape::smooth_bump}) {
        const BaseProfile p{shape, 1.3, 0.7};
        const double h = 1e-6;
        for (double r : {0.05, 0.3, 0.62, 0.9, 1.1, 1.28}) {
            const double dh_num = (p.h(r + h) - p.h(r - h)) / (2.0 * h);
            CHECK_THAT(p.dh(r), Catch::Matchers::WithinAbs(dh_num, 2e-6));
            const double d2h_num = (p.dh(r + h) - p.dh(r - h)) / (2.0 * h);
            CHECK_THAT(p.d2h(r), Catch::Matchers::WithinAbs(d2h_num, 2e-5));
        }
        // compact support: everything vanishes at and beyond the radius
        CHECK(p.h(p.radius) == 0.0);
        CHECK(p.dh(p.radius) == 0.0);
        CHECK(p.h(2.0 * p.radius) == 0.0);
    }
}

TEST_CASE("scaled kernel obeys its power-law identities", "[kernel]") {
    const BaseProfile p{ProfileShape::poly_bump, 1.0, 1.0};
    const KernelSpec spec = make_kernel_spec(p, 0.1, 1024);

    // N^(3b-1) phi(N^b * 0) = 1024^(-0.7) = 2^(-7)
    CHECK_THAT(eval_phi_scaled(spec, {0, 0, 0}),
               Catch::Matchers::WithinRel(std::pow(2.0, -7.0), 1e-12));

    // force magnitude: N^(4b) |h'(N^b r)| at a chosen radius
    const Vec3 q{0.3, 0.0, 0.0};
    const double expected = spec.pow_4b * p.dh(spec.pow_b * 0.3);
    CHECK_THAT(eval_force(spec, q).x, Catch::Matchers::WithinRel(expected, 1e-12));

    // envelope: L * N^(5b) on the bare support, zero outside
    const double support = spec.scaled_support();
    CHECK(eval_g(spec, {0.999 * support, 0, 0}) ==
          spec.constants.lipschitz_l * spec.pow_5b);
    CHECK(eval_g(spec, {1.001 * support, 0, 0}) == 0.0);
    CHECK(eval_force(spec, {1.001 * support, 0, 0}).x == 0.0);

    // antisymmetry is exact
    Rng rng(404);
    for (int i = 0; i < 200; ++i) {
        const Vec3 x = random_in_box(rng, support);
        const Vec3 f = eval_force(spec, x);
        const Vec3 fm = eval_force(spec, -1.0 * x);
        CHECK(f.x == -fm.x);
        CHECK(f.y == -fm.y);
        CHECK(f.z == -fm.z);
    }
    CHECK(eval_force(spec, {0, 0, 0}).x == 0.0);
}

TEST_CASE("pair force is the gradient of the rescaled potential", "[kernel]") {
    // eval_force(q) must equal grad_q [N * phi_scaled](q); checked by central
    // differences well inside the support. This pins the sign convention the
    // equations of motion rely on.
    const KernelSpec spec = make_kernel_spec({ProfileShape::poly_bump, 1.0, 1.0}, 0.1, 512);
    const double n = spec.n_real();
    Rng rng(505);
    const double s = spec.scaled_support();
    for (int i = 0; i < 50; ++i) {
        Vec3 q = random_in_box(rng, 0.55 * s);
        const double h = 1e-6 * s;
        const Vec3 f = eval_force(spec, q);
        for (int c = 0; c < 3; ++c) {
            Vec3 qp = q, qm = q;
            qp[c] += h;
            qm[c] -= h;
            const double grad =
                n * (eval_phi_scaled(spec, qp) - eval_phi_scaled(spec, qm)) / (2.0 * h);
            CHECK_THAT(f[c], Catch::Matchers::WithinAbs(
                                 grad, 1e-5 * spec.pow_4b * spec.constants.sup_l));
        }
    }
}

TEST_CASE("base force profile is Lipschitz with the advertised constant", "[kernel]") {
    const BaseProfile p{ProfileShape::poly_bump, 1.0, 1.0};
    const ProfileConstants c = compute_profile_constants(p);
    auto l_at = [&](const Vec3& x) -> Vec3 {
        const double r = norm2(x);
        if (r == 0.0 || r >= p.radius) return {};
        const double m = p.dh(r) / r;
        return {m * x.x, m * x.y, m * x.z};
    };
    Rng rng(606);
    for (int i = 0; i < 20000; ++i) {
        const Vec3 a = random_in_box(rng, 1.2);
        const Vec3 b = a + random_in_box(rng, 0.4);
        const double lhs = norm_inf(l_at(a) - l_at(b));
        const double rhs = c.lipschitz_l * norm_inf(a - b);
        REQUIRE(lhs <= rhs * (1.0 + 1e-12));
    }
}

TEST_CASE("envelope dominates force increments over the enlarged support", "[kernel]") {
    // |f(q) - f(q + delta)|_inf <= g(q) |delta|_inf for all |delta|_inf up to
    // 2 N^(-alpha): the inequality the distance process consumes.
    const double alpha = 0.05;
    const KernelSpec spec =
        make_kernel_spec({ProfileShape::poly_bump, 1.0, 1.0}, 0.1, 1024, alpha);
    const double dmax = 2.0 * std::pow(spec.n_real(), -alpha);
    const double box = spec.g_support_real() + dmax;
    Rng rng(707);
    for (int i = 0; i < 20000; ++i) {
        const Vec3 q = random_in_box(rng, box);
        const Vec3 delta = random_in_box(rng, dmax);
        const double lhs = norm_inf(eval_force(spec, q) - eval_force(spec, q + delta));
        const double rhs = eval_g(spec, q) * norm_inf(delta);
        REQUIRE(lhs <= rhs * (1.0 + 1e-12));
    }
}

TEST_CASE("enlarged envelope support covers the advertised margin", "[kernel]") {
    const KernelSpec spec =
        make_kernel_spec({ProfileShape::poly_bump, 1.0, 1.0}, 0.1, 256, 0.05);
    const double margin =
        2.0 * std::sqrt(3.0) * std::pow(spec.n_real(), spec.beta - 0.05);
    CHECK_THAT(spec.g_support_scaled(),
               Catch::Matchers::WithinRel(spec.profile.radius + margin, 1e-12));
    CHECK_THAT(spec.g_support_real(),
               Catch::Matchers::WithinRel(spec.g_support_scaled() / spec.pow_b, 1e-12));

    const KernelSpec bare = with_bare_g(spec);
    CHECK(bare.g_support_scaled() == spec.profile.radius);
    CHECK(eval_g(bare, {1.5 * bare.scaled_support(), 0, 0}) == 0.0);
    CHECK(eval_g(spec, {1.5 * bare.scaled_support(), 0, 0}) > 0.0);
}

TEST_CASE("kernel spec validation rejects out-of-range parameters", "[kernel]") {
    const BaseProfile p{ProfileShape::poly_bump, 1.0, 1.0};
    CHECK_THROWS_AS(make_kernel_spec(p, 1.0 / 7.0, 64), ConfigError);
    CHECK_THROWS_AS(make_kernel_spec(p, 0.2, 64), ConfigError);
    CHECK_THROWS_AS(make_kernel_spec(p, -0.01, 64), ConfigError);
    CHECK_THROWS_AS(make_kernel_spec(p, 0.1, 0), ConfigError);
    CHECK_THROWS_AS(make_kernel_spec(p, 0.1, 64, 0.0), ConfigError);
    CHECK_THROWS_AS(make_kernel_spec({ProfileShape::poly_bump, 0.0, 1.0}, 0.1, 64),
                    ConfigError);
    CHECK_THROWS_AS(make_kernel_spec({ProfileShape::poly_bump, 1.0, -1.0}, 0.1, 64),
                    ConfigError);
    CHECK_NOTHROW(make_kernel_spec(p, 0.0, 64));  // beta = 0 is admissible
    CHECK_THROWS_AS(profile_shape_from_string("triangle"), ConfigError);
}

TEST_CASE("zero-amplitude potential produces identically zero fields", "[kernel]") {
    const KernelSpec spec = make_kernel_spec({ProfileShape::poly_bump, 1.0, 0.0}, 0.1, 128);
    CHECK(spec.constants.lipschitz_l == 0.0);
    CHECK(eval_force(spec, {0.1, 0.2, 0.05}).x == 0.0);
    CHECK(eval_g(spec, {0.1, 0.0, 0.0}) == 0.0);
    CHECK(eval_phi_scaled(spec, {0.1, 0.0, 0.0}) == 0.0);
}
