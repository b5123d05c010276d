#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mflab/density.hpp"
#include "mflab/grid_field.hpp"
#include "mflab/meanfield.hpp"
#include "mflab/rng.hpp"
#include "oracle_quadrature.hpp"

using namespace mflab;
using oracle::shell_integral;

namespace {
const BaseProfile kBump{ProfileShape::poly_bump, 1.0, 1.0};
}  // namespace

TEST_CASE("reference field equals the direct empirical sum", "[meanfield]") {
    InitialDensity d;
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, 256);
    const ParticleEnsemble ref = sample_ensemble(d, 1024, 11);
    const ReferenceField field(ref.q, spec);
    Rng rng(22);
    for (int k = 0; k < 25; ++k) {
        const Vec3 x{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        Vec3 brute{};
        for (const Vec3& qj : ref.q) brute += eval_force(spec, x - qj);
        brute *= -1.0 / static_cast<double>(ref.size());
        const Vec3 f = field.force_at(x);
        CHECK(norm_inf(f - brute) <= 1e-12 * std::max(1.0, norm_inf(brute)));

        double brute_g = 0.0;
        for (const Vec3& qj : ref.q) brute_g += eval_g(spec, x - qj);
        brute_g /= static_cast<double>(ref.size());
        CHECK_THAT(field.g_at(x), Catch::Matchers::WithinAbs(brute_g, 1e-12 * spec.pow_5b));
    }
}

TEST_CASE("radial expectation table matches an independent quadrature", "[meanfield]") {
    InitialDensity d;
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, 1024);
    const RadialMeanField table = make_radial_mean_field(spec, d, 2049);

    // at the origin the envelope convolution reduces to the closed-form radial
    // mass of the centered envelope ball
    const double g_rad = spec.g_support_real();
    const double g_val = spec.lipschitz_L() * spec.pow_5b;
    CHECK_THAT(table.gbar_at(0.0),
               Catch::Matchers::WithinRel(g_val * d.mass_within(g_rad), 1e-5));
    CHECK(table.gbar_at(d.r_q + g_rad + 0.5) == 0.0);

    // odd kernel: no force at the center, and none far outside the support
    CHECK(norm2(table.force_at({0, 0, 0})) == 0.0);
    CHECK(norm2(table.force_at({d.r_q + spec.scaled_support() + 0.5, 0, 0})) == 0.0);

    // interior radii against the spherical-coordinate Simpson oracle; radii are
    // snapped to table nodes so no interpolation error enters
    auto mag = [&](double u) { return spec.pow_4b * spec.profile.dh(spec.pow_b * u); };
    for (double r0 : {0.4, 0.9, 1.4, 1.9}) {
        const double r = std::round(r0 / table.dr) * table.dr;
        const double want_f = -shell_integral(mag, spec.scaled_support(), true, d, r);
        const double want_g = g_val * shell_integral([](double) { return 1.0; }, g_rad,
                                                     false, d, r);
        CHECK_THAT(table.force_radial(r), Catch::Matchers::WithinRel(want_f, 1e-3));
        CHECK_THAT(table.gbar_at(r), Catch::Matchers::WithinRel(want_g, 1e-3));
        // direction: force_at scales the unit radial vector by force_radial
        const Vec3 v = table.force_at({0, r, 0});
        CHECK_THAT(v.y, Catch::Matchers::WithinRel(table.force_radial(r), 1e-12));
        CHECK(v.x == 0.0);
        CHECK(v.z == 0.0);
    }

    // anchor the sign and scale of the table to an actual empirical average:
    // a large frozen sample pins the convolution to within its sampling noise
    const ParticleEnsemble big = sample_ensemble(d, 262144, 3001);
    const ReferenceField field(big.q, spec);
    const Vec3 x{0.8, 0, 0};
    const Vec3 emp = field.force_at(x);
    const Vec3 tab = table.force_at(x);
    CHECK(norm_inf(emp - tab) <= 0.25 * norm2(tab));
}

TEST_CASE("tracers are passive passengers of the flow", "[meanfield]") {
    InitialDensity d;
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, 128);
    const ParticleEnsemble ref0 = sample_ensemble(d, 512, 41);
    const ParticleEnsemble trA = sample_ensemble(d, 16, 42);
    const ParticleEnsemble trB = sample_ensemble(d, 48, 43);

    MeanFieldConfig cfg;
    cfg.ref_seed = 41;
    MeanFieldFlow a(ref0, trA, spec, cfg);
    MeanFieldFlow b(ref0, trB, spec, cfg);
    for (int s = 0; s < 5; ++s) {
        a.step(0.05);
        b.step(0.05);
    }
    for (std::size_t i = 0; i < ref0.size(); ++i) {
        CHECK(a.reference().q[i].x == b.reference().q[i].x);
        CHECK(a.reference().q[i].y == b.reference().q[i].y);
        CHECK(a.reference().q[i].z == b.reference().q[i].z);
        CHECK(a.reference().p[i].x == b.reference().p[i].x);
    }
}

TEST_CASE("grid mode reproduces the reference-mode forces", "[meanfield]") {
    InitialDensity d;
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, 1024);
    const ParticleEnsemble ref0 = sample_ensemble(d, 16384, 101);
    const ParticleEnsemble tr = sample_ensemble(d, 64, 202);

    MeanFieldConfig a;
    a.ref_seed = 101;
    MeanFieldConfig b = a;
    b.mode = MeanFieldConfig::Mode::grid_fft;
    b.grid_spacing = spec.scaled_support() / 8.0;
    MeanFieldFlow fa(ref0, tr, spec, a);
    MeanFieldFlow fb(ref0, tr, spec, b);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        diff = std::max(diff, norm_inf(fa.tracer_forces()[i] - fb.tracer_forces()[i]));
        scale = std::max(scale, norm_inf(fa.tracer_forces()[i]));
    }
    CHECK(diff <= 0.06 * scale);  // deposit + interpolation error at support/8 spacing
    CHECK(mean_field_mode_from_string("grid-fft") == MeanFieldConfig::Mode::grid_fft);
    CHECK(mean_field_mode_from_string("reference-ensemble") ==
          MeanFieldConfig::Mode::reference_ensemble);
    CHECK_THROWS_AS(mean_field_mode_from_string("octree"), ConfigError);
}

TEST_CASE("mean-field evolution is deterministic and worker-invariant", "[meanfield]") {
    InitialDensity d;
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, 128);
    const ParticleEnsemble ref0 = sample_ensemble(d, 1024, 51);
    const ParticleEnsemble tr = sample_ensemble(d, 64, 52);
    MeanFieldConfig cfg;
    cfg.ref_seed = 51;
    cfg.t_final = 0.2;
    MeanFieldConfig cfg4 = cfg;
    cfg4.workers = 4;
    const MeanFieldResult r1 = evolve_mean_field(ref0, tr, spec, cfg);
    const MeanFieldResult r2 = evolve_mean_field(ref0, tr, spec, cfg);
    const MeanFieldResult r4 = evolve_mean_field(ref0, tr, spec, cfg4);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        CHECK(r1.tracers.q[i].x == r2.tracers.q[i].x);
        CHECK(r1.tracers.q[i].x == r4.tracers.q[i].x);
        CHECK(r1.tracers.p[i].z == r4.tracers.p[i].z);
    }
}

TEST_CASE("mean-field flow validates its inputs", "[meanfield]") {
    InitialDensity d;
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, 128);
    const ParticleEnsemble small = sample_ensemble(d, 32, 61);
    const ParticleEnsemble large = sample_ensemble(d, 128, 62);
    MeanFieldConfig cfg;
    // reference may not be outnumbered by tracers
    CHECK_THROWS_AS(MeanFieldFlow(small, large, spec, cfg), ConfigError);
    // seeds must differ so the two draws cannot silently coincide
    const ParticleEnsemble clone = sample_ensemble(d, 128, 62);
    CHECK_THROWS_AS(MeanFieldFlow(large, clone, spec, cfg), ConfigError);
}

TEST_CASE("two-scale flow gap vanishes when scaling is off and stays small otherwise",
          "[meanfield]") {
    InitialDensity d;
    MeanFieldConfig cfg;
    cfg.t_final = 0.2;
    const ParticleEnsemble tracers = sample_ensemble(d, 64, 71);
    const ParticleEnsemble ref = sample_ensemble(d, 2048, 72);

    // without scaling the kernel does not depend on the particle count, so the
    // two flows coincide bitwise
    {
        const KernelSpec s1 = make_kernel_spec(kBump, 0.0, 128);
        const KernelSpec s2 = make_kernel_spec(kBump, 0.0, 256);
        const GapSeries gs = regularization_gap(s1, s2, tracers, ref, cfg);
        CHECK(gs.sup_gap == 0.0);
        REQUIRE(!gs.t.empty());
        CHECK(gs.t.front() == 0.0);
        CHECK_THAT(gs.t.back(), Catch::Matchers::WithinAbs(cfg.t_final, 1e-12));
    }
    // with scaling: nonzero but small over a short horizon
    {
        const KernelSpec s1 = make_kernel_spec(kBump, 0.1, 128);
        const KernelSpec s2 = make_kernel_spec(kBump, 0.1, 256);
        const GapSeries gs = regularization_gap(s1, s2, tracers, ref, cfg);
        CHECK(gs.sup_gap > 0.0);
        CHECK(gs.sup_gap < 0.05);
        CHECK(gs.gap.front() == 0.0);  // identical initial data
    }
}

TEST_CASE("gridded convolutions respect the density-derivative bounds", "[meanfield]") {
    InitialDensity d;
    const DensityMarginalBounds bounds = density_marginal_bounds(d);
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, 256);

    const GridGeometry geom =
        make_grid_geometry(spec, d.r_q + 0.3, spec.scaled_support() / 8.0);
    // the exact spatial marginal on the nodes keeps sampling noise out of the
    // sup-bound comparison
    const std::vector<double> density_grid = fill_density(geom, d);
    const ForceField field = make_force_field(geom, density_grid, spec);
    const ConvolutionBoundReport rep =
        mean_force_bound_check(field, density_grid, spec, bounds);
    CHECK(rep.margin_force > 0.0);
    CHECK(rep.margin_lap > 0.0);
    CHECK(rep.sup_force <= rep.bound_force);
    CHECK(rep.sup_lap <= rep.bound_lap);
    CHECK(rep.sup_g > 0.0);
    CHECK(rep.g_reference > 0.0);
}

TEST_CASE("cloud-in-cell deposit conserves mass and respects the domain", "[meanfield]") {
    InitialDensity d;
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, 128);
    const GridGeometry geom = make_grid_geometry(spec, 2.5, spec.scaled_support() / 4.0);

    const ParticleEnsemble e = sample_ensemble(d, 500, 91);
    const std::vector<double> rho = deposit_cic(geom, e.q);
    double mass = 0.0;
    for (double v : rho) mass += v;
    mass *= geom.h * geom.h * geom.h;
    CHECK_THAT(mass, Catch::Matchers::WithinRel(1.0, 1e-12));

    // a particle exactly on a node puts its full weight there
    const int c = geom.n / 2;
    const std::vector<double> one = deposit_cic(geom, {geom.node(c, c, c)});
    const double unit = 1.0 / (geom.h * geom.h * geom.h);
    CHECK_THAT(one[geom.index(c, c, c)], Catch::Matchers::WithinRel(unit, 1e-12));

    CHECK_THROWS_AS(deposit_cic(geom, {Vec3{geom.hi() + 1.0, 0, 0}}), OutOfDomain);
    CHECK_THROWS_AS(make_grid_geometry(spec, 2.5, spec.scaled_support() * 0.75), ConfigError);
}
