#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mflab/coupling.hpp"
#include "mflab/density.hpp"

using namespace mflab;

namespace {
const BaseProfile kBump{ProfileShape::poly_bump, 1.0, 1.0};
}

TEST_CASE("weighted distance and growth factor follow their formulas", "[coupling]") {
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, 1024);
    const double n = 1024.0;

    const double d1 = 0.2, d2 = 0.07;
    const double floor = std::pow(n, -0.5);  // N^(5 beta - 1) at beta = 0.1
    CHECK_THAT(weighted_distance(spec, d1, d2),
               Catch::Matchers::WithinRel(std::sqrt(std::log(n)) * d1 + d2 + floor, 1e-12));
    CHECK_THAT(weighted_distance(spec, 0.0, 0.0), Catch::Matchers::WithinRel(0.03125, 1e-12));

    CouplingParams p;
    p.lambda = 1.3;
    p.t_final = 0.5;
    CHECK_THAT(sigma_factor(spec, p, 0.2),
               Catch::Matchers::WithinRel(
                   std::exp(1.3 * std::sqrt(std::log(n)) * (0.5 - 0.2)), 1e-12));
    CHECK_THAT(sigma_factor(spec, p, p.t_final), Catch::Matchers::WithinRel(1.0, 1e-12));

    Distances d;
    ParticleEnsemble a, b;
    a.q = {{0, 0, 0}, {1, 2, 3}};
    a.p = {{0.5, 0, 0}, {0, 0, 0}};
    b.q = {{0.1, -0.2, 0}, {1, 2, 3.05}};
    b.p = {{0.5, 0, 0.3}, {0, -0.01, 0}};
    d = anisotropic_distance(a, b);
    CHECK(d.d1 == 0.2);
    CHECK(d.d2 == 0.3);
    b.q.pop_back();
    b.p.pop_back();
    CHECK_THROWS_AS(anisotropic_distance(a, b), DimensionMismatch);
}

TEST_CASE("initial distance-process value matches the closed form", "[coupling]") {
    CouplingParams p;
    p.alpha = 0.05;
    p.lambda = 1.0;
    p.t_final = 0.5;

    const KernelSpec spec = make_kernel_spec(kBump, 0.1, 64);
    const double n = 64.0;
    const double plain =
        std::exp(p.lambda * std::sqrt(std::log(n)) * p.t_final) * std::pow(n, 0.05 + 0.5 - 1.0);
    REQUIRE(plain < 1.0);  // the interesting, unclamped branch
    CHECK_THAT(j0_closed_form(spec, p), Catch::Matchers::WithinRel(plain, 1e-12));

    // the process at t = 0 with coinciding ensembles reproduces the closed form
    JProcess jp(spec, p);
    const double j0 = jp.add(0.0, weighted_distance(spec, 0.0, 0.0));
    CHECK_THAT(j0, Catch::Matchers::WithinRel(j0_closed_form(spec, p), 1e-12));

    // a fast enough growth rate saturates the clamp
    CouplingParams hot = p;
    hot.lambda = 10.0;
    CHECK(j0_closed_form(spec, hot) == 1.0);
}

TEST_CASE("distance process is monotone, clamped, and time-ordered", "[coupling]") {
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, 256);
    CouplingParams p;
    p.alpha = 0.05;
    JProcess jp(spec, p);

    double prev = jp.add(0.0, 0.01);
    CHECK(prev > 0.0);
    CHECK(prev <= 1.0);
    // a smaller contribution cannot lower the running supremum
    const double next = jp.add(0.1, 0.001);
    CHECK(next >= prev);
    CHECK(jp.j() == next);

    // repeated times are fine, going backwards is not
    CHECK_NOTHROW(jp.add(0.1, 0.002));
    CHECK_THROWS_AS(jp.add(0.05, 0.002), OutOfOrderStep);

    // 1 is absorbing and the raw supremum keeps growing past the clamp
    jp.add(0.2, 1e6);
    CHECK(jp.j() == 1.0);
    CHECK(jp.running_sup() > 1.0);
    const double sup_before = jp.running_sup();
    jp.add(0.3, 1e-9);
    CHECK(jp.j() == 1.0);
    CHECK(jp.running_sup() == sup_before);
}

TEST_CASE("coupling parameter validation enforces the exponent window", "[coupling]") {
    CouplingParams p;

    p.alpha = 0.05;
    CHECK_NOTHROW(validate_coupling_params(p, 0.1));
    p.alpha = 0.0;
    CHECK_THROWS_AS(validate_coupling_params(p, 0.1), ConfigError);
    p.alpha = 0.1;
    CHECK_THROWS_AS(validate_coupling_params(p, 0.1), ConfigError);  // alpha = beta
    p.alpha = 0.15;
    CHECK_THROWS_AS(validate_coupling_params(p, 0.1), ConfigError);

    p.alpha = 0.0;
    CHECK_NOTHROW(validate_coupling_params(p, 0.0));
    p.alpha = 0.05;
    CHECK_THROWS_AS(validate_coupling_params(p, 0.0), ConfigError);

    p = CouplingParams{};
    p.lambda = 0.0;
    CHECK_THROWS_AS(validate_coupling_params(p, 0.1), ConfigError);
    p = CouplingParams{};
    p.gamma = -1.0;
    CHECK_THROWS_AS(validate_coupling_params(p, 0.1), ConfigError);
    p = CouplingParams{};
    p.t_final = -0.1;
    CHECK_THROWS_AS(validate_coupling_params(p, 0.1), ConfigError);
    p = CouplingParams{};
    p.c_gamma = -0.5;
    CHECK_THROWS_AS(validate_coupling_params(p, 0.1), ConfigError);
}

TEST_CASE("set classification is quiet for a zero-amplitude potential", "[coupling]") {
    InitialDensity d;
    const KernelSpec spec = make_kernel_spec({ProfileShape::poly_bump, 1.0, 0.0}, 0.1, 64);
    const ParticleEnsemble ref = sample_ensemble(d, 256, 7);
    const ParticleEnsemble tr = sample_ensemble(d, 64, 8);
    MeanFieldConfig cfg;
    MeanFieldFlow flow(ref, tr, spec, cfg);

    CouplingParams params;
    params.alpha = 0.05;
    const SetRecord rec =
        classify_sets(flow.tracers().q, flow.tracer_forces(), flow, spec, params);
    CHECK(rec.force_gap == 0.0);
    CHECK(rec.g_gap == 0.0);
    CHECK_FALSE(rec.in_b);
    CHECK_FALSE(rec.in_c);

    std::vector<Vec3> wrong(tr.size() - 1);
    CHECK_THROWS_AS(classify_sets(flow.tracers().q, wrong, flow, spec, params),
                    DimensionMismatch);
}

TEST_CASE("coupled trajectories satisfy the distance-process identities", "[coupling]") {
    InitialDensity d;
    const std::size_t n = 64;
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, n);
    const ParticleEnsemble initial = sample_ensemble(d, n, 5);

    CouplingParams params;
    params.alpha = 0.05;
    params.t_final = 0.2;
    FlowConfig flow_cfg;
    MeanFieldConfig mf_cfg;
    mf_cfg.ref_multiplier = 4;
    mf_cfg.ref_seed = 99;

    const CoupledTrajectory out = run_coupled(initial, d, spec, params, flow_cfg, mf_cfg);

    REQUIRE(out.records.size() >= 2);
    CHECK(out.records.front().t == 0.0);
    CHECK_THAT(out.records.back().t, Catch::Matchers::WithinAbs(params.t_final, 1e-12));

    // at t = 0 both flows hold the same ensemble, so the record reproduces the
    // closed-form initial value of the distance process
    CHECK(out.records.front().d1 == 0.0);
    CHECK(out.records.front().d2 == 0.0);
    CHECK_THAT(out.records.front().j,
               Catch::Matchers::WithinRel(j0_closed_form(spec, params), 1e-12));

    const double floor = std::pow(spec.n_real(), 5.0 * spec.beta - 1.0);
    double sup_d1 = 0.0, sup_weighted = 0.0, prev_j = 0.0, prev_sup = 0.0;
    std::size_t count_b = 0;
    for (const StepRecord& r : out.records) {
        CHECK(r.weighted >= floor * (1.0 - 1e-12));
        CHECK_THAT(r.sigma,
                   Catch::Matchers::WithinRel(sigma_factor(spec, params, r.t), 1e-12));
        CHECK(r.j >= prev_j);
        CHECK(r.running_sup >= prev_sup);
        CHECK(r.j == std::min(1.0, r.running_sup));
        CHECK(r.in_a == (r.j == 1.0));
        prev_j = r.j;
        prev_sup = r.running_sup;
        sup_d1 = std::max(sup_d1, r.d1);
        sup_weighted = std::max(sup_weighted, r.weighted);
        count_b += r.in_b;
    }
    CHECK(out.summary.sup_d1 == sup_d1);
    CHECK(out.summary.sup_weighted == sup_weighted);
    CHECK(out.summary.j_final == out.records.back().j);
    CHECK(out.summary.exceeded ==
          (sup_weighted > std::pow(spec.n_real(), -params.alpha)));
    CHECK(out.summary.frac_steps_in_b ==
          static_cast<double>(count_b) / static_cast<double>(out.records.size()));
    CHECK(out.summary.n == n);
    CHECK(out.summary.seed == initial.seed);
    CHECK(out.summary.alpha == params.alpha);

    CHECK(out.final_psi.size() == n);
    CHECK(out.final_tracers.size() == n);
    CHECK(out.final_reference.size() == mf_cfg.ref_multiplier * n);
    CHECK_THAT(out.final_psi.time, Catch::Matchers::WithinAbs(params.t_final, 1e-12));
    CHECK(out.summary.sup_d1 < 0.5);  // short horizons keep the flows close

    // the whole pipeline is deterministic
    const CoupledTrajectory rerun = run_coupled(initial, d, spec, params, flow_cfg, mf_cfg);
    CHECK(rerun.summary.sup_weighted == out.summary.sup_weighted);
    CHECK(rerun.summary.j_final == out.summary.j_final);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(rerun.final_psi.q[i].x == out.final_psi.q[i].x);
        CHECK(rerun.final_psi.p[i].y == out.final_psi.p[i].y);
    }
}

TEST_CASE("coupled run validation rejects inconsistent setups", "[coupling]") {
    InitialDensity d;
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, 64);
    const ParticleEnsemble initial = sample_ensemble(d, 64, 5);
    CouplingParams params;
    params.alpha = 0.05;
    params.t_final = 0.05;
    FlowConfig flow_cfg;
    MeanFieldConfig mf_cfg;
    mf_cfg.ref_multiplier = 2;
    mf_cfg.ref_seed = 99;

    // ensemble size must equal the kernel scale
    const ParticleEnsemble small = sample_ensemble(d, 32, 6);
    CHECK_THROWS_AS(run_coupled(small, d, spec, params, flow_cfg, mf_cfg), SizeMismatch);

    // reference ensemble must exist and must not reuse the initial seed
    MeanFieldConfig bad = mf_cfg;
    bad.ref_multiplier = 0;
    CHECK_THROWS_AS(run_coupled(initial, d, spec, params, flow_cfg, bad), ConfigError);
    bad = mf_cfg;
    bad.ref_seed = initial.seed;
    CHECK_THROWS_AS(run_coupled(initial, d, spec, params, flow_cfg, bad), ConfigError);

    // exponent window
    CouplingParams badp = params;
    badp.alpha = 0.0;
    CHECK_THROWS_AS(run_coupled(initial, d, spec, badp, flow_cfg, mf_cfg), ConfigError);
    badp.alpha = 0.2;
    CHECK_THROWS_AS(run_coupled(initial, d, spec, badp, flow_cfg, mf_cfg), ConfigError);

    // beta = 0 runs with the degenerate alpha = 0 and nothing else
    const KernelSpec flat = make_kernel_spec(kBump, 0.0, 32);
    const ParticleEnsemble tiny = sample_ensemble(d, 32, 6);
    CouplingParams degenerate;
    degenerate.alpha = 0.0;
    degenerate.t_final = 0.05;
    const CoupledTrajectory out =
        run_coupled(tiny, d, flat, degenerate, flow_cfg, mf_cfg);
    CHECK(out.summary.j_final > 0.0);
    CouplingParams mixed = degenerate;
    mixed.alpha = 0.05;
    CHECK_THROWS_AS(run_coupled(tiny, d, flat, mixed, flow_cfg, mf_cfg), ConfigError);
}
