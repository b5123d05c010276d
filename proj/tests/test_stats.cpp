#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mflab/stats.hpp"
#include "oracle_quadrature.hpp"

using namespace mflab;
using oracle::shell_integral;

namespace {

const BaseProfile kBump{ProfileShape::poly_bump, 1.0, 1.0};

ExpectationField zero_expectation() {
    return {[](const Vec3&) { return Vec3{}; }, [](const Vec3&) { return 0.0; }};
}

// Standardized sum of n fair +-1 coins, drawn 64 flips at a time.
double standardized_coin_sum(Rng& rng, std::size_t n) {
    std::size_t ones = 0;
    std::size_t left = n;
    while (left >= 64) {
        ones += std::popcount(rng.next_u64());
        left -= 64;
    }
    if (left > 0) ones += std::popcount(rng.next_u64() & ((1ull << left) - 1ull));
    const double sum = 2.0 * static_cast<double>(ones) - static_cast<double>(n);
    return sum / std::sqrt(static_cast<double>(n));
}

}  // namespace

TEST_CASE("fluctuation statistics vanish for a zero-amplitude potential", "[stats]") {
    InitialDensity d;
    const KernelSpec spec = make_kernel_spec({ProfileShape::poly_bump, 1.0, 0.0}, 0.1, 64);
    const ParticleEnsemble bar = sample_ensemble(d, 64, 9);
    const FluctuationRecord rec = fluctuation_statistics(bar, spec, zero_expectation());

    CHECK(rec.force_gap_inf == 0.0);
    CHECK(rec.g_gap_inf == 0.0);
    CHECK(rec.tagged_variance_f == 0.0);
    CHECK(rec.tagged_variance_g == 0.0);
    CHECK(rec.n == 64);
    CHECK(rec.beta == 0.1);
    CHECK(rec.seed == 9);
    const double n = 64.0;
    CHECK_THAT(rec.threshold_force,
               Catch::Matchers::WithinRel(std::pow(n, -0.5) * std::log(n), 1e-12));
    CHECK_THAT(rec.threshold_g,
               Catch::Matchers::WithinRel(std::pow(n, -0.3) * std::log(n), 1e-12));

    const ParticleEnsemble wrong = sample_ensemble(d, 32, 10);
    CHECK_THROWS_AS(fluctuation_statistics(wrong, spec, zero_expectation()), SizeMismatch);
    const KernelSpec tiny = make_kernel_spec(kBump, 0.1, 2);
    const ParticleEnsemble two = sample_ensemble(d, 2, 11);
    CHECK_THROWS_AS(fluctuation_statistics(two, tiny, zero_expectation()), InsufficientData);
}

TEST_CASE("tagged summand variance matches the quadrature prediction", "[stats]") {
    InitialDensity d;
    const std::size_t n = 4096;
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, n);
    auto mag_sq = [&](double u) {
        const double m = spec.pow_4b * spec.profile.dh(spec.pow_b * u);
        return m * m;
    };
    const double g_rad = spec.g_support_real();
    const double g_val = spec.lipschitz_L() * spec.pow_5b;

    for (std::uint64_t seed : {21ull, 22ull, 23ull}) {
        const ParticleEnsemble bar = sample_ensemble(d, n, seed);
        const FluctuationRecord rec = fluctuation_statistics(bar, spec, zero_expectation());
        const double r0 = norm2(bar.q[0]);

        // predicted summand variance of the pair force seen from particle 0:
        // E|f(q0 - q)|^2 over q ~ rho, the |Ef|^2 correction being negligible
        const double pred_f = shell_integral(mag_sq, spec.scaled_support(), false, d, r0);
        REQUIRE(pred_f > 0.0);
        const double ratio_f = rec.tagged_variance_f / pred_f;
        CHECK(ratio_f > 0.25);
        CHECK(ratio_f < 4.0);

        // the envelope summand is Bernoulli: g_val with the mass of the
        // envelope ball around q0, zero otherwise
        const double mass =
            shell_integral([](double) { return 1.0; }, g_rad, false, d, r0);
        const double pred_g = g_val * g_val * mass * (1.0 - mass);
        REQUIRE(pred_g > 0.0);
        const double ratio_g = rec.tagged_variance_g / pred_g;
        CHECK(ratio_g > 0.25);
        CHECK(ratio_g < 4.0);
    }
}

TEST_CASE("variance scaling fit recovers an exact synthetic power law", "[stats]") {
    std::vector<FluctuationRecord> records;
    for (std::size_t n : {256, 1024, 4096}) {
        for (int r = 0; r < 20; ++r) {
            FluctuationRecord rec;
            rec.n = n;
            rec.tagged_variance_f = 3.0 * std::pow(static_cast<double>(n), 0.5);
            rec.tagged_variance_g = 2.0 * std::pow(static_cast<double>(n), 0.7);
            records.push_back(rec);
        }
    }
    const VarianceScaling fit = variance_scaling_fit(records, 200);
    CHECK_THAT(fit.force.fit.slope, Catch::Matchers::WithinAbs(0.5, 1e-10));
    CHECK_THAT(fit.g.fit.slope, Catch::Matchers::WithinAbs(0.7, 1e-10));
    CHECK_THAT(fit.force.fit.r2, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK(fit.force.groups == 3);
    // constant values inside every group collapse the bootstrap interval
    CHECK_THAT(fit.force.ci_lo, Catch::Matchers::WithinAbs(0.5, 1e-10));
    CHECK_THAT(fit.force.ci_hi, Catch::Matchers::WithinAbs(0.5, 1e-10));
    CHECK_THAT(fit.force.fit.intercept, Catch::Matchers::WithinAbs(std::log(3.0), 1e-10));

    // jittered values: the interval brackets the estimate and stays narrow
    Rng rng(33);
    for (auto& rec : records) {
        rec.tagged_variance_f *= 1.0 + 0.05 * (rng.uniform01() - 0.5);
        rec.tagged_variance_g *= 1.0 + 0.05 * (rng.uniform01() - 0.5);
    }
    const VarianceScaling noisy = variance_scaling_fit(records, 400);
    CHECK(noisy.force.ci_lo <= noisy.force.fit.slope);
    CHECK(noisy.force.ci_hi >= noisy.force.fit.slope);
    CHECK(noisy.force.ci_hi - noisy.force.ci_lo < 0.1);
    CHECK_THAT(noisy.g.fit.slope, Catch::Matchers::WithinAbs(0.7, 0.05));

    // preconditions: at least 3 sizes and 20 records
    std::vector<FluctuationRecord> two_sizes(records.begin(), records.begin() + 40);
    CHECK_THROWS_AS(variance_scaling_fit(two_sizes), InsufficientData);
    std::vector<FluctuationRecord> few(records.begin(), records.begin() + 10);
    CHECK_THROWS_AS(variance_scaling_fit(few), InsufficientData);
}

TEST_CASE("threshold exceedance counts strict crossings per size", "[stats]") {
    auto rec = [](std::size_t n, double fgap, double ggap) {
        FluctuationRecord r;
        r.n = n;
        r.force_gap_inf = fgap;
        r.g_gap_inf = ggap;
        r.threshold_force = 1.0;
        r.threshold_g = 0.5;
        return r;
    };
    const std::vector<FluctuationRecord> records = {
        rec(64, 1.5, 0.75), rec(64, 0.5, 0.25), rec(64, 1.0, 0.5), rec(64, 2.0, 0.0),
        rec(128, 0.2, 0.1)};

    const auto rows = threshold_exceedance(records, 1.0);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].n == 64);  // sorted by size
    CHECK(rows[1].n == 128);
    CHECK(rows[0].replicas == 4);
    CHECK(rows[1].replicas == 1);
    // gaps exactly at the threshold do not count
    CHECK(rows[0].frac_force == 0.5);
    CHECK(rows[0].frac_g == 0.25);
    CHECK(rows[1].frac_force == 0.0);

    // c = 0 counts every strictly positive gap; the zero gap still does not
    const auto loose = threshold_exceedance(records, 0.0);
    CHECK(loose[0].frac_force == 1.0);
    CHECK(loose[0].frac_g == 0.75);

    const auto strict = threshold_exceedance(records, 1e9);
    CHECK(strict[0].frac_force == 0.0);
    CHECK(strict[0].frac_g == 0.0);
}

TEST_CASE("replica sweep is seed-deterministic with documented block seeds", "[stats]") {
    InitialDensity d;
    LlnConfig cfg;
    cfg.n_grid = {48, 64};
    cfg.replicas = 3;
    cfg.times = {0.0, 0.1};
    cfg.ref_multiplier = 4;  // must cover replicas * n transported tracers
    cfg.table_points = 257;
    cfg.base_seed = 777;

    const auto records = lln_sweep(d, kBump, 0.1, cfg);
    REQUIRE(records.size() == 2 * 3 * 2);

    // layout: per size, first the fresh t = 0 replicas, then the transported
    // block at the positive time, each tagged with its documented seed
    std::size_t idx = 0;
    for (std::size_t n : {48, 64}) {
        for (std::size_t r = 0; r < 3; ++r, ++idx) {
            CHECK(records[idx].n == n);
            CHECK(records[idx].t == 0.0);
            CHECK(records[idx].seed == derive_seed(cfg.base_seed, n, r, 0));
        }
        for (std::size_t r = 0; r < 3; ++r, ++idx) {
            CHECK(records[idx].n == n);
            CHECK(records[idx].t == 0.1);
            CHECK(records[idx].seed == derive_seed(cfg.base_seed, n, r, 1));
        }
    }

    const auto rerun = lln_sweep(d, kBump, 0.1, cfg);
    REQUIRE(rerun.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(rerun[i].force_gap_inf == records[i].force_gap_inf);
        CHECK(rerun[i].g_gap_inf == records[i].g_gap_inf);
        CHECK(rerun[i].tagged_variance_f == records[i].tagged_variance_f);
    }

    LlnConfig bad = cfg;
    bad.n_grid = {};
    CHECK_THROWS_AS(lln_sweep(d, kBump, 0.1, bad), ConfigError);
    bad = cfg;
    bad.replicas = 0;
    CHECK_THROWS_AS(lln_sweep(d, kBump, 0.1, bad), ConfigError);
    bad = cfg;
    bad.times = {-0.5};
    CHECK_THROWS_AS(lln_sweep(d, kBump, 0.1, bad), ConfigError);
}

TEST_CASE("tagged empirical means stay inside the CLT band", "[stats]") {
    InitialDensity d;
    const std::size_t n = 512;
    const KernelSpec spec = make_kernel_spec(kBump, 0.1, n);
    const RadialMeanField table = make_radial_mean_field(spec, d, 513);
    const ExpectationField expectation = expectation_from_radial(table);

    // the wrapped callables reproduce the table
    const Vec3 probe{0.7, -0.1, 0.4};
    CHECK(norm_inf(expectation.force(probe) - table.force_at(probe)) == 0.0);
    CHECK(expectation.g(probe) == table.gbar_at(norm2(probe)));

    // for each replica, the empirical mean of the tagged summands minus its
    // expectation should sit within 3 standard errors almost always
    const int replicas = 40;
    int inside = 0;
    for (int r = 0; r < replicas; ++r) {
        const ParticleEnsemble bar = sample_ensemble(d, n, derive_seed(4040, r));
        const Vec3 q0 = bar.q[0];
        double mean = 0.0, m2 = 0.0;
        std::size_t count = 0;
        for (std::size_t j = 1; j < n; ++j) {
            const double z = eval_force(spec, q0 - bar.q[j]).x;
            ++count;
            const double delta = z - mean;
            mean += delta / static_cast<double>(count);
            m2 += delta * (z - mean);
        }
        const double var = m2 / static_cast<double>(count - 1);
        // E f(q0 - q) over q ~ rho is minus the mean-field force at q0
        const double expected = -table.force_at(q0).x;
        const double band = 3.0 * std::sqrt(var / static_cast<double>(count));
        if (std::fabs(mean - expected) <= band) ++inside;
    }
    CHECK(inside >= 38);  // 95% of 40
}

TEST_CASE("exponential moments of normalized sums stay bounded", "[stats]") {
    Rng rng(50);

    // degenerate statistic: exactly one
    CHECK(exponential_moment([](Rng&) { return 0.0; }, 1000, rng) == 1.0);
    CHECK_THROWS_AS(exponential_moment([](Rng&) { return 0.0; }, 0, rng), InsufficientData);

    // standardized coin sums approach the half-normal moment
    // E exp|Z| = 2 sqrt(e) Phi(1) ~ 2.7745, safely inside the pinned window
    const std::size_t trials = 20000;
    const double m_small =
        exponential_moment([](Rng& r) { return standardized_coin_sum(r, 100); }, trials, rng);
    const double m_large =
        exponential_moment([](Rng& r) { return standardized_coin_sum(r, 10000); }, trials, rng);
    const double lo = std::cosh(1.0) - 0.2;
    const double hi = std::exp(1.0) + 0.2;
    CHECK(m_small > lo);
    CHECK(m_small < hi);
    CHECK(m_large > lo);
    CHECK(m_large < hi);
    CHECK_THAT(m_large, Catch::Matchers::WithinAbs(2.7745, 0.1));
    // bounded uniformly in the number of summands
    CHECK(std::fabs(m_large - m_small) <= 0.1 * std::max(m_large, m_small));
}
