#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <utility>
#include <vector>

#include "mflab/density.hpp"
#include "mflab/ensemble.hpp"
#include "mflab/errors.hpp"
#include "mflab/kernel.hpp"
#include "mflab/meanfield.hpp"
#include "mflab/nbody.hpp"
#include "mflab/regress.hpp"
#include "mflab/rng.hpp"
#include "mflab/vec3.hpp"

namespace mflab {

// Mean-field expectations of the pair force and the envelope, as plain
// callables so both analytic tables and evolved empirical fields fit.
struct ExpectationField {
    std::function<Vec3(const Vec3&)> force;
    std::function<double(const Vec3&)> g;
};

inline ExpectationField expectation_from_radial(RadialMeanField table) {
    auto shared = std::make_shared<RadialMeanField>(std::move(table));
    return {[shared](const Vec3& x) { return shared->force_at(x); },
            [shared](const Vec3& x) { return shared->gbar_at(norm2(x)); }};
}

// Borrows the flow; the caller keeps it alive while the field is in use.
inline ExpectationField expectation_from_flow(const MeanFieldFlow& flow) {
    return {[&flow](const Vec3& x) { return flow.field_force_at(x); },
            [&flow](const Vec3& x) { return flow.field_g_at(x); }};
}

struct FluctuationRecord {
    std::size_t n = 0;
    double beta = 0.0;
    double t = 0.0;
    std::uint64_t seed = 0;
    double force_gap_inf = 0.0;      // max_i |F_i - Fbar(q_i)|_inf
    double g_gap_inf = 0.0;          // max_i |G_i - Gbar(q_i)|
    double tagged_variance_f = 0.0;  // summand variance seen by one tagged particle
    double tagged_variance_g = 0.0;
    double threshold_force = 0.0;  // N^(5b-1) ln N, before the front constant
    double threshold_g = 0.0;      // N^(7b-1) ln N
};

// Empirical-average fluctuations for one iid ensemble against its mean-field
// expectation. The tagged variances are the per-summand sample variances seen
// from particle 0, the quantities whose N-scaling the sweep pins down.
inline FluctuationRecord fluctuation_statistics(const ParticleEnsemble& bar,
                                                const KernelSpec& spec,
                                                const ExpectationField& expectation,
                                                bool use_cell_list = true, int workers = 1) {
    if (bar.size() != spec.n_particles)
        throw SizeMismatch("fluctuation_statistics: ensemble size must equal the kernel scale N");
    if (bar.size() < 3)
        throw InsufficientData("fluctuation_statistics: need at least 3 particles");
    bar.validate();

    FluctuationRecord rec;
    rec.n = bar.size();
    rec.beta = spec.beta;
    rec.t = bar.time;
    rec.seed = bar.seed;

    const auto pair_f = total_force(bar.q, spec, use_cell_list, true, workers);
    const auto pair_g = total_g(bar.q, spec, use_cell_list, workers);
    for (std::size_t i = 0; i < bar.size(); ++i) {
        rec.force_gap_inf =
            std::max(rec.force_gap_inf, norm_inf(pair_f[i] - expectation.force(bar.q[i])));
        rec.g_gap_inf = std::max(rec.g_gap_inf, std::fabs(pair_g[i] - expectation.g(bar.q[i])));
    }

    // Welford over the summands f(q_0 - q_j) and g(q_0 - q_j), j >= 1.
    const Vec3 q0 = bar.q[0];
    Vec3 mean_f{};
    Vec3 m2_f{};
    double mean_g = 0.0, m2_g = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 1; j < bar.size(); ++j) {
        const Vec3 d = q0 - bar.q[j];
        const Vec3 zf = eval_force(spec, d);
        const double zg = eval_g(spec, d);
        ++count;
        const double inv = 1.0 / static_cast<double>(count);
        for (std::size_t c = 0; c < 3; ++c) {
            const double delta = zf[c] - mean_f[c];
            mean_f[c] += delta * inv;
            m2_f[c] += delta * (zf[c] - mean_f[c]);
        }
        const double dg = zg - mean_g;
        mean_g += dg * inv;
        m2_g += dg * (zg - mean_g);
    }
    const double denom = static_cast<double>(count - 1);
    rec.tagged_variance_f = (m2_f.x + m2_f.y + m2_f.z) / denom;
    rec.tagged_variance_g = m2_g / denom;

    const double n = spec.n_real();
    const double log_n = std::log(n);
    rec.threshold_force = std::pow(n, 5.0 * spec.beta - 1.0) * log_n;
    rec.threshold_g = std::pow(n, 7.0 * spec.beta - 1.0) * log_n;
    return rec;
}

struct LlnConfig {
    std::vector<std::size_t> n_grid = {256, 1024, 4096};
    std::size_t replicas = 50;
    std::vector<double> times = {0.0};
    double c_gamma = 1.0;
    std::uint64_t base_seed = 20260814ull;
    std::size_t table_points = 2049;
    std::size_t ref_multiplier = 16;
    double grid_spacing = 0.0;
    int workers = 1;
    double dt = 0.0;
    bool use_cell_list = true;
};

// Fresh iid ensembles at t = 0 measured against the quadrature table; for
// positive times, replica blocks ride the mean-field flow as passive tracers
// (each block stays iid from the transported marginal) and are measured
// against the evolved reference field.
inline std::vector<FluctuationRecord> lln_sweep(const InitialDensity& density,
                                                const BaseProfile& profile, double beta,
                                                const LlnConfig& cfg) {
    if (cfg.n_grid.empty()) throw ConfigError("stats.n_grid must not be empty");
    if (cfg.replicas == 0) throw ConfigError("stats.replicas must be positive");
    std::vector<double> times = cfg.times;
    std::sort(times.begin(), times.end());
    if (!times.empty() && times.front() < 0.0)
        throw ConfigError("stats.times must be nonnegative");

    std::vector<FluctuationRecord> records;
    records.reserve(cfg.n_grid.size() * cfg.replicas * times.size());
    for (const std::size_t n : cfg.n_grid) {
        const KernelSpec spec = make_kernel_spec(profile, beta, n);
        const bool want_zero = std::find(times.begin(), times.end(), 0.0) != times.end();
        if (want_zero) {
            const ExpectationField expectation = expectation_from_radial(
                make_radial_mean_field(spec, density, cfg.table_points, cfg.workers));
            for (std::size_t r = 0; r < cfg.replicas; ++r) {
                const auto bar =
                    sample_ensemble(density, n, derive_seed(cfg.base_seed, n, r, 0));
                records.push_back(fluctuation_statistics(bar, spec, expectation,
                                                         cfg.use_cell_list, cfg.workers));
            }
        }

        std::vector<double> positive;
        for (double t : times)
            if (t > 0.0) positive.push_back(t);
        if (positive.empty()) continue;

        const auto ref0 = sample_ensemble(density, cfg.ref_multiplier * n,
                                          derive_seed(cfg.base_seed, n, 0x7265666cull));
        ParticleEnsemble tracers0;
        tracers0.seed = derive_seed(cfg.base_seed, n, 0x74726163ull);
        std::vector<std::uint64_t> block_seeds(cfg.replicas);
        for (std::size_t r = 0; r < cfg.replicas; ++r) {
            block_seeds[r] = derive_seed(cfg.base_seed, n, r, 1);
            const auto block = sample_ensemble(density, n, block_seeds[r]);
            tracers0.q.insert(tracers0.q.end(), block.q.begin(), block.q.end());
            tracers0.p.insert(tracers0.p.end(), block.p.begin(), block.p.end());
        }

        MeanFieldConfig mf;
        mf.ref_seed = ref0.seed;
        mf.ref_multiplier = cfg.ref_multiplier;
        mf.grid_spacing = cfg.grid_spacing;
        mf.t_final = positive.back();
        mf.workers = cfg.workers;
        MeanFieldFlow flow(ref0, tracers0, spec, mf);
        const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(spec);
        double reached = 0.0;
        for (const double t : positive) {
            const int steps = step_count(t - reached, dt);
            const double h = steps > 0 ? (t - reached) / steps : 0.0;
            for (int s = 0; s < steps; ++s) flow.step(h);
            reached = t;
            const ExpectationField expectation = expectation_from_flow(flow);
            for (std::size_t r = 0; r < cfg.replicas; ++r) {
                ParticleEnsemble bar;
                bar.seed = block_seeds[r];
                bar.time = t;
                const auto first = flow.tracers().q.begin() + static_cast<std::ptrdiff_t>(r * n);
                bar.q.assign(first, first + static_cast<std::ptrdiff_t>(n));
                const auto pfirst =
                    flow.tracers().p.begin() + static_cast<std::ptrdiff_t>(r * n);
                bar.p.assign(pfirst, pfirst + static_cast<std::ptrdiff_t>(n));
                records.push_back(fluctuation_statistics(bar, spec, expectation,
                                                         cfg.use_cell_list, cfg.workers));
            }
        }
    }
    return records;
}

struct ExceedanceRow {
    std::size_t n = 0;
    std::size_t replicas = 0;
    double frac_force = 0.0;  // fraction with force gap above c_gamma N^(5b-1) ln N
    double frac_g = 0.0;
};

inline std::vector<ExceedanceRow> threshold_exceedance(
    const std::vector<FluctuationRecord>& records, double c_gamma = 1.0) {
    std::map<std::size_t, ExceedanceRow> by_n;
    for (const auto& r : records) {
        auto& row = by_n[r.n];
        row.n = r.n;
        ++row.replicas;
        row.frac_force += (r.force_gap_inf > c_gamma * r.threshold_force) ? 1.0 : 0.0;
        row.frac_g += (r.g_gap_inf > c_gamma * r.threshold_g) ? 1.0 : 0.0;
    }
    std::vector<ExceedanceRow> out;
    out.reserve(by_n.size());
    for (auto& [n, row] : by_n) {
        row.frac_force /= static_cast<double>(row.replicas);
        row.frac_g /= static_cast<double>(row.replicas);
        out.push_back(row);
    }
    return out;
}

struct VarianceScaling {
    ScalingFit force;  // slope target 5 beta
    ScalingFit g;      // slope target 7 beta
};

inline VarianceScaling variance_scaling_fit(const std::vector<FluctuationRecord>& records,
                                            std::size_t resamples = 1000,
                                            std::uint64_t seed = 2026) {
    std::map<std::size_t, std::size_t> per_n;
    for (const auto& r : records) ++per_n[r.n];
    if (per_n.size() < 3)
        throw InsufficientData("variance fit needs at least 3 ensemble sizes");
    if (records.size() < 20) throw InsufficientData("variance fit needs at least 20 records");
    std::vector<std::pair<double, double>> rows_f, rows_g;
    rows_f.reserve(records.size());
    rows_g.reserve(records.size());
    for (const auto& r : records) {
        rows_f.emplace_back(static_cast<double>(r.n), r.tagged_variance_f);
        rows_g.emplace_back(static_cast<double>(r.n), r.tagged_variance_g);
    }
    return {fit_group_medians(rows_f, resamples, seed),
            fit_group_medians(rows_g, resamples, derive_seed(seed, 1))};
}

// Monte Carlo estimate of E exp|S| for a caller-supplied scalar statistic;
// used to confirm that normalized sums keep exponential moments bounded.
template <typename Draw>
double exponential_moment(Draw&& draw, std::size_t trials, Rng& rng) {
    if (trials == 0) throw InsufficientData("exponential_moment: trials must be positive");
    double acc = 0.0;
    for (std::size_t i = 0; i < trials; ++i) acc += std::exp(std::fabs(draw(rng)));
    return acc / static_cast<double>(trials);
}

}  // namespace mflab
