#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mflab/config.hpp"
#include "mflab/coupling.hpp"
#include "mflab/manifest.hpp"
#include "mflab/regress.hpp"
#include "mflab/transport.hpp"

namespace mflab {

struct SweepRow {
    std::size_t n = 0;
    std::size_t replica = 0;
    std::uint64_t seed = 0;
    double sup_d1 = 0.0, sup_d2 = 0.0, sup_weighted = 0.0, j_final = 0.0;
    bool exceeded = false;
    double frac_in_b = 0.0, frac_in_c = 0.0;
    double w1_final = 0.0;
    std::size_t w1_points = 0;
    std::optional<double> runtime_ms;  // absent in deterministic mode
    std::string manifest_hash;
};

inline ordered_json sweep_row_json(const SweepRow& r) {
    ordered_json j;
    j["n"] = r.n;
    j["replica"] = r.replica;
    j["seed"] = r.seed;
    j["sup_d1"] = r.sup_d1;
    j["sup_d2"] = r.sup_d2;
    j["sup_weighted"] = r.sup_weighted;
    j["j_final"] = r.j_final;
    j["exceeded"] = r.exceeded;
    j["frac_in_b"] = r.frac_in_b;
    j["frac_in_c"] = r.frac_in_c;
    j["w1_final"] = r.w1_final;
    j["w1_points"] = r.w1_points;
    if (r.runtime_ms)
        j["runtime_ms"] = *r.runtime_ms;
    else
        j["runtime_ms"] = nullptr;
    j["manifest"] = r.manifest_hash;
    return j;
}

// One Monte Carlo cell: coupled run at (n, replica) plus the final-state
// transport estimate. Seeds derive from (base_seed, n, replica) only, so any
// cell can be recomputed in isolation.
inline SweepRow run_sweep_cell(const Config& cfg, const std::string& manifest_hash,
                               std::size_t n, std::size_t replica) {
    const std::uint64_t seed = derive_seed(cfg.sweep.base_seed, n, replica);
    const InitialDensity density = density_from(cfg);
    const KernelSpec spec = kernel_from(cfg, n);
    const CouplingParams params = coupling_from(cfg);
    FlowConfig flow_cfg = flow_from(cfg);
    flow_cfg.workers = 1;  // the sweep parallelizes across cells, not inside them
    MeanFieldConfig mf_cfg = meanfield_from(cfg, derive_seed(seed, 0x726566ull));
    mf_cfg.workers = 1;

    const auto start = std::chrono::steady_clock::now();
    const ParticleEnsemble initial = sample_ensemble(density, n, seed);
    const CoupledTrajectory traj = run_coupled(initial, density, spec, params, flow_cfg, mf_cfg);
    const W1Estimate w1 = w1_vs_meanfield(traj.final_psi, traj.final_reference,
                                          cfg.transport.subsample, derive_seed(seed, 0x7731ull));
    const auto stop = std::chrono::steady_clock::now();

    SweepRow row;
    row.n = n;
    row.replica = replica;
    row.seed = seed;
    row.sup_d1 = traj.summary.sup_d1;
    row.sup_d2 = traj.summary.sup_d2;
    row.sup_weighted = traj.summary.sup_weighted;
    row.j_final = traj.summary.j_final;
    row.exceeded = traj.summary.exceeded;
    row.frac_in_b = traj.summary.frac_steps_in_b;
    row.frac_in_c = traj.summary.frac_steps_in_c;
    row.w1_final = w1.w1;
    row.w1_points = w1.points;
    if (!cfg.flow.deterministic)
        row.runtime_ms =
            std::chrono::duration<double, std::milli>(stop - start).count();
    row.manifest_hash = manifest_hash;
    return row;
}

// Per-N medians plus log-log fits across N. Fits need at least two distinct
// sizes; below that the aggregate reports nulls instead of failing.
inline ordered_json aggregate_sweep(const std::vector<SweepRow>& rows) {
    std::map<std::size_t, std::vector<const SweepRow*>> by_n;
    for (const auto& r : rows) by_n[r.n].push_back(&r);
    ordered_json agg;
    agg["per_n"] = ordered_json::array();
    std::vector<std::pair<double, double>> weighted_rows, w1_rows;
    for (const auto& [n, cell] : by_n) {
        std::vector<double> sw, jf, w1;
        double exceeded = 0.0, fb = 0.0, fc = 0.0;
        for (const auto* r : cell) {
            sw.push_back(r->sup_weighted);
            jf.push_back(r->j_final);
            w1.push_back(r->w1_final);
            exceeded += r->exceeded ? 1.0 : 0.0;
            fb += r->frac_in_b;
            fc += r->frac_in_c;
            weighted_rows.emplace_back(static_cast<double>(n), r->sup_weighted);
            w1_rows.emplace_back(static_cast<double>(n), r->w1_final);
        }
        const double count = static_cast<double>(cell.size());
        ordered_json e;
        e["n"] = n;
        e["replicas"] = cell.size();
        e["median_sup_weighted"] = median(sw);
        e["median_j_final"] = median(jf);
        e["median_w1"] = median(w1);
        e["frac_exceeded"] = exceeded / count;
        e["mean_frac_in_b"] = fb / count;
        e["mean_frac_in_c"] = fc / count;
        agg["per_n"].push_back(e);
    }
    const auto fit_json = [](const std::vector<std::pair<double, double>>& data) {
        ordered_json f;
        try {
            const ScalingFit fit = fit_group_medians(data);
            f["slope"] = fit.fit.slope;
            f["intercept"] = fit.fit.intercept;
            f["r2"] = fit.fit.r2;
            f["ci_lo"] = fit.ci_lo;
            f["ci_hi"] = fit.ci_hi;
        } catch (const InsufficientData&) {
            f = nullptr;
        }
        return f;
    };
    agg["fit_sup_weighted"] = fit_json(weighted_rows);
    agg["fit_w1"] = fit_json(w1_rows);
    return agg;
}

struct SweepResult {
    std::vector<SweepRow> rows;
    ordered_json aggregate;
};

// Runs every (n, replica) cell, invoking on_row in canonical cell order (rows
// may finish out of order under parallelism; a reorder buffer serializes the
// flush so output files are byte-stable for a fixed config).
inline SweepResult run_sweep(const Config& cfg, const std::string& manifest_hash,
                             const std::function<void(const SweepRow&)>& on_row = {}) {
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (const auto n : cfg.sweep.n_grid)
        for (std::size_t r = 0; r < cfg.sweep.replicas; ++r) cells.emplace_back(n, r);

    SweepResult out;
    out.rows.resize(cells.size());
    const unsigned workers =
        std::min<unsigned>(worker_budget(cfg.sweep.workers),
                           static_cast<unsigned>(cells.size()));
    std::atomic<std::size_t> next{0};
    std::mutex flush_mu;
    std::map<std::size_t, const SweepRow*> pending;
    std::size_t next_flush = 0;
    std::exception_ptr error;

    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            out.rows[i] = run_sweep_cell(cfg, manifest_hash, cells[i].first, cells[i].second);
            std::lock_guard<std::mutex> lock(flush_mu);
            pending[i] = &out.rows[i];
            while (!pending.empty() && pending.begin()->first == next_flush) {
                if (on_row) on_row(*pending.begin()->second);
                pending.erase(pending.begin());
                ++next_flush;
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        std::mutex error_mu;
        auto guarded = [&]() {
            try {
                work();
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
                next.store(cells.size());  // drain remaining work
            }
        };
        pool.reserve(workers - 1);
        for (unsigned t = 1; t < workers; ++t) pool.emplace_back(guarded);
        guarded();
        for (auto& th : pool) th.join();
        if (error) std::rethrow_exception(error);
    }

    out.aggregate = aggregate_sweep(out.rows);
    return out;
}

}  // namespace mflab
