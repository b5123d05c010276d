// mflab: command-line laboratory for coupled interacting / mean-field
// particle flows. Subcommands: run, sweep, lln, wasserstein, fit, validate,
// print-defaults. Exit codes: 0 success, 1 configuration error, 2 simulation
// error, 3 validation failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mflab/config.hpp"
#include "mflab/coupling.hpp"
#include "mflab/manifest.hpp"
#include "mflab/stats.hpp"
#include "mflab/sweep.hpp"
#include "mflab/transport.hpp"
#include "mflab/version.hpp"

namespace {

using mflab::ConfigError;
using mflab::ordered_json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
    if (!out) throw ConfigError("write failed: " + path);
}

mflab::Config load_config_file(const std::string& path) {
    if (path.empty()) return mflab::default_config();
    return mflab::load_config(read_file(path));
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_ensemble_csv(const std::string& path, const mflab::ParticleEnsemble& e) {
    std::ostringstream os;
    os << "qx,qy,qz,px,py,pz\n";
    for (std::size_t i = 0; i < e.size(); ++i)
        os << fmt(e.q[i].x) << ',' << fmt(e.q[i].y) << ',' << fmt(e.q[i].z) << ','
           << fmt(e.p[i].x) << ',' << fmt(e.p[i].y) << ',' << fmt(e.p[i].z) << '\n';
    write_file(path, os.str());
}

mflab::EmpiricalMeasure read_measure_csv(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    mflab::EmpiricalMeasure m;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        mflab::PhasePoint z{};
        std::string cell;
        for (std::size_t c = 0; c < 6; ++c) {
            if (!std::getline(row, cell, ','))
                throw ConfigError(path + " line " + std::to_string(lineno) +
                                  ": expected 6 comma-separated values");
            try {
                z[c] = std::stod(cell);
            } catch (const std::exception&) {
                throw ConfigError(path + " line " + std::to_string(lineno) +
                                  ": cannot parse value '" + cell + "'");
            }
        }
        m.points.push_back(z);
    }
    if (m.points.empty()) throw ConfigError(path + ": no data rows");
    return m;
}

std::string series_csv(const std::vector<mflab::StepRecord>& records, int stride) {
    std::ostringstream os;
    os << "step,t,d1,d2,weighted,sigma,running_sup,j,in_a,in_b,in_c,force_gap,g_gap\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (stride > 1 && i % static_cast<std::size_t>(stride) != 0 &&
            i + 1 != records.size())
            continue;
        const auto& r = records[i];
        os << r.step << ',' << fmt(r.t) << ',' << fmt(r.d1) << ',' << fmt(r.d2) << ','
           << fmt(r.weighted) << ',' << fmt(r.sigma) << ',' << fmt(r.running_sup) << ','
           << fmt(r.j) << ',' << (r.in_a ? 1 : 0) << ',' << (r.in_b ? 1 : 0) << ','
           << (r.in_c ? 1 : 0) << ',' << fmt(r.force_gap) << ',' << fmt(r.g_gap) << '\n';
    }
    return os.str();
}

int cmd_run(const std::string& config_path, const std::string& out_override, std::size_t n_flag,
            std::uint64_t seed_flag, bool seed_set, int workers_flag, bool dump_states) {
    mflab::Config cfg = load_config_file(config_path);
    if (!out_override.empty()) cfg.output.directory = out_override;
    if (n_flag > 0) cfg.run.n = n_flag;
    if (seed_set) cfg.run.seed = seed_flag;
    if (workers_flag >= 0) cfg.flow.workers = workers_flag;
    mflab::validate_config(cfg);

    std::filesystem::create_directories(cfg.output.directory);
    const ordered_json manifest = mflab::make_manifest(cfg, "run", cfg.output.directory);
    const std::string hash = manifest["hash"].get<std::string>();
    write_file(cfg.output.directory + "/manifest.json", manifest.dump(2) + "\n");

    const mflab::InitialDensity density = mflab::density_from(cfg);
    const mflab::KernelSpec spec = mflab::kernel_from(cfg, cfg.run.n);
    const mflab::CouplingParams params = mflab::coupling_from(cfg);
    const mflab::FlowConfig flow_cfg = mflab::flow_from(cfg);
    const mflab::MeanFieldConfig mf_cfg =
        mflab::meanfield_from(cfg, mflab::derive_seed(cfg.run.seed, 0x726566ull));

    const auto initial = mflab::sample_ensemble(density, cfg.run.n, cfg.run.seed);
    const auto traj = mflab::run_coupled(initial, density, spec, params, flow_cfg, mf_cfg);
    const auto w1 = mflab::w1_vs_meanfield(traj.final_psi, traj.final_reference,
                                           cfg.transport.subsample,
                                           mflab::derive_seed(cfg.run.seed, 0x7731ull));

    if (cfg.output.write_series)
        write_file(cfg.output.directory + "/run_series.csv",
                   series_csv(traj.records, cfg.flow.snapshot_stride));
    if (dump_states) {
        write_ensemble_csv(cfg.output.directory + "/psi_final.csv", traj.final_psi);
        write_ensemble_csv(cfg.output.directory + "/tracers_final.csv", traj.final_tracers);
        write_ensemble_csv(cfg.output.directory + "/reference_final.csv",
                           traj.final_reference);
    }

    const auto& s = traj.summary;
    ordered_json summary;
    summary["version"] = mflab::kVersion;
    summary["created"] = mflab::utc_timestamp();
    summary["manifest"] = hash;
    summary["seed"] = s.seed;
    summary["n"] = s.n;
    summary["beta"] = s.beta;
    summary["alpha"] = s.alpha;
    summary["lambda"] = s.lambda;
    summary["t_final"] = s.t_final;
    summary["steps"] = traj.records.size() - 1;
    summary["sup_d1"] = s.sup_d1;
    summary["sup_d2"] = s.sup_d2;
    summary["sup_weighted"] = s.sup_weighted;
    summary["j_final"] = s.j_final;
    summary["j0_closed_form"] = mflab::j0_closed_form(spec, params);
    summary["exceeded"] = s.exceeded;
    summary["frac_steps_in_b"] = s.frac_steps_in_b;
    summary["frac_steps_in_c"] = s.frac_steps_in_c;
    summary["w1_final"] = w1.w1;
    summary["w1_points"] = w1.points;
    write_file(cfg.output.directory + "/run_summary.json", summary.dump(2) + "\n");

    std::cout << "run: n=" << s.n << " seed=" << s.seed << " j_final=" << s.j_final
              << " sup_weighted=" << s.sup_weighted << " -> " << cfg.output.directory
              << "/run_summary.json\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_override, int workers_flag,
              const std::string& rerun_cell, const std::string& manifest_path) {
    if (!rerun_cell.empty()) {
        if (manifest_path.empty())
            throw ConfigError("--rerun-cell requires --manifest pointing at the original run");
        const auto info = mflab::parse_manifest(read_file(manifest_path));
        const auto colon = rerun_cell.find(':');
        if (colon == std::string::npos)
            throw ConfigError("--rerun-cell expects the form N:REPLICA");
        std::size_t n = 0, rep = 0;
        try {
            n = std::stoull(rerun_cell.substr(0, colon));
            rep = std::stoull(rerun_cell.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("--rerun-cell expects the form N:REPLICA");
        }
        const auto row = mflab::run_sweep_cell(info.config, info.hash, n, rep);
        std::cout << mflab::sweep_row_json(row).dump() << "\n";
        return 0;
    }

    mflab::Config cfg = load_config_file(config_path);
    if (!out_override.empty()) cfg.output.directory = out_override;
    if (workers_flag >= 0) cfg.sweep.workers = workers_flag;
    mflab::validate_config(cfg);

    std::filesystem::create_directories(cfg.output.directory);
    const ordered_json manifest = mflab::make_manifest(cfg, "sweep", cfg.output.directory);
    const std::string hash = manifest["hash"].get<std::string>();
    write_file(cfg.output.directory + "/manifest.json", manifest.dump(2) + "\n");

    std::ofstream rows_out(cfg.output.directory + "/sweep_rows.jsonl",
                           std::ios::binary | std::ios::trunc);
    if (!rows_out)
        throw ConfigError("cannot write file: " + cfg.output.directory + "/sweep_rows.jsonl");
    const auto result = mflab::run_sweep(cfg, hash, [&](const mflab::SweepRow& row) {
        rows_out << mflab::sweep_row_json(row).dump() << "\n";
        rows_out.flush();  // crash safety: every finished cell survives
    });
    rows_out.close();
    write_file(cfg.output.directory + "/sweep_aggregate.json", result.aggregate.dump(2) + "\n");

    std::cout << "sweep: " << result.rows.size() << " rows -> " << cfg.output.directory
              << "/sweep_rows.jsonl\n";
    return 0;
}

int cmd_lln(const std::string& config_path, const std::string& out_override, int workers_flag) {
    mflab::Config cfg = load_config_file(config_path);
    if (!out_override.empty()) cfg.output.directory = out_override;
    if (workers_flag >= 0) cfg.flow.workers = workers_flag;
    mflab::validate_config(cfg);

    std::filesystem::create_directories(cfg.output.directory);
    const ordered_json manifest = mflab::make_manifest(cfg, "lln", cfg.output.directory);
    write_file(cfg.output.directory + "/manifest.json", manifest.dump(2) + "\n");

    const auto records = mflab::lln_sweep(mflab::density_from(cfg), mflab::profile_from(cfg),
                                          cfg.kernel.beta, mflab::lln_from(cfg));
    std::ostringstream rows;
    for (const auto& r : records) {
        ordered_json j;
        j["n"] = r.n;
        j["beta"] = r.beta;
        j["t"] = r.t;
        j["seed"] = r.seed;
        j["force_gap_inf"] = r.force_gap_inf;
        j["g_gap_inf"] = r.g_gap_inf;
        j["tagged_variance_f"] = r.tagged_variance_f;
        j["tagged_variance_g"] = r.tagged_variance_g;
        j["threshold_force"] = r.threshold_force;
        j["threshold_g"] = r.threshold_g;
        rows << j.dump() << "\n";
    }
    write_file(cfg.output.directory + "/lln_records.jsonl", rows.str());

    ordered_json fit;
    fit["exceedance"] = ordered_json::array();
    for (const auto& row : mflab::threshold_exceedance(records, cfg.stats.c_gamma)) {
        ordered_json e;
        e["n"] = row.n;
        e["replicas"] = row.replicas;
        e["frac_force"] = row.frac_force;
        e["frac_g"] = row.frac_g;
        fit["exceedance"].push_back(e);
    }
    try {
        const auto scaling = mflab::variance_scaling_fit(records);
        const auto fit_json = [](const mflab::ScalingFit& f, double target) {
            ordered_json j;
            j["slope"] = f.fit.slope;
            j["intercept"] = f.fit.intercept;
            j["r2"] = f.fit.r2;
            j["ci_lo"] = f.ci_lo;
            j["ci_hi"] = f.ci_hi;
            j["target"] = target;
            return j;
        };
        fit["variance_force"] = fit_json(scaling.force, 5.0 * cfg.kernel.beta);
        fit["variance_g"] = fit_json(scaling.g, 7.0 * cfg.kernel.beta);
    } catch (const mflab::InsufficientData&) {
        fit["variance_force"] = nullptr;
        fit["variance_g"] = nullptr;
    }
    write_file(cfg.output.directory + "/lln_fit.json", fit.dump(2) + "\n");

    std::cout << "lln: " << records.size() << " records -> " << cfg.output.directory
              << "/lln_records.jsonl\n";
    return 0;
}

int cmd_wasserstein(const std::string& path_a, const std::string& path_b, std::size_t subsample,
                    std::uint64_t seed) {
    const auto a = read_measure_csv(path_a);
    const auto b = read_measure_csv(path_b);
    const auto start = std::chrono::steady_clock::now();
    mflab::W1Estimate est;
    if (subsample == 0) {
        if (a.size() != b.size())
            throw ConfigError(
                "exact transport needs equal sizes; pass --subsample for unequal clouds");
        est = {mflab::w1_exact(a, b), a.size()};
    } else {
        est = mflab::w1_between(a, b, subsample, seed);
    }
    const auto stop = std::chrono::steady_clock::now();

    ordered_json out;
    out["w1"] = est.w1;
    if (a.size() == b.size()) {
        const auto bounds = mflab::coupling_bounds(a, b);
        out["w1_upper"] = bounds.w1_upper;
        out["winf_upper"] = bounds.winf_upper;
    } else {
        out["w1_upper"] = nullptr;
        out["winf_upper"] = nullptr;
    }
    out["n"] = a.size();
    out["points_used"] = est.points;
    out["runtime_ms"] = std::chrono::duration<double, std::milli>(stop - start).count();
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_fit(const std::string& rows_path, std::size_t resamples, std::uint64_t seed) {
    std::istringstream in(read_file(rows_path));
    std::string line;
    std::vector<std::pair<double, double>> rows;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(rows_path + " line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.contains("n") || !j.contains("sup_weighted"))
            throw ConfigError(rows_path + " line " + std::to_string(lineno) +
                              ": row lacks n/sup_weighted");
        rows.emplace_back(j["n"].get<double>(), j["sup_weighted"].get<double>());
    }
    std::size_t distinct = 0;
    {
        std::vector<double> ns;
        for (const auto& [n, v] : rows) ns.push_back(n);
        std::sort(ns.begin(), ns.end());
        distinct = static_cast<std::size_t>(
            std::unique(ns.begin(), ns.end()) - ns.begin());
    }
    if (distinct < 3)
        throw mflab::InsufficientData("fit needs at least 3 distinct ensemble sizes");
    const auto fit = mflab::fit_group_medians(rows, resamples, seed);

    ordered_json out;
    out["rows"] = rows.size();
    out["distinct_n"] = distinct;
    out["slope"] = fit.fit.slope;
    out["intercept"] = fit.fit.intercept;
    out["r2"] = fit.fit.r2;
    out["ci_lo"] = fit.ci_lo;
    out["ci_hi"] = fit.ci_hi;
    out["implied_alpha"] = -fit.fit.slope;
    out["note"] =
        "modeled decay: median sup-distance falls at least like N^-alpha for any alpha < beta";
    std::cout << out.dump(2) << "\n";
    return 0;
}

struct SuiteResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

int cmd_validate(const std::string& config_path, const std::string& mutate, double energy_tol,
                 double dt_override, std::size_t samples) {
    mflab::Config cfg = load_config_file(config_path);
    mflab::validate_config(cfg);
    if (!mutate.empty() && mutate != "flip-force-sign")
        throw ConfigError("--mutate: unknown mutation '" + mutate + "'");
    const double force_sign = mutate == "flip-force-sign" ? -1.0 : 1.0;
    const auto force = [&](const mflab::KernelSpec& spec, const mflab::Vec3& q) {
        return force_sign * mflab::eval_force(spec, q);
    };

    const mflab::BaseProfile profile = mflab::profile_from(cfg);
    const mflab::InitialDensity density = mflab::density_from(cfg);
    std::vector<SuiteResult> suites;

    {  // Lipschitz bound of the base force profile.
        const mflab::KernelSpec spec = mflab::make_kernel_spec(profile, cfg.kernel.beta, 512);
        mflab::Rng rng(mflab::derive_seed(7001, 0));
        std::size_t violations = 0;
        const double box = profile.radius * 1.2;
        const auto eval_l = [&](const mflab::Vec3& x) {
            const double r = mflab::norm2(x);
            return profile.dh_over_r(r) * x;
        };
        for (std::size_t s = 0; s < samples; ++s) {
            const mflab::Vec3 a{rng.uniform(-box, box), rng.uniform(-box, box),
                                rng.uniform(-box, box)};
            const mflab::Vec3 b{rng.uniform(-box, box), rng.uniform(-box, box),
                                rng.uniform(-box, box)};
            if (mflab::norm_inf(eval_l(a) - eval_l(b)) >
                spec.constants.lipschitz_l * mflab::norm_inf(a - b))
                ++violations;
        }
        suites.push_back({"kernel-lipschitz", violations == 0,
                          std::to_string(violations) + " violations / " +
                              std::to_string(samples) + " samples"});
    }

    {  // Fluctuation domination + force/potential-gradient consistency.
        const std::size_t n = 1024;
        mflab::KernelSpec spec = mflab::make_kernel_spec(
            profile, cfg.kernel.beta, n,
            cfg.coupling.alpha > 0.0 ? std::optional<double>(cfg.coupling.alpha)
                                     : std::nullopt);
        mflab::Rng rng(mflab::derive_seed(7001, 1));
        std::size_t violations = 0;
        const double nr = spec.n_real();
        const double dmax = 2.0 * std::pow(nr, -cfg.coupling.alpha);
        const double box = spec.g_support_real() + dmax;
        for (std::size_t s = 0; s < samples; ++s) {
            const mflab::Vec3 q{rng.uniform(-box, box), rng.uniform(-box, box),
                                rng.uniform(-box, box)};
            const mflab::Vec3 d{rng.uniform(-dmax, dmax), rng.uniform(-dmax, dmax),
                                rng.uniform(-dmax, dmax)};
            if (mflab::norm_inf(force(spec, q) - force(spec, q + d)) >
                mflab::eval_g(spec, q) * mflab::norm_inf(d))
                ++violations;
        }
        // The force must be N times the gradient of the scaled potential;
        // central differences catch sign or scale defects that the
        // symmetry-based suites cannot see (a global sign flip preserves both
        // antisymmetry and domination).
        std::size_t grad_fail = 0;
        const double h = 1e-6 * spec.scaled_support();
        const double fscale = spec.pow_4b * spec.constants.sup_l;
        for (std::size_t s = 0; s < 200; ++s) {
            const double r = 0.95 * spec.scaled_support() * std::cbrt(rng.uniform01());
            mflab::Vec3 q{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                          rng.uniform(-1.0, 1.0)};
            const double qn = mflab::norm2(q);
            q = (qn > 1e-12 ? r / qn : 0.0) * q;
            const mflab::Vec3 f = force(spec, q);
            for (std::size_t c = 0; c < 3; ++c) {
                mflab::Vec3 qp = q, qm = q;
                qp[c] += h;
                qm[c] -= h;
                const double grad =
                    nr * (mflab::eval_phi_scaled(spec, qp) - mflab::eval_phi_scaled(spec, qm)) /
                    (2.0 * h);
                if (std::fabs(f[c] - grad) > 1e-4 * fscale + 1e-6 * std::fabs(grad))
                    ++grad_fail;
            }
        }
        suites.push_back({"kernel-domination", violations == 0 && grad_fail == 0,
                          std::to_string(violations) + " domination / " +
                              std::to_string(grad_fail) + " gradient mismatches"});
    }

    {  // Cell list against the all-pairs reference.
        mflab::Rng rng(mflab::derive_seed(7001, 2));
        double worst = 0.0;
        for (int c = 0; c < 10; ++c) {
            const std::size_t n = 64 + static_cast<std::size_t>(rng.uniform01() * 448.0);
            const double beta = (c % 2 == 0) ? 0.0 : cfg.kernel.beta;
            const mflab::KernelSpec spec = mflab::make_kernel_spec(profile, beta, n);
            const auto e = mflab::sample_ensemble(density, n, mflab::derive_seed(7002, c));
            const auto fa = mflab::total_force(e.q, spec, true, true, 1);
            const auto fb = mflab::total_force(e.q, spec, false, true, 1);
            double scale = 0.0, diff = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                scale = std::max(scale, mflab::norm_inf(fb[i]));
                diff = std::max(diff, mflab::norm_inf(fa[i] - fb[i]));
            }
            worst = std::max(worst, diff / std::max(scale, 1e-300));
        }
        suites.push_back(
            {"cell-list", worst <= 1e-12, "max relative discrepancy " + fmt(worst)});
    }

    {  // Energy and momentum conservation under velocity-Verlet.
        const std::size_t n = 256;
        const mflab::KernelSpec spec = mflab::make_kernel_spec(profile, cfg.kernel.beta, n);
        auto e = mflab::sample_ensemble(density, n, 7003);
        mflab::FlowConfig fc;
        fc.dt = dt_override;
        fc.t_final = 0.5;
        const double h0 = mflab::hamiltonian(e, spec);
        mflab::Vec3 p0{};
        for (const auto& p : e.p) p0 += p;
        mflab::run_flow(e, spec, fc);
        const double h1 = mflab::hamiltonian(e, spec);
        mflab::Vec3 p1{};
        for (const auto& p : e.p) p1 += p;
        const double drift = std::fabs(h1 - h0) / std::max(std::fabs(h0), 1e-300);
        const double pdrift = mflab::norm_inf(p1 - p0);
        suites.push_back({"energy-momentum", drift <= energy_tol && pdrift <= 1e-10,
                          "energy drift " + fmt(drift) + ", momentum drift " + fmt(pdrift)});
    }

    {  // Distance-process invariants on a small coupled run.
        const std::size_t n = 64;
        const mflab::KernelSpec spec = mflab::make_kernel_spec(profile, cfg.kernel.beta, n);
        mflab::CouplingParams params = mflab::coupling_from(cfg);
        params.t_final = 0.2;
        mflab::FlowConfig fc = mflab::flow_from(cfg);
        mflab::MeanFieldConfig mf = mflab::meanfield_from(cfg, mflab::derive_seed(7004, 1));
        const auto initial = mflab::sample_ensemble(density, n, 7004);
        const auto traj = mflab::run_coupled(initial, density, spec, params, fc, mf);
        bool ok = true;
        std::string why = "all invariants hold";
        double prev = 0.0;
        for (const auto& r : traj.records) {
            if (r.j < prev || r.j <= 0.0 || r.j > 1.0) {
                ok = false;
                why = "J out of range or decreasing at step " + std::to_string(r.step);
                break;
            }
            if (r.in_a != (r.j == 1.0)) {
                ok = false;
                why = "set-A flag inconsistent at step " + std::to_string(r.step);
                break;
            }
            prev = r.j;
        }
        if (ok) {
            const double j0 = traj.records.front().j;
            const double closed = mflab::j0_closed_form(spec, params);
            if (std::fabs(j0 - closed) > 1e-12) {
                ok = false;
                why = "initial value differs from closed form by " + fmt(j0 - closed);
            }
        }
        suites.push_back({"distance-process", ok, why});
    }

    {  // Transport metric axioms.
        mflab::Rng rng(mflab::derive_seed(7001, 3));
        const auto draw = [&](std::size_t n) {
            mflab::EmpiricalMeasure m;
            m.points.resize(n);
            for (auto& z : m.points)
                for (auto& c : z) c = rng.uniform(-1.0, 1.0);
            return m;
        };
        bool ok = true;
        std::string why = "symmetry, triangle, and coupling dominance hold";
        for (int t = 0; t < 100 && ok; ++t) {
            const std::size_t n = 4 + static_cast<std::size_t>(rng.uniform01() * 12.0);
            const auto a = draw(n), b = draw(n), c = draw(n);
            const double ab = mflab::w1_exact(a, b);
            const double ba = mflab::w1_exact(b, a);
            const double bc = mflab::w1_exact(b, c);
            const double ac = mflab::w1_exact(a, c);
            if (std::fabs(ab - ba) > 1e-12) {
                ok = false;
                why = "symmetry violated";
            } else if (ac > ab + bc + 1e-9) {
                ok = false;
                why = "triangle inequality violated";
            } else if (ab > mflab::coupling_bounds(a, b).w1_upper + 1e-12) {
                ok = false;
                why = "exceeds index-coupling upper bound";
            }
        }
        suites.push_back({"transport-metric", ok, why});
    }

    bool all = true;
    for (const auto& s : suites) {
        all = all && s.pass;
        std::printf("%-18s %s  (%s)\n", s.name.c_str(), s.pass ? "pass" : "FAIL",
                    s.detail.c_str());
    }
    std::printf("validate: %s\n", all ? "all suites passed" : "FAILURES PRESENT");
    return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interacting vs mean-field particle flow laboratory"};
    app.set_version_flag("--version", mflab::kVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir, rerun_cell, manifest_path, mutate;
    std::string wass_a, wass_b, fit_rows;
    std::size_t n_flag = 0, subsample = 0, resamples = 1000, samples = 20000;
    std::uint64_t seed_flag = 0, wass_seed = 1, fit_seed = 2026;
    int workers_flag = -1;
    bool dump_states = false;
    double energy_tol = 1e-4, dt_override = 0.0;

    auto* run = app.add_subcommand("run", "one coupled interacting/mean-field run");
    run->add_option("--config", config_path, "TOML config file");
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("-n,--n", n_flag, "particle count (overrides config)");
    auto* seed_opt = run->add_option("--seed", seed_flag, "base seed (overrides config)");
    run->add_option("--workers", workers_flag, "worker threads (0 = all cores)");
    run->add_flag("--dump-states", dump_states, "also write final ensembles as CSV");

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo grid over (N, replica)");
    sweep->add_option("--config", config_path, "TOML config file");
    sweep->add_option("--out", out_dir, "output directory (overrides config)");
    sweep->add_option("--workers", workers_flag, "worker threads (0 = all cores)");
    sweep->add_option("--rerun-cell", rerun_cell, "recompute one cell, form N:REPLICA");
    sweep->add_option("--manifest", manifest_path, "manifest.json of the original sweep");

    auto* lln = app.add_subcommand("lln", "fluctuation statistics across ensemble sizes");
    lln->add_option("--config", config_path, "TOML config file");
    lln->add_option("--out", out_dir, "output directory (overrides config)");
    lln->add_option("--workers", workers_flag, "worker threads (0 = all cores)");

    auto* wass = app.add_subcommand("wasserstein", "W1 distance between two ensemble CSVs");
    wass->add_option("a", wass_a, "first ensemble CSV")->required();
    wass->add_option("b", wass_b, "second ensemble CSV")->required();
    wass->add_option("--subsample", subsample, "subsample size (0 = exact on full clouds)");
    wass->add_option("--seed", wass_seed, "subsampling seed");

    auto* fit = app.add_subcommand("fit", "log-log decay fit over sweep rows");
    fit->add_option("rows", fit_rows, "sweep_rows.jsonl from a sweep")->required();
    fit->add_option("--resamples", resamples, "bootstrap resamples");
    fit->add_option("--seed", fit_seed, "bootstrap seed");

    auto* validate = app.add_subcommand("validate", "cross-module invariant suites");
    validate->add_option("--config", config_path, "TOML config file");
    validate->add_option("--mutate", mutate, "fault-injection hook (flip-force-sign)");
    validate->add_option("--energy-tol", energy_tol, "energy drift tolerance");
    validate->add_option("--dt", dt_override, "time step override (0 = default)");
    validate->add_option("--samples", samples, "sample count for kernel suites");

    auto* defaults = app.add_subcommand("print-defaults", "print the default config as TOML");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(config_path, out_dir, n_flag, seed_flag, seed_opt->count() > 0,
                           workers_flag, dump_states);
        if (*sweep) return cmd_sweep(config_path, out_dir, workers_flag, rerun_cell,
                                     manifest_path);
        if (*lln) return cmd_lln(config_path, out_dir, workers_flag);
        if (*wass) return cmd_wasserstein(wass_a, wass_b, subsample, wass_seed);
        if (*fit) return cmd_fit(fit_rows, resamples, fit_seed);
        if (*validate)
            return cmd_validate(config_path, mutate, energy_tol, dt_override, samples);
        if (*defaults) {
            std::cout << mflab::config_to_toml(mflab::default_config());
            return 0;
        }
    } catch (const mflab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const mflab::SimulationError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
