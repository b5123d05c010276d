#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "mflab/density.hpp"
#include "mflab/ensemble.hpp"
#include "mflab/errors.hpp"
#include "mflab/kernel.hpp"
#include "mflab/meanfield.hpp"
#include "mflab/nbody.hpp"
#include "mflab/vec3.hpp"

namespace mflab {

struct CouplingParams {
    double alpha = 0.05;   // exceedance exponent, 0 < alpha < beta (alpha = 0 iff beta = 0)
    double gamma = 1.0;    // target decay exponent (reported, not estimated)
    double lambda = 1.0;   // Gronwall rate in sigma
    double t_final = 0.5;
    double c_gamma = 1.0;  // front constant on the B/C thresholds
};

inline void validate_coupling_params(const CouplingParams& p, double beta) {
    if (beta > 0.0) {
        if (!(p.alpha > 0.0 && p.alpha < beta))
            throw ConfigError("coupling.alpha must satisfy 0 < alpha < beta");
    } else if (p.alpha != 0.0) {
        // beta = 0 leaves no admissible alpha in (0, beta); the degenerate
        // alpha = 0 keeps the diagnostics defined with no amplification.
        throw ConfigError("coupling.alpha must be 0 when beta = 0");
    }
    if (!(p.lambda > 0.0)) throw ConfigError("coupling.lambda must be positive");
    if (!(p.gamma > 0.0)) throw ConfigError("coupling.gamma must be positive");
    if (!(p.t_final >= 0.0)) throw ConfigError("coupling.t_final must be nonnegative");
    if (!(p.c_gamma >= 0.0)) throw ConfigError("coupling.c_gamma must be nonnegative");
}

struct Distances {
    double d1 = 0.0;  // sup over particles and coordinates of |q_psi - q_phi|
    double d2 = 0.0;  // same for momenta
};

inline Distances anisotropic_distance(const ParticleEnsemble& psi, const ParticleEnsemble& phi) {
    if (psi.size() != phi.size())
        throw DimensionMismatch("anisotropic_distance: particle counts differ");
    Distances d;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        d.d1 = std::max(d.d1, norm_inf(psi.q[i] - phi.q[i]));
        d.d2 = std::max(d.d2, norm_inf(psi.p[i] - phi.p[i]));
    }
    return d;
}

// sqrt(ln N) d1 + d2 + N^(5 beta - 1): the metric the distance process runs
// on. The additive floor keeps it strictly positive.
inline double weighted_distance(const KernelSpec& spec, double d1, double d2) {
    const double n = spec.n_real();
    return std::sqrt(std::log(n)) * d1 + d2 + std::pow(n, 5.0 * spec.beta - 1.0);
}

inline double sigma_factor(const KernelSpec& spec, const CouplingParams& p, double s) {
    return std::exp(p.lambda * std::sqrt(std::log(spec.n_real())) * (p.t_final - s));
}

inline double j0_closed_form(const KernelSpec& spec, const CouplingParams& p) {
    const double n = spec.n_real();
    return std::min(1.0, std::exp(p.lambda * std::sqrt(std::log(n)) * p.t_final) *
                             std::pow(n, p.alpha + 5.0 * spec.beta - 1.0));
}

// Clamped running supremum of sigma(s) N^alpha weighted(s) over the time grid
// points seen so far. Monotone nondecreasing by construction; 1 is absorbing.
class JProcess {
  public:
    JProcess(const KernelSpec& spec, const CouplingParams& p)
        : sqrt_log_n_(std::sqrt(std::log(spec.n_real()))),
          pow_alpha_(std::pow(spec.n_real(), p.alpha)),
          lambda_(p.lambda),
          t_final_(p.t_final) {}

    double add(double s, double weighted) {
        if (s < last_) throw OutOfOrderStep("JProcess: steps must arrive in time order");
        last_ = s;
        const double sigma = std::exp(lambda_ * sqrt_log_n_ * (t_final_ - s));
        running_sup_ = std::max(running_sup_, sigma * pow_alpha_ * weighted);
        return j();
    }

    double j() const { return std::min(1.0, running_sup_); }
    double running_sup() const { return running_sup_; }

  private:
    double sqrt_log_n_, pow_alpha_, lambda_, t_final_;
    double last_ = -HUGE_VAL;
    double running_sup_ = 0.0;
};

struct SetRecord {
    bool in_b = false;
    bool in_c = false;
    double force_gap = 0.0;  // |F(Phi) - Fbar(Phi)|_inf over tracers
    double g_gap = 0.0;      // |G(Phi) - Gbar(Phi)|_inf
};

// Pairwise sums over the tracers themselves against the mean-field values at
// the tracers. field_forces must be the flow's tracer forces at the current
// positions; thresholds are c_gamma N^(5b-1) ln N and c_gamma N^(7b-1) ln N.
inline SetRecord classify_sets(const std::vector<Vec3>& phi_q,
                               const std::vector<Vec3>& field_forces, const MeanFieldFlow& flow,
                               const KernelSpec& spec, const CouplingParams& params,
                               bool use_cell_list = true, int workers = 1) {
    if (phi_q.size() != field_forces.size())
        throw DimensionMismatch("classify_sets: force array does not match tracers");
    SetRecord rec;
    const auto pair_f = total_force(phi_q, spec, use_cell_list, true, workers);
    for (std::size_t i = 0; i < phi_q.size(); ++i)
        rec.force_gap = std::max(rec.force_gap, norm_inf(pair_f[i] - field_forces[i]));
    const auto pair_g = total_g(phi_q, spec, use_cell_list, workers);
    const auto field_g = flow.field_g_values(phi_q);
    for (std::size_t i = 0; i < phi_q.size(); ++i)
        rec.g_gap = std::max(rec.g_gap, std::fabs(pair_g[i] - field_g[i]));
    const double n = spec.n_real();
    const double log_n = std::log(n);
    rec.in_b = rec.force_gap > params.c_gamma * std::pow(n, 5.0 * spec.beta - 1.0) * log_n;
    rec.in_c = rec.g_gap > params.c_gamma * std::pow(n, 7.0 * spec.beta - 1.0) * log_n;
    return rec;
}

struct StepRecord {
    int step = 0;
    double t = 0.0;
    double d1 = 0.0, d2 = 0.0, weighted = 0.0;
    double sigma = 0.0, running_sup = 0.0, j = 0.0;
    bool in_a = false, in_b = false, in_c = false;
    double force_gap = 0.0, g_gap = 0.0;
};

struct CoupledSummary {
    std::uint64_t seed = 0;
    std::size_t n = 0;
    double beta = 0.0, alpha = 0.0, lambda = 0.0, t_final = 0.0;
    double sup_d1 = 0.0, sup_d2 = 0.0, sup_weighted = 0.0, j_final = 0.0;
    bool exceeded = false;  // sup_weighted > N^(-alpha)
    double frac_steps_in_b = 0.0, frac_steps_in_c = 0.0;
};

struct CoupledTrajectory {
    std::vector<StepRecord> records;
    CoupledSummary summary;
    ParticleEnsemble final_psi, final_tracers, final_reference;
};

// Lockstep advance of the interacting flow and the mean-field flow from the
// same initial ensemble, one record per time-grid point including t = 0. The
// enlarged envelope support is tied to params.alpha here so callers cannot
// pass an inconsistent spec.
inline CoupledTrajectory run_coupled(const ParticleEnsemble& initial,
                                     const InitialDensity& density, const KernelSpec& spec_in,
                                     const CouplingParams& params, const FlowConfig& flow_cfg,
                                     const MeanFieldConfig& mf_cfg) {
    validate_coupling_params(params, spec_in.beta);
    KernelSpec spec = spec_in;
    spec.alpha_enlarge =
        params.alpha > 0.0 ? std::optional<double>(params.alpha) : std::nullopt;
    initial.validate();
    if (initial.size() != spec.n_particles)
        throw SizeMismatch("run_coupled: ensemble size must equal the kernel scale N");

    if (mf_cfg.ref_multiplier < 1)
        throw ConfigError("meanfield.ref_multiplier must be at least 1");
    const std::size_t m = mf_cfg.ref_multiplier * initial.size();
    const ParticleEnsemble reference0 = sample_ensemble(density, m, mf_cfg.ref_seed);

    const double dt = flow_cfg.dt > 0.0 ? flow_cfg.dt : default_dt(spec);
    const int steps = step_count(params.t_final, dt);
    const double h = steps > 0 ? params.t_final / steps : 0.0;

    ParticleEnsemble psi = initial;
    std::vector<Vec3> f_psi =
        total_force(psi.q, spec, flow_cfg.use_cell_list, flow_cfg.deterministic, flow_cfg.workers);
    MeanFieldConfig mf = mf_cfg;
    mf.t_final = params.t_final;  // grid-mode geometry sizes itself from this horizon
    MeanFieldFlow flow(reference0, initial, spec, mf);
    JProcess jp(spec, params);

    CoupledTrajectory out;
    out.records.reserve(steps + 1);
    std::size_t count_b = 0, count_c = 0;
    auto record = [&](int step, double t) {
        const Distances d = anisotropic_distance(psi, flow.tracers());
        StepRecord r;
        r.step = step;
        r.t = t;
        r.d1 = d.d1;
        r.d2 = d.d2;
        r.weighted = weighted_distance(spec, d.d1, d.d2);
        r.sigma = sigma_factor(spec, params, t);
        r.j = jp.add(t, r.weighted);
        r.running_sup = jp.running_sup();
        r.in_a = (r.j == 1.0);
        const SetRecord sets = classify_sets(flow.tracers().q, flow.tracer_forces(), flow, spec,
                                             params, flow_cfg.use_cell_list, flow_cfg.workers);
        r.in_b = sets.in_b;
        r.in_c = sets.in_c;
        r.force_gap = sets.force_gap;
        r.g_gap = sets.g_gap;
        count_b += r.in_b;
        count_c += r.in_c;
        auto& s = out.summary;
        s.sup_d1 = std::max(s.sup_d1, r.d1);
        s.sup_d2 = std::max(s.sup_d2, r.d2);
        s.sup_weighted = std::max(s.sup_weighted, r.weighted);
        s.j_final = r.j;
        out.records.push_back(r);
    };

    record(0, 0.0);
    const std::size_t n = psi.size();
    for (int s = 1; s <= steps; ++s) {
        for (std::size_t j = 0; j < n; ++j)
            psi.q[j] += h * psi.p[j] + (0.5 * h * h) * f_psi[j];
        std::vector<Vec3> f2 = total_force(psi.q, spec, flow_cfg.use_cell_list,
                                           flow_cfg.deterministic, flow_cfg.workers);
        for (std::size_t j = 0; j < n; ++j) psi.p[j] += (0.5 * h) * (f_psi[j] + f2[j]);
        f_psi = std::move(f2);
        psi.time += h;
        detail::check_finite(psi, s);
        flow.step(h);
        record(s, static_cast<double>(s) * h);
    }

    auto& s = out.summary;
    s.seed = initial.seed;
    s.n = initial.size();
    s.beta = spec.beta;
    s.alpha = params.alpha;
    s.lambda = params.lambda;
    s.t_final = params.t_final;
    s.exceeded = s.sup_weighted > std::pow(spec.n_real(), -params.alpha);
    s.frac_steps_in_b = static_cast<double>(count_b) / static_cast<double>(out.records.size());
    s.frac_steps_in_c = static_cast<double>(count_c) / static_cast<double>(out.records.size());
    out.final_psi = psi;
    out.final_tracers = flow.tracers();
    out.final_reference = flow.reference();
    return out;
}

}  // namespace mflab
