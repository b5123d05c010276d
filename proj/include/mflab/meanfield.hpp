#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mflab/cell_list.hpp"
#include "mflab/density.hpp"
#include "mflab/ensemble.hpp"
#include "mflab/errors.hpp"
#include "mflab/grid_field.hpp"
#include "mflab/kernel.hpp"
#include "mflab/nbody.hpp"
#include "mflab/numerics.hpp"
#include "mflab/parallel.hpp"
#include "mflab/vec3.hpp"

namespace mflab {

struct MeanFieldConfig {
    enum class Mode { reference_ensemble, grid_fft };
    Mode mode = Mode::reference_ensemble;
    std::size_t ref_multiplier = 16;  // M = ref_multiplier * N
    std::uint64_t ref_seed = 0;
    double grid_spacing = 0.0;  // 0: scaled_support / 4
    double grid_padding = 0.0;  // extra absolute padding on the grid domain
    double dt = 0.0;            // 0: default_dt of the kernel spec
    double t_final = 0.5;
    bool use_cell_list = true;
    int workers = 1;
};

inline MeanFieldConfig::Mode mean_field_mode_from_string(const std::string& s) {
    if (s == "reference-ensemble") return MeanFieldConfig::Mode::reference_ensemble;
    if (s == "grid-fft") return MeanFieldConfig::Mode::grid_fft;
    throw ConfigError("meanfield.mode must be \"reference-ensemble\" or \"grid-fft\"");
}

inline std::string to_string(MeanFieldConfig::Mode m) {
    return m == MeanFieldConfig::Mode::reference_ensemble ? "reference-ensemble" : "grid-fft";
}

// Frozen-snapshot force evaluator over a reference ensemble: the empirical
// realization of the convolution, -(1/M) sum_j f(x - q_j). Borrows the
// position array; rebuild after the reference moves.
class ReferenceField {
  public:
    ReferenceField(const std::vector<Vec3>& ref_q, const KernelSpec& spec)
        : q_(&ref_q), spec_(&spec), grid_(ref_q, spec.scaled_support()) {
        if (ref_q.empty()) throw SizeMismatch("ReferenceField: empty reference ensemble");
        inv_m_ = 1.0 / static_cast<double>(ref_q.size());
    }

    Vec3 force_at(const Vec3& x) const {
        const double support_sq = spec_->scaled_support() * spec_->scaled_support();
        Vec3 acc{};
        grid_.for_each_candidate(x, [&](std::uint32_t i) {
            const Vec3 d = x - (*q_)[i];
            if (norm2_sq(d) >= support_sq) return;
            acc += eval_force(*spec_, d);
        });
        return -inv_m_ * acc;
    }

    // (1/M) sum_j g(x - q_j); all nonzero summands are equal, so this is an
    // in-range count times L N^(5 beta) / M.
    double g_at(const Vec3& x) const {
        const double radius = spec_->g_support_real();
        double acc = 0.0;
        grid_.for_each_within(x, radius, [&](std::uint32_t i) {
            acc += eval_g(*spec_, x - (*q_)[i]);
        });
        return inv_m_ * acc;
    }

    std::vector<Vec3> forces_at(const std::vector<Vec3>& xs, int workers = 1) const {
        std::vector<Vec3> out(xs.size());
        parallel_for(xs.size(), worker_budget(workers),
                     [&](std::size_t i) { out[i] = force_at(xs[i]); });
        return out;
    }

    std::vector<double> g_values_at(const std::vector<Vec3>& xs, int workers = 1) const {
        std::vector<double> out(xs.size());
        parallel_for(xs.size(), worker_budget(workers),
                     [&](std::size_t i) { out[i] = g_at(xs[i]); });
        return out;
    }

  private:
    const std::vector<Vec3>* q_;
    const KernelSpec* spec_;
    CellGrid grid_;
    double inv_m_ = 0.0;
};

// One-shot empirical mean-field force at a point.
inline Vec3 mean_force_reference(const Vec3& x, const ParticleEnsemble& reference,
                                 const KernelSpec& spec) {
    return ReferenceField(reference.q, spec).force_at(x);
}

inline Vec3 mean_force_grid(const Vec3& x, const ForceField& field) { return field.at(x); }

// Self-consistent reference ensemble plus passive tracers on a shared
// velocity-Verlet grid. The reference feels its own empirical field; tracers
// feel the reference field and source nothing, so deleting them leaves the
// reference trajectory bitwise unchanged.
class MeanFieldFlow {
  public:
    MeanFieldFlow(ParticleEnsemble reference, ParticleEnsemble tracers, const KernelSpec& spec,
                  const MeanFieldConfig& cfg)
        : spec_(spec), cfg_(cfg), ref_(std::move(reference)), tr_(std::move(tracers)) {
        ref_.validate();
        tr_.validate();
        if (ref_.size() < tr_.size())
            throw ConfigError("meanfield: reference ensemble smaller than the tracer set");
        if (ref_.seed == tr_.seed)
            throw ConfigError("meanfield.ref_seed must differ from the tracer seed");
        if (cfg_.mode == MeanFieldConfig::Mode::grid_fft) {
            double r = 0.0, pmax = 0.0;
            for (const auto& e : {std::cref(ref_), std::cref(tr_)})
                for (std::size_t i = 0; i < e.get().size(); ++i) {
                    r = std::max(r, norm2(e.get().q[i]));
                    pmax = std::max(pmax, norm2(e.get().p[i]));
                }
            const double content = r + cfg_.t_final * pmax * 1.1 + 0.2 + cfg_.grid_padding;
            geom_ = make_grid_geometry(spec_, content, cfg_.grid_spacing);
        }
        refresh();
    }

    // The field evaluators borrow the reference position array in place.
    MeanFieldFlow(const MeanFieldFlow&) = delete;
    MeanFieldFlow& operator=(const MeanFieldFlow&) = delete;

    void step(double dt) {
        half_kick(dt);
        for (std::size_t i = 0; i < ref_.size(); ++i) ref_.q[i] += dt * ref_.p[i];
        for (std::size_t i = 0; i < tr_.size(); ++i) tr_.q[i] += dt * tr_.p[i];
        refresh();
        half_kick(dt);
        ref_.time += dt;
        tr_.time += dt;
        detail::check_finite(ref_, -1);
        detail::check_finite(tr_, -1);
    }

    const ParticleEnsemble& reference() const { return ref_; }
    const ParticleEnsemble& tracers() const { return tr_; }
    const std::vector<Vec3>& reference_forces() const { return f_ref_; }
    const std::vector<Vec3>& tracer_forces() const { return f_tr_; }

    Vec3 field_force_at(const Vec3& x) const {
        if (field_) return field_->force_at(x);
        return grid_field_->at(x);
    }

    // Envelope convolution against the current reference; evaluated from the
    // particles in both modes (the envelope ball spans many grid cells, so a
    // gridded version would buy nothing).
    double field_g_at(const Vec3& x) const { return ref_field().g_at(x); }

    std::vector<double> field_g_values(const std::vector<Vec3>& xs) const {
        return ref_field().g_values_at(xs, cfg_.workers);
    }

  private:
    void half_kick(double dt) {
        for (std::size_t i = 0; i < ref_.size(); ++i) ref_.p[i] += (0.5 * dt) * f_ref_[i];
        for (std::size_t i = 0; i < tr_.size(); ++i) tr_.p[i] += (0.5 * dt) * f_tr_[i];
    }

    void refresh() {
        if (cfg_.mode == MeanFieldConfig::Mode::reference_ensemble) {
            field_.emplace(ref_.q, spec_);
            f_ref_ = field_->forces_at(ref_.q, cfg_.workers);
            f_tr_ = field_->forces_at(tr_.q, cfg_.workers);
        } else {
            const auto density = deposit_cic(*geom_, ref_.q);
            grid_field_ = make_force_field(*geom_, density, spec_);
            f_ref_.resize(ref_.size());
            parallel_for(ref_.size(), worker_budget(cfg_.workers),
                         [&](std::size_t i) { f_ref_[i] = grid_field_->at(ref_.q[i]); });
            f_tr_.resize(tr_.size());
            parallel_for(tr_.size(), worker_budget(cfg_.workers),
                         [&](std::size_t i) { f_tr_[i] = grid_field_->at(tr_.q[i]); });
        }
    }

    const ReferenceField& ref_field() const {
        if (field_) return *field_;  // reference mode keeps one current
        if (!g_field_ || g_field_time_ != ref_.time) {
            g_field_.emplace(ref_.q, spec_);
            g_field_time_ = ref_.time;
        }
        return *g_field_;
    }

    KernelSpec spec_;
    MeanFieldConfig cfg_;
    ParticleEnsemble ref_, tr_;
    std::vector<Vec3> f_ref_, f_tr_;
    std::optional<ReferenceField> field_;
    std::optional<GridGeometry> geom_;
    std::optional<ForceField> grid_field_;
    mutable std::optional<ReferenceField> g_field_;
    mutable double g_field_time_ = -1.0;
};

struct MeanFieldResult {
    ParticleEnsemble reference;
    ParticleEnsemble tracers;
};

inline MeanFieldResult evolve_mean_field(const ParticleEnsemble& reference0,
                                         const ParticleEnsemble& tracers0, const KernelSpec& spec,
                                         const MeanFieldConfig& cfg) {
    MeanFieldFlow flow(reference0, tracers0, spec, cfg);
    const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(spec);
    const int steps = step_count(cfg.t_final, dt);
    const double h = steps > 0 ? cfg.t_final / steps : 0.0;
    for (int s = 0; s < steps; ++s) flow.step(h);
    return {flow.reference(), flow.tracers()};
}

// t = 0 expectation fields for a radial initial density, tabulated once by
// quadrature and interpolated linearly. force_radial is the signed radial
// component of -(f * rho); gbar is (g * rho) = L N^(5 beta) times the rho-mass
// of the envelope ball.
struct RadialMeanField {
    double r_max = 0.0;
    double dr = 0.0;
    std::vector<double> force_rad;
    std::vector<double> gbar;

    double force_radial(double r) const { return interp(force_rad, r); }
    double gbar_at(double r) const { return interp(gbar, r); }

    Vec3 force_at(const Vec3& x) const {
        const double r = norm2(x);
        if (r < 1e-300) return {};
        const double a = force_radial(r) / r;
        return {a * x.x, a * x.y, a * x.z};
    }

  private:
    double interp(const std::vector<double>& tab, double r) const {
        if (r >= r_max || tab.empty()) return 0.0;
        const double pos = r / dr;
        const std::size_t i = std::min(static_cast<std::size_t>(pos), tab.size() - 2);
        const double frac = pos - static_cast<double>(i);
        return tab[i] + frac * (tab[i + 1] - tab[i]);
    }
};

inline RadialMeanField make_radial_mean_field(const KernelSpec& spec,
                                              const InitialDensity& density, int points = 2049,
                                              int workers = 1) {
    if (points < 2) throw ConfigError("radial table needs at least 2 points");
    RadialMeanField f;
    const double reach = std::max(spec.scaled_support(), spec.g_support_real());
    f.r_max = density.r_q + reach + 0.25;
    f.dr = f.r_max / static_cast<double>(points - 1);
    f.force_rad.resize(points);
    f.gbar.resize(points);
    auto rho = [&](double s) { return density.rho(s); };
    auto mag = [&](double u) { return spec.pow_4b * spec.profile.dh(spec.pow_b * u); };
    const double g_rad = spec.g_support_real();
    const double g_val = spec.lipschitz_L() * spec.pow_5b;
    parallel_for(static_cast<std::size_t>(points), worker_budget(workers), [&](std::size_t i) {
        const double r = static_cast<double>(i) * f.dr;
        f.force_rad[i] = -radial_vector_convolution(mag, spec.scaled_support(), rho,
                                                    density.r_q, r);
        f.gbar[i] = g_val * radial_ball_mass(rho, density.r_q, r, g_rad);
    });
    return f;
}

// Convolution sup bounds on the gridded fields. The force and the
// second-derivative kernel obey N-uniform bounds through |phi|_1 and are
// gated; the envelope convolution grows like N^(2 beta) by construction, so
// its sup is reported against that reference scale instead.
struct ConvolutionBoundReport {
    double sup_force = 0.0, bound_force = 0.0, margin_force = 0.0;
    double sup_lap = 0.0, bound_lap = 0.0, margin_lap = 0.0;
    double sup_g = 0.0, g_reference = 0.0;
    double tolerance = 0.0;
};

inline ConvolutionBoundReport mean_force_bound_check(const ForceField& field,
                                                     const std::vector<double>& density_grid,
                                                     const KernelSpec& spec,
                                                     const DensityMarginalBounds& bounds,
                                                     double tolerance = 0.02) {
    ConvolutionBoundReport rep;
    rep.tolerance = tolerance;
    rep.sup_force = field.sup_norm();
    rep.bound_force = spec.constants.l1_phi * bounds.sup_grad_k;

    const auto lap = make_scalar_field(field.geom, density_grid, spec.scaled_support(),
                                       [&](double r) { return eval_lap_kernel(spec, {r, 0, 0}); });
    rep.sup_lap = lap.sup_abs();
    rep.bound_lap = spec.constants.l1_phi * bounds.sup_lap_k;

    const auto env = make_scalar_field(field.geom, density_grid, spec.g_support_real(),
                                       [&](double r) { return eval_g(spec, {r, 0, 0}); });
    rep.sup_g = env.sup_abs();
    const double gr = spec.g_support_real();
    rep.g_reference =
        spec.lipschitz_L() * spec.pow_5b * (4.0 / 3.0) * kPi * gr * gr * gr * bounds.sup_k;

    auto margin = [](double sup, double bound) { return bound > 0.0 ? 1.0 - sup / bound : 0.0; };
    rep.margin_force = margin(rep.sup_force, rep.bound_force);
    rep.margin_lap = margin(rep.sup_lap, rep.bound_lap);
    if (rep.sup_force > rep.bound_force * (1.0 + tolerance))
        throw BoundViolated("mean-field force sup exceeds |phi|_1 * sup|grad k|");
    if (rep.sup_lap > rep.bound_lap * (1.0 + tolerance))
        throw BoundViolated("second-derivative convolution sup exceeds |phi|_1 * sup|lap k|");
    return rep;
}

// Two flows from identical tracers and reference draws, differing only in the
// kernel scaling, compared per step. This is a computable Cauchy proxy: the
// delta-force limit flow itself is out of numerical reach.
inline constexpr const char* kGapNote =
    "two-scale comparison of the N- and 2N-scaled mean-field flows; "
    "a Cauchy proxy for the distance to the delta-force limit flow";

struct GapSeries {
    std::vector<double> t;
    std::vector<double> gap;  // sup over tracers of the phase-space sup-norm
    double sup_gap = 0.0;
};

inline GapSeries regularization_gap(const KernelSpec& spec1, const KernelSpec& spec2,
                                    const ParticleEnsemble& tracers0,
                                    const ParticleEnsemble& reference0,
                                    const MeanFieldConfig& cfg) {
    MeanFieldFlow a(reference0, tracers0, spec1, cfg);
    MeanFieldFlow b(reference0, tracers0, spec2, cfg);
    const double dt =
        cfg.dt > 0.0 ? cfg.dt : std::min(default_dt(spec1), default_dt(spec2));
    const int steps = step_count(cfg.t_final, dt);
    const double h = steps > 0 ? cfg.t_final / steps : 0.0;
    GapSeries series;
    auto record = [&](double t) {
        double g = 0.0;
        const auto& qa = a.tracers();
        const auto& qb = b.tracers();
        for (std::size_t i = 0; i < qa.size(); ++i) {
            g = std::max(g, norm_inf(qa.q[i] - qb.q[i]));
            g = std::max(g, norm_inf(qa.p[i] - qb.p[i]));
        }
        series.t.push_back(t);
        series.gap.push_back(g);
        series.sup_gap = std::max(series.sup_gap, g);
    };
    record(0.0);
    for (int s = 1; s <= steps; ++s) {
        a.step(h);
        b.step(h);
        record(static_cast<double>(s) * h);
    }
    return series;
}

}  // namespace mflab
