#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mflab/cell_list.hpp"
#include "mflab/ensemble.hpp"
#include "mflab/errors.hpp"
#include "mflab/kernel.hpp"
#include "mflab/parallel.hpp"

namespace mflab {

struct FlowConfig {
    double dt = 0.0;  // 0: derive from the kernel via default_dt
    double t_final = 0.5;
    bool use_cell_list = true;
    bool deterministic = true;  // fixed gather order, bitwise worker-invariant
    int workers = 1;
    int snapshot_stride = 0;  // observer cadence in steps; 0 disables
};

// Step-size heuristic keyed to the stiffest per-pair force gradient the
// scaling admits, L*N^(5*beta-1), clamped by an absolute cap that resolves
// the momentum scale. Chosen so the velocity-Verlet energy drift stays below
// 1e-4 relative on the pinned defaults.
inline double default_dt(const KernelSpec& spec) {
    const double stiff = spec.lipschitz_L() * spec.pow_5b / spec.n_real();
    return std::min(0.05, 0.2 / std::sqrt(std::max(stiff, 1.0)));
}

// Rounds the horizon to a whole number of steps, shrinking dt to fit.
inline int step_count(double t_final, double dt) {
    if (!(dt > 0.0) || !(t_final >= 0.0)) throw ConfigError("flow: dt and t_final must be positive");
    if (t_final == 0.0) return 0;
    return std::max(1, static_cast<int>(std::ceil(t_final / dt - 1e-12)));
}

// Total pair acceleration on every particle:
//   F_j = -(1/N) * sum_{i != j} f_N^beta(q_j - q_i).
//
// Deterministic reduction (the default) uses a gather: each F_j is accumulated
// independently over a traversal order that is a pure function of the
// positions, so results are bitwise identical for any worker count.
// Brute-force mode sums i ascending; the cell-list mode follows the grid's
// (cell, id) order. The two orders differ, so the modes agree to summation
// roundoff, not bitwise.
//
// The non-deterministic mode scatters each pair once with +/- (Newton's third
// law): half the kernel evaluations and exact total-momentum cancellation,
// but the reduction order follows the worker partition, so results are
// reproducible only for a fixed worker count.
inline std::vector<Vec3> total_force(const std::vector<Vec3>& q, const KernelSpec& spec,
                                     bool use_cell_list = true, bool deterministic = true,
                                     int workers = 1) {
    const std::size_t n = q.size();
    if (n == 0) throw SizeMismatch("total_force: empty ensemble");
    std::vector<Vec3> force(n);
    // Empirical-measure normalization: the divisor is the ensemble size, not
    // the kernel scale N, so the same routine serves the microscopic flow
    // (n == N) and mean-field reference ensembles (n == M = c*N).
    const double scale = -1.0 / static_cast<double>(n);
    const double support = spec.scaled_support();
    const double support_sq = support * support;
    const unsigned w = worker_budget(workers);
    if (!deterministic && n > 1) {
        const CellGrid grid(q, support);
        const unsigned nw = std::min<unsigned>(w, static_cast<unsigned>(n));
        std::vector<std::vector<Vec3>> partial(nw, std::vector<Vec3>(n));
        parallel_for(nw, nw, [&](std::size_t t) {
            auto& acc = partial[t];
            const std::size_t lo = n * t / nw, hi = n * (t + 1) / nw;
            for (std::size_t j = lo; j < hi; ++j)
                grid.for_each_candidate(q[j], [&](std::uint32_t i) {
                    if (i <= j) return;  // each pair once, from the lower id
                    const Vec3 d = q[j] - q[i];
                    if (norm2_sq(d) >= support_sq) return;
                    const Vec3 f = eval_force(spec, d);
                    acc[j] += f;
                    acc[i] -= f;
                });
        });
        for (const auto& acc : partial)
            for (std::size_t j = 0; j < n; ++j) force[j] += acc[j];
        for (std::size_t j = 0; j < n; ++j) force[j] *= scale;
        return force;
    }
    if (use_cell_list && n > 1) {
        const CellGrid grid(q, support);
        parallel_for(n, w, [&](std::size_t j) {
            Vec3 acc{};
            grid.for_each_candidate(q[j], [&](std::uint32_t i) {
                if (i == j) return;
                const Vec3 d = q[j] - q[i];
                if (norm2_sq(d) >= support_sq) return;
                acc += eval_force(spec, d);
            });
            force[j] = scale * acc;
        });
    } else {
        parallel_for(n, w, [&](std::size_t j) {
            Vec3 acc{};
            for (std::size_t i = 0; i < n; ++i) {
                if (i == j) continue;
                acc += eval_force(spec, q[j] - q[i]);
            }
            force[j] = scale * acc;
        });
    }
    return force;
}

// G_j = (1/n) sum_{i != j} g(q_j - q_i): the scalar envelope analog of
// total_force. All nonzero summands equal L*N^(5*beta), so the sum is a
// particle count times a constant and any traversal order reproduces it.
inline std::vector<double> total_g(const std::vector<Vec3>& q, const KernelSpec& spec,
                                   bool use_cell_list = true, int workers = 1) {
    const std::size_t n = q.size();
    if (n == 0) throw SizeMismatch("total_g: empty ensemble");
    std::vector<double> out(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    const double radius = spec.g_support_real();
    const unsigned w = worker_budget(workers);
    if (use_cell_list && n > 1) {
        const CellGrid grid(q, spec.scaled_support());
        parallel_for(n, w, [&](std::size_t j) {
            double acc = 0.0;
            grid.for_each_within(q[j], radius, [&](std::uint32_t i) {
                if (i != j) acc += eval_g(spec, q[j] - q[i]);
            });
            out[j] = inv_n * acc;
        });
    } else {
        parallel_for(n, w, [&](std::size_t j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (i != j) acc += eval_g(spec, q[j] - q[i]);
            out[j] = inv_n * acc;
        });
    }
    return out;
}

// H = sum_j p_j^2/2 + (N/n) sum_{j<k} phi_scaled(q_j - q_k): the conserved
// quantity of the flow total_force generates on an n-particle ensemble. For
// n == N this is the microscopic Hamiltonian (potential factor 1).
inline double hamiltonian(const ParticleEnsemble& e, const KernelSpec& spec,
                          bool use_cell_list = true) {
    const std::size_t n = e.size();
    if (n == 0) return 0.0;
    double kinetic = 0.0;
    for (const Vec3& p : e.p) kinetic += 0.5 * norm2_sq(p);
    double potential = 0.0;
    if (use_cell_list && n > 1) {
        const CellGrid grid(e.q, spec.scaled_support());
        for (std::size_t j = 0; j < n; ++j)
            grid.for_each_candidate(e.q[j], [&](std::uint32_t i) {
                if (i < j) potential += eval_phi_scaled(spec, e.q[j] - e.q[i]);
            });
    } else {
        for (std::size_t j = 1; j < n; ++j)
            for (std::size_t i = 0; i < j; ++i)
                potential += eval_phi_scaled(spec, e.q[j] - e.q[i]);
    }
    return kinetic + potential * (spec.n_real() / static_cast<double>(n));
}

struct StepDiag {
    int step = 0;
    double time = 0.0;
    double max_force_inf = 0.0;
};

using FlowObserver = std::function<void(const ParticleEnsemble&, const StepDiag&)>;

namespace detail {

inline void check_finite(const ParticleEnsemble& e, int step) {
    for (std::size_t i = 0; i < e.size(); ++i)
        if (!finite(e.q[i]) || !finite(e.p[i]))
            throw NonFiniteState("nbody: non-finite state at step " + std::to_string(step));
}

inline double max_force_inf(const std::vector<Vec3>& f) {
    double m = 0.0;
    for (const Vec3& v : f) m = std::max(m, norm_inf(v));
    return m;
}

}  // namespace detail

// Velocity-Verlet integration of the microscopic flow. Evolves the ensemble
// in place up to t_final; one force evaluation per step (the end-of-step
// force is reused). Observer fires at t=0 and every snapshot_stride steps.
inline void run_flow(ParticleEnsemble& e, const KernelSpec& spec, const FlowConfig& cfg,
                     const FlowObserver& observer = {}) {
    e.validate();
    const double dt = cfg.dt > 0.0 ? cfg.dt : default_dt(spec);
    const int steps = step_count(cfg.t_final, dt);
    const double h = steps > 0 ? cfg.t_final / steps : 0.0;
    const std::size_t n = e.size();
    std::vector<Vec3> f = total_force(e.q, spec, cfg.use_cell_list, cfg.deterministic, cfg.workers);
    if (observer) observer(e, {0, e.time, detail::max_force_inf(f)});
    for (int s = 1; s <= steps; ++s) {
        for (std::size_t j = 0; j < n; ++j)
            e.q[j] += h * e.p[j] + (0.5 * h * h) * f[j];
        std::vector<Vec3> f2 =
            total_force(e.q, spec, cfg.use_cell_list, cfg.deterministic, cfg.workers);
        for (std::size_t j = 0; j < n; ++j) e.p[j] += (0.5 * h) * (f[j] + f2[j]);
        f = std::move(f2);
        e.time += h;
        detail::check_finite(e, s);
        if (observer && (s == steps || (cfg.snapshot_stride > 0 && s % cfg.snapshot_stride == 0)))
            observer(e, {s, e.time, detail::max_force_inf(f)});
    }
}

// Classical RK4 on (q', p') = (p, F(q)): an independent integrator used only
// as a cross-check oracle. Brute-force forces on purpose, so the comparison
// also exercises the cell-list path of the primary integrator.
inline void rk4_flow(ParticleEnsemble& e, const KernelSpec& spec, double dt, double t_final) {
    e.validate();
    const int steps = step_count(t_final, dt);
    const double h = steps > 0 ? t_final / steps : 0.0;
    const std::size_t n = e.size();
    auto forces = [&](const std::vector<Vec3>& q) { return total_force(q, spec, false, true, 1); };
    std::vector<Vec3> q1(n), p1(n);
    for (int s = 0; s < steps; ++s) {
        const std::vector<Vec3> k1q = e.p;
        const std::vector<Vec3> k1p = forces(e.q);
        for (std::size_t j = 0; j < n; ++j) q1[j] = e.q[j] + (0.5 * h) * k1q[j];
        std::vector<Vec3> k2p = forces(q1);
        std::vector<Vec3> k2q(n);
        for (std::size_t j = 0; j < n; ++j) k2q[j] = e.p[j] + (0.5 * h) * k1p[j];
        for (std::size_t j = 0; j < n; ++j) q1[j] = e.q[j] + (0.5 * h) * k2q[j];
        std::vector<Vec3> k3p = forces(q1);
        std::vector<Vec3> k3q(n);
        for (std::size_t j = 0; j < n; ++j) k3q[j] = e.p[j] + (0.5 * h) * k2p[j];
        for (std::size_t j = 0; j < n; ++j) q1[j] = e.q[j] + h * k3q[j];
        std::vector<Vec3> k4p = forces(q1);
        std::vector<Vec3> k4q(n);
        for (std::size_t j = 0; j < n; ++j) k4q[j] = e.p[j] + h * k3p[j];
        for (std::size_t j = 0; j < n; ++j) {
            e.q[j] += (h / 6.0) * (k1q[j] + 2.0 * k2q[j] + 2.0 * k3q[j] + k4q[j]);
            e.p[j] += (h / 6.0) * (k1p[j] + 2.0 * k2p[j] + 2.0 * k3p[j] + k4p[j]);
        }
        e.time += h;
        detail::check_finite(e, s + 1);
    }
}

}  // namespace mflab
