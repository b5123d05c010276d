#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "mflab/ensemble.hpp"
#include "mflab/errors.hpp"
#include "mflab/numerics.hpp"
#include "mflab/rng.hpp"

namespace mflab {

using PhasePoint = std::array<double, 6>;

inline double phase_distance(const PhasePoint& a, const PhasePoint& b) {
    double s = 0.0;
    for (std::size_t c = 0; c < 6; ++c) {
        const double d = a[c] - b[c];
        s += d * d;
    }
    return std::sqrt(s);
}

struct EmpiricalMeasure {
    std::vector<PhasePoint> points;
    std::size_t size() const { return points.size(); }
};

inline EmpiricalMeasure measure_from(const ParticleEnsemble& e) {
    EmpiricalMeasure m;
    m.points.resize(e.size());
    for (std::size_t i = 0; i < e.size(); ++i)
        m.points[i] = {e.q[i].x, e.q[i].y, e.q[i].z, e.p[i].x, e.p[i].y, e.p[i].z};
    return m;
}

namespace detail {

// Shortest augmenting path step of the Jonker-Volgenant assignment solver
// (dual-feasible Dijkstra over columns). Returns the sink column.
inline int lsap_augmenting_path(std::size_t nc, const std::vector<double>& cost,
                                std::vector<double>& u, std::vector<double>& v,
                                std::vector<int>& path, const std::vector<int>& row4col,
                                std::vector<double>& shortest, std::vector<bool>& sr,
                                std::vector<bool>& sc, std::vector<std::size_t>& remaining,
                                std::size_t start_row, double& min_val_out) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    double min_val = 0.0;
    std::size_t num_remaining = nc;
    for (std::size_t it = 0; it < nc; ++it) remaining[it] = nc - it - 1;
    std::fill(sr.begin(), sr.end(), false);
    std::fill(sc.begin(), sc.end(), false);
    std::fill(shortest.begin(), shortest.end(), kInf);

    int sink = -1;
    std::size_t i = start_row;
    while (sink == -1) {
        std::size_t index = 0;
        double lowest = kInf;
        sr[i] = true;
        for (std::size_t it = 0; it < num_remaining; ++it) {
            const std::size_t j = remaining[it];
            const double r = min_val + cost[i * nc + j] - u[i] - v[j];
            if (r < shortest[j]) {
                path[j] = static_cast<int>(i);
                shortest[j] = r;
            }
            if (shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == -1)) {
                lowest = shortest[j];
                index = it;
            }
        }
        min_val = lowest;
        if (!(min_val < kInf)) return -1;  // infeasible (cannot happen for finite costs)
        const std::size_t j = remaining[index];
        if (row4col[j] == -1)
            sink = static_cast<int>(j);
        else
            i = static_cast<std::size_t>(row4col[j]);
        sc[j] = true;
        remaining[index] = remaining[--num_remaining];
    }
    min_val_out = min_val;
    return sink;
}

// Minimum-cost perfect matching on a dense square cost matrix.
inline std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n) {
    std::vector<double> u(n, 0.0), v(n, 0.0), shortest(n);
    std::vector<int> path(n, -1), col4row(n, -1), row4col(n, -1);
    std::vector<bool> sr(n), sc(n);
    std::vector<std::size_t> remaining(n);

    for (std::size_t cur_row = 0; cur_row < n; ++cur_row) {
        double min_val = 0.0;
        const int sink = lsap_augmenting_path(n, cost, u, v, path, row4col, shortest, sr, sc,
                                              remaining, cur_row, min_val);
        if (sink < 0) throw SimulationError("assignment solver found no augmenting path");
        u[cur_row] += min_val;
        for (std::size_t i = 0; i < n; ++i)
            if (sr[i] && i != cur_row)
                u[i] += min_val - shortest[static_cast<std::size_t>(col4row[i])];
        for (std::size_t j = 0; j < n; ++j)
            if (sc[j]) v[j] -= min_val - shortest[j];
        int j = sink;
        while (true) {
            const int i = path[static_cast<std::size_t>(j)];
            row4col[static_cast<std::size_t>(j)] = i;
            std::swap(col4row[static_cast<std::size_t>(i)], j);
            if (i == static_cast<int>(cur_row)) break;
        }
    }
    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::size_t>(col4row[i]);
    return out;
}

}  // namespace detail

// Exact 1-Wasserstein distance between equal-size point clouds under the
// phase-space Euclidean metric, via optimal assignment. O(n^3), so capped.
inline double w1_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    if (a.size() != b.size()) throw SizeMismatch("w1_exact: point clouds differ in size");
    if (a.size() == 0) throw InsufficientData("w1_exact: empty point clouds");
    if (a.size() > 1024) throw TooLarge("w1_exact: exact transport capped at 1024 points");
    const std::size_t n = a.size();
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            cost[i * n + j] = phase_distance(a.points[i], b.points[j]);
    const auto match = detail::solve_assignment(cost, n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i * n + match[i]];
    return total / static_cast<double>(n);
}

struct CouplingBounds {
    double w1_upper = 0.0;   // identity-pairing transport cost; always >= W1
    double winf_upper = 0.0;  // largest single displacement under that pairing
};

inline CouplingBounds coupling_bounds(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    if (a.size() != b.size()) throw SizeMismatch("coupling_bounds: point clouds differ in size");
    if (a.size() == 0) throw InsufficientData("coupling_bounds: empty point clouds");
    CouplingBounds out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = phase_distance(a.points[i], b.points[i]);
        out.w1_upper += d;
        out.winf_upper = std::max(out.winf_upper, d);
    }
    out.w1_upper /= static_cast<double>(a.size());
    return out;
}

namespace detail {

inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(
                                      rng.uniform01() * static_cast<double>(n - i));
        std::swap(idx[i], idx[std::min(j, n - 1)]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace detail

struct W1Estimate {
    double w1 = 0.0;
    std::size_t points = 0;  // subsample size actually used
};

// Seeded subsampled W1 between two large clouds (e.g. the interacting final
// state and the mean-field reference). Subsampling keeps the exact solver in
// budget; the estimate is biased upward by O(k^{-1/6}) sampling noise, which
// cancels in cross-N comparisons at fixed k.
inline W1Estimate w1_between(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                             std::size_t subsample, std::uint64_t seed) {
    if (a.size() == 0 || b.size() == 0)
        throw InsufficientData("w1_between: empty point clouds");
    const std::size_t k = std::min({subsample, a.size(), b.size()});
    EmpiricalMeasure sa, sb;
    sa.points.reserve(k);
    sb.points.reserve(k);
    Rng ra(derive_seed(seed, 0x707369ull));
    Rng rb(derive_seed(seed, 0x70726f7879ull));
    for (const auto i : detail::sample_indices(a.size(), k, ra)) sa.points.push_back(a.points[i]);
    for (const auto i : detail::sample_indices(b.size(), k, rb)) sb.points.push_back(b.points[i]);
    return {w1_exact(sa, sb), k};
}

inline W1Estimate w1_vs_meanfield(const ParticleEnsemble& psi, const ParticleEnsemble& reference,
                                  std::size_t subsample, std::uint64_t seed) {
    return w1_between(measure_from(psi), measure_from(reference), subsample, seed);
}

// Bounded-Lipschitz phase-space observables for the correlation-decay probe.
inline std::vector<std::function<double(const PhasePoint&)>> default_observables() {
    return {
        [](const PhasePoint& z) { return std::tanh(z[0] + 0.3 * z[3]); },
        [](const PhasePoint& z) { return std::cos(z[1] - 0.5 * z[4]); },
        [](const PhasePoint& z) { return std::tanh(0.7 * z[2]) * std::cos(0.4 * z[5]); },
        [](const PhasePoint& z) { return std::cos(0.6 * z[0] + 0.2 * z[5]); },
    };
}

// |E[h1(Z_1) h2(Z_2)] - E[h1] E[h2]| across replicas, with the two-particle
// term estimated by the exact pair U-statistic inside each replica.
inline double chaos_correlation(const std::vector<EmpiricalMeasure>& replicas,
                                const std::function<double(const PhasePoint&)>& h1,
                                const std::function<double(const PhasePoint&)>& h2) {
    if (replicas.empty()) throw InsufficientData("chaos_correlation: no replicas");
    double mean_u = 0.0, mean_1 = 0.0, mean_2 = 0.0;
    for (const auto& rep : replicas) {
        const std::size_t n = rep.size();
        if (n < 2) throw InsufficientData("chaos_correlation: replicas need >= 2 points");
        double a = 0.0, b = 0.0, c = 0.0;
        for (const auto& z : rep.points) {
            const double v1 = h1(z), v2 = h2(z);
            a += v1;
            b += v2;
            c += v1 * v2;
        }
        const double nn = static_cast<double>(n);
        mean_u += (a * b - c) / (nn * (nn - 1.0));
        mean_1 += a / nn;
        mean_2 += b / nn;
    }
    const double r = static_cast<double>(replicas.size());
    return std::fabs(mean_u / r - (mean_1 / r) * (mean_2 / r));
}

// Median over all observable pairs; one number per ensemble size for the
// decay-in-N check.
inline double chaos_correlation_median(const std::vector<EmpiricalMeasure>& replicas) {
    const auto obs = default_observables();
    std::vector<double> vals;
    for (std::size_t i = 0; i < obs.size(); ++i)
        for (std::size_t j = i + 1; j < obs.size(); ++j)
            vals.push_back(chaos_correlation(replicas, obs[i], obs[j]));
    return median(std::move(vals));
}

}  // namespace mflab
