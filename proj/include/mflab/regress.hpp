#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "mflab/errors.hpp"
#include "mflab/numerics.hpp"
#include "mflab/rng.hpp"

namespace mflab {

struct PowerFit {
    double slope = 0.0;
    double intercept = 0.0;  // on log y
    double r2 = 1.0;
};

// Ordinary least squares of log y against log x.
inline PowerFit ols_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw SizeMismatch("ols_loglog: length mismatch");
    if (x.size() < 2) throw InsufficientData("ols_loglog: need at least 2 points");
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw OutOfDomain("ols_loglog: inputs must be positive");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        syy += ly * ly;
    }
    const double dn = static_cast<double>(n);
    const double vxx = sxx - sx * sx / dn;
    const double vxy = sxy - sx * sy / dn;
    const double vyy = syy - sy * sy / dn;
    if (!(vxx > 0.0)) throw InsufficientData("ols_loglog: degenerate abscissae");
    PowerFit fit;
    fit.slope = vxy / vxx;
    fit.intercept = (sy - fit.slope * sx) / dn;
    fit.r2 = vyy > 0.0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
    return fit;
}

struct ScalingFit {
    PowerFit fit;           // on per-group medians
    double ci_lo = 0.0;     // 95% bootstrap interval for the slope
    double ci_hi = 0.0;
    int resamples = 0;
    std::size_t groups = 0;
};

// Log-log fit of per-group medians for rows (x, value), with a stratified
// bootstrap: each resample redraws values with replacement inside every
// group, refits the median regression, and the slope CI is the 2.5%/97.5%
// band of the resampled slopes.
inline ScalingFit fit_group_medians(const std::vector<std::pair<double, double>>& rows,
                                    int resamples = 1000, std::uint64_t seed = 2026) {
    if (rows.size() < 2) throw InsufficientData("fit_group_medians: need at least 2 rows");
    std::map<double, std::vector<double>> groups;
    for (const auto& [x, v] : rows) groups[x].push_back(v);
    if (groups.size() < 2) throw InsufficientData("fit_group_medians: need at least 2 groups");

    std::vector<double> xs, med;
    for (auto& [x, vals] : groups) {
        xs.push_back(x);
        med.push_back(median(vals));
    }
    ScalingFit out;
    out.fit = ols_loglog(xs, med);
    out.groups = groups.size();
    out.resamples = resamples;
    if (resamples <= 0) {
        out.ci_lo = out.ci_hi = out.fit.slope;
        return out;
    }

    Rng rng(derive_seed(seed, 0x626f6f74ull));  // "boot"
    std::vector<double> slopes;
    slopes.reserve(resamples);
    std::vector<double> resampled;
    for (int b = 0; b < resamples; ++b) {
        std::vector<double> ys;
        ys.reserve(groups.size());
        for (auto& [x, vals] : groups) {
            resampled.resize(vals.size());
            for (std::size_t i = 0; i < vals.size(); ++i) {
                const std::size_t k =
                    static_cast<std::size_t>(rng.uniform01() * static_cast<double>(vals.size()));
                resampled[i] = vals[std::min(k, vals.size() - 1)];
            }
            ys.push_back(median(resampled));
        }
        slopes.push_back(ols_loglog(xs, ys).slope);
    }
    out.ci_lo = quantile(slopes, 0.025);
    out.ci_hi = quantile(slopes, 0.975);
    return out;
}

}  // namespace mflab
