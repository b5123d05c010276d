#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <mutex>
#include <vector>

#include "mflab/density.hpp"
#include "mflab/errors.hpp"
#include "mflab/kernel.hpp"
#include "mflab/vec3.hpp"

namespace mflab {

// Cubic node-centered grid: nodes at lo + i*h per axis, i in [0, n). Row-major
// with x fastest. Odd n keeps the origin on a node.
struct GridGeometry {
    double lo = 0.0;
    double h = 1.0;
    int n = 0;

    std::size_t cells() const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(n) *
               static_cast<std::size_t>(n);
    }
    std::size_t index(int ix, int iy, int iz) const {
        return (static_cast<std::size_t>(iz) * n + iy) * n + ix;
    }
    double coord(int i) const { return lo + static_cast<double>(i) * h; }
    double hi() const { return coord(n - 1); }
    Vec3 node(int ix, int iy, int iz) const { return {coord(ix), coord(iy), coord(iz)}; }
    bool contains(const Vec3& x) const {
        return x.x >= lo && x.x <= hi() && x.y >= lo && x.y <= hi() && x.z >= lo && x.z <= hi();
    }
};

// Geometry sized so that mass within |x| <= content_radius sits at least
// guard_cells kernel halfwidths away from every face: the cyclic FFT
// convolution then equals the linear one on the whole grid.
inline GridGeometry make_grid_geometry(const KernelSpec& spec, double content_radius,
                                       double spacing = 0.0, double extra_padding = 0.0) {
    const double support = spec.scaled_support();
    const double h = spacing > 0.0 ? spacing : support / 4.0;
    if (!(h > 0.0)) throw ConfigError("meanfield.grid_spacing must be positive");
    if (h > support / 2.0 + 1e-12)
        throw ConfigError("meanfield.grid_spacing must not exceed scaled_support/2");
    const int kernel_cells = static_cast<int>(std::ceil(support / h));
    const int half =
        static_cast<int>(std::ceil((content_radius + extra_padding) / h)) + kernel_cells + 2;
    const int n = 2 * half + 1;
    if (n > 384)
        throw TooLarge("grid resolution " + std::to_string(n) +
                       "^3 exceeds the in-memory limit; coarsen grid_spacing");
    return {-static_cast<double>(half) * h, h, n};
}

namespace detail {

inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;  // FFTW plan creation is not thread-safe
    return m;
}

}  // namespace detail

// Cyclic real 3-D convolution c = a (*) b on an n^3 grid via FFTW r2c/c2r.
// load() caches the spectrum of a so several kernels can be applied against
// the same field. Plans use FFTW_ESTIMATE: deterministic and cheap to build.
class FftConvolver3 {
  public:
    explicit FftConvolver3(int n) : n_(n) {
        real_ = static_cast<std::size_t>(n) * n * n;
        cplx_ = static_cast<std::size_t>(n) * n * (n / 2 + 1);
        buf_ = fftw_alloc_real(real_);
        spec_a_ = fftw_alloc_complex(cplx_);
        work_ = fftw_alloc_complex(cplx_);
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fwd_ = fftw_plan_dft_r2c_3d(n, n, n, buf_, work_, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r_3d(n, n, n, work_, buf_, FFTW_ESTIMATE);
    }
    ~FftConvolver3() {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(buf_);
        fftw_free(spec_a_);
        fftw_free(work_);
    }
    FftConvolver3(const FftConvolver3&) = delete;
    FftConvolver3& operator=(const FftConvolver3&) = delete;

    void load(const std::vector<double>& a) {
        check(a);
        std::copy(a.begin(), a.end(), buf_);
        fftw_execute(fwd_);
        std::copy(work_[0], work_[0] + 2 * cplx_, spec_a_[0]);
    }

    // out = IFFT(FFT(a) . FFT(kernel)) / n^3, the cyclic convolution.
    void apply(const std::vector<double>& kernel, std::vector<double>& out) {
        check(kernel);
        std::copy(kernel.begin(), kernel.end(), buf_);
        fftw_execute(fwd_);
        const double scale = 1.0 / static_cast<double>(real_);
        for (std::size_t k = 0; k < cplx_; ++k) {
            const double re = work_[k][0] * spec_a_[k][0] - work_[k][1] * spec_a_[k][1];
            const double im = work_[k][0] * spec_a_[k][1] + work_[k][1] * spec_a_[k][0];
            work_[k][0] = re * scale;
            work_[k][1] = im * scale;
        }
        fftw_execute(inv_);
        out.assign(buf_, buf_ + real_);
    }

    int n() const { return n_; }

  private:
    void check(const std::vector<double>& v) const {
        if (v.size() != real_) throw SizeMismatch("FftConvolver3: grid size mismatch");
    }

    int n_;
    std::size_t real_ = 0, cplx_ = 0;
    double* buf_ = nullptr;
    fftw_complex* spec_a_ = nullptr;
    fftw_complex* work_ = nullptr;
    fftw_plan fwd_{}, inv_{};
};

// Cloud-in-cell deposit of unit total mass: each point spreads trilinear
// weights over its 8 surrounding nodes, scaled to a density (sum * h^3 = 1).
inline std::vector<double> deposit_cic(const GridGeometry& geom, const std::vector<Vec3>& pts) {
    std::vector<double> rho(geom.cells(), 0.0);
    if (pts.empty()) return rho;
    const double w = 1.0 / (static_cast<double>(pts.size()) * geom.h * geom.h * geom.h);
    for (const Vec3& p : pts) {
        double fx = (p.x - geom.lo) / geom.h;
        double fy = (p.y - geom.lo) / geom.h;
        double fz = (p.z - geom.lo) / geom.h;
        const int ix = static_cast<int>(std::floor(fx));
        const int iy = static_cast<int>(std::floor(fy));
        const int iz = static_cast<int>(std::floor(fz));
        if (ix < 0 || iy < 0 || iz < 0 || ix + 1 >= geom.n || iy + 1 >= geom.n ||
            iz + 1 >= geom.n)
            throw OutOfDomain("deposit_cic: point outside the padded grid");
        fx -= ix;
        fy -= iy;
        fz -= iz;
        for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const double wt = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy) *
                                      (dz ? fz : 1.0 - fz);
                    rho[geom.index(ix + dx, iy + dy, iz + dz)] += w * wt;
                }
    }
    return rho;
}

// Variance-free alternative to deposit_cic: the spatial marginal evaluated at
// the nodes.
inline std::vector<double> fill_density(const GridGeometry& geom, const InitialDensity& density) {
    std::vector<double> rho(geom.cells());
    for (int iz = 0; iz < geom.n; ++iz)
        for (int iy = 0; iy < geom.n; ++iy)
            for (int ix = 0; ix < geom.n; ++ix)
                rho[geom.index(ix, iy, iz)] = density.rho(norm2(geom.node(ix, iy, iz)));
    return rho;
}

namespace detail {

// Samples a kernel w(offset) onto the cyclic grid: offset m in [-half, half]
// per axis, negative offsets wrapped to the top. half must stay below n/2.
template <typename Fn>
std::vector<double> sample_kernel(const GridGeometry& geom, double support, Fn&& w) {
    const int half = static_cast<int>(std::ceil(support / geom.h));
    if (2 * half + 1 > geom.n)
        throw TooLarge("kernel support exceeds the grid; enlarge padding");
    std::vector<double> k(geom.cells(), 0.0);
    for (int mz = -half; mz <= half; ++mz)
        for (int my = -half; my <= half; ++my)
            for (int mx = -half; mx <= half; ++mx) {
                const Vec3 x{mx * geom.h, my * geom.h, mz * geom.h};
                const double v = w(x);
                if (v == 0.0) continue;
                const int ix = mx >= 0 ? mx : geom.n + mx;
                const int iy = my >= 0 ? my : geom.n + my;
                const int iz = mz >= 0 ? mz : geom.n + mz;
                k[geom.index(ix, iy, iz)] = v;
            }
    return k;
}

inline void trilinear_base(const GridGeometry& geom, const Vec3& q, int& ix, int& iy, int& iz,
                           double& fx, double& fy, double& fz) {
    if (!geom.contains(q)) throw OutOfDomain("grid interpolation outside the padded domain");
    fx = (q.x - geom.lo) / geom.h;
    fy = (q.y - geom.lo) / geom.h;
    fz = (q.z - geom.lo) / geom.h;
    ix = std::min(static_cast<int>(std::floor(fx)), geom.n - 2);
    iy = std::min(static_cast<int>(std::floor(fy)), geom.n - 2);
    iz = std::min(static_cast<int>(std::floor(fz)), geom.n - 2);
    fx -= ix;
    fy -= iy;
    fz -= iz;
}

inline double trilinear(const GridGeometry& geom, const std::vector<double>& v, int ix, int iy,
                        int iz, double fx, double fy, double fz) {
    double acc = 0.0;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
                acc += v[geom.index(ix + dx, iy + dy, iz + dz)] * (dx ? fx : 1.0 - fx) *
                       (dy ? fy : 1.0 - fy) * (dz ? fz : 1.0 - fz);
    return acc;
}

}  // namespace detail

// Gridded mean-field force: the three components of -(force kernel * density)
// at the nodes, trilinearly interpolated between them.
struct ForceField {
    GridGeometry geom;
    std::vector<double> fx, fy, fz;

    Vec3 at(const Vec3& q) const {
        int ix, iy, iz;
        double ax, ay, az;
        detail::trilinear_base(geom, q, ix, iy, iz, ax, ay, az);
        return {detail::trilinear(geom, fx, ix, iy, iz, ax, ay, az),
                detail::trilinear(geom, fy, ix, iy, iz, ax, ay, az),
                detail::trilinear(geom, fz, ix, iy, iz, ax, ay, az)};
    }

    double sup_norm() const {
        double best = 0.0;
        for (std::size_t i = 0; i < fx.size(); ++i) {
            const double m = fx[i] * fx[i] + fy[i] * fy[i] + fz[i] * fz[i];
            best = std::max(best, m);
        }
        return std::sqrt(best);
    }
};

struct ScalarField {
    GridGeometry geom;
    std::vector<double> v;

    double at(const Vec3& q) const {
        int ix, iy, iz;
        double ax, ay, az;
        detail::trilinear_base(geom, q, ix, iy, iz, ax, ay, az);
        return detail::trilinear(geom, v, ix, iy, iz, ax, ay, az);
    }

    double sup_abs() const {
        double best = 0.0;
        for (double x : v) best = std::max(best, std::fabs(x));
        return best;
    }
};

// f_bar = -(f * ktilde): midpoint quadrature h^3 sum rho[m] f(x - x_m) per
// component, realized as three FFT convolutions against the cached density
// spectrum.
inline ForceField make_force_field(const GridGeometry& geom, const std::vector<double>& density,
                                   const KernelSpec& spec) {
    if (density.size() != geom.cells()) throw SizeMismatch("make_force_field: grid mismatch");
    FftConvolver3 conv(geom.n);
    conv.load(density);
    const double support = spec.scaled_support();
    const double vol = geom.h * geom.h * geom.h;
    ForceField field{geom, {}, {}, {}};
    std::vector<double>* comps[3] = {&field.fx, &field.fy, &field.fz};
    for (int c = 0; c < 3; ++c) {
        const auto k = detail::sample_kernel(geom, support, [&](const Vec3& x) {
            return eval_force(spec, x)[c];
        });
        conv.apply(k, *comps[c]);
        for (double& v : *comps[c]) v *= -vol;
    }
    return field;
}

// (w * ktilde) for a scalar radial kernel w with the given support radius.
inline ScalarField make_scalar_field(const GridGeometry& geom, const std::vector<double>& density,
                                     double support, const std::function<double(double)>& w) {
    if (density.size() != geom.cells()) throw SizeMismatch("make_scalar_field: grid mismatch");
    FftConvolver3 conv(geom.n);
    conv.load(density);
    const auto k =
        detail::sample_kernel(geom, support, [&](const Vec3& x) { return w(norm2(x)); });
    ScalarField field{geom, {}};
    conv.apply(k, field.v);
    const double vol = geom.h * geom.h * geom.h;
    for (double& v : field.v) v *= vol;
    return field;
}

}  // namespace mflab
