#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mflab/errors.hpp"
#include "mflab/vec3.hpp"

namespace mflab {

// Uniform spatial hash over the bounding box of a point set. Cell edges are at
// least the requested interaction range, so every interacting pair sits in the
// same or an adjacent cell and the 27-cell stencil is exhaustive.
//
// Particle ids are stored ascending within each cell and neighbor cells are
// visited in ascending linear id, which makes every traversal order a pure
// function of the positions. Rebuilding from identical positions reproduces
// the exact traversal, the property the deterministic force mode relies on.
class CellGrid {
  public:
    CellGrid(const std::vector<Vec3>& points, double min_cell_size, int max_per_axis = 64) {
        if (points.empty()) throw SizeMismatch("cell grid over empty point set");
        if (!(min_cell_size > 0.0)) throw OutOfDomain("cell size must be positive");
        Vec3 lo = points[0], hi = points[0];
        for (const Vec3& p : points) {
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], p[a]);
                hi[a] = std::max(hi[a], p[a]);
            }
        }
        origin_ = lo;
        for (int a = 0; a < 3; ++a) {
            const double extent = hi[a] - lo[a];
            int dim = extent > 0.0 ? static_cast<int>(extent / min_cell_size) + 1 : 1;
            dim = std::min(dim, max_per_axis);
            dims_[a] = dim;
            // stretch so dim cells exactly tile the extent; never below range
            cell_size_[a] = std::max(min_cell_size, extent > 0.0 ? extent / dim : min_cell_size);
        }
        const std::size_t ncells =
            static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
        std::vector<std::uint32_t> counts(ncells, 0);
        std::vector<std::uint32_t> cell_of(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            cell_of[i] = linear_index(cell_coords(points[i]));
            ++counts[cell_of[i]];
        }
        offsets_.assign(ncells + 1, 0);
        for (std::size_t c = 0; c < ncells; ++c) offsets_[c + 1] = offsets_[c] + counts[c];
        items_.resize(points.size());
        std::vector<std::uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
        for (std::size_t i = 0; i < points.size(); ++i)  // ascending ids per cell
            items_[cursor[cell_of[i]]++] = static_cast<std::uint32_t>(i);
    }

    // Applies fn to every particle id in the 27-cell stencil around x, in
    // ascending (cell id, particle id) order. Includes the particle at x
    // itself when x is a stored point; callers filter self and range.
    template <typename Fn>
    void for_each_candidate(const Vec3& x, Fn&& fn) const {
        const auto c = cell_coords(x);
        const int z0 = std::max(c[2] - 1, 0), z1 = std::min(c[2] + 1, dims_[2] - 1);
        const int y0 = std::max(c[1] - 1, 0), y1 = std::min(c[1] + 1, dims_[1] - 1);
        const int x0 = std::max(c[0] - 1, 0), x1 = std::min(c[0] + 1, dims_[0] - 1);
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int xx = x0; xx <= x1; ++xx) {
                    const std::uint32_t cid = linear_index({xx, y, z});
                    for (std::uint32_t k = offsets_[cid]; k < offsets_[cid + 1]; ++k)
                        fn(items_[k]);
                }
    }

    // Same traversal contract for an arbitrary search radius: the stencil
    // halfwidth grows to ceil(radius / cell size) per axis. The 27-cell
    // variant above is the radius <= cell size special case.
    template <typename Fn>
    void for_each_within(const Vec3& x, double radius, Fn&& fn) const {
        const auto c = cell_coords(x);
        int half[3];
        for (int a = 0; a < 3; ++a)
            half[a] = static_cast<int>(std::ceil(radius / cell_size_[a]));
        const int z0 = std::max(c[2] - half[2], 0), z1 = std::min(c[2] + half[2], dims_[2] - 1);
        const int y0 = std::max(c[1] - half[1], 0), y1 = std::min(c[1] + half[1], dims_[1] - 1);
        const int x0 = std::max(c[0] - half[0], 0), x1 = std::min(c[0] + half[0], dims_[0] - 1);
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int xx = x0; xx <= x1; ++xx) {
                    const std::uint32_t cid = linear_index({xx, y, z});
                    for (std::uint32_t k = offsets_[cid]; k < offsets_[cid + 1]; ++k)
                        fn(items_[k]);
                }
    }

    std::size_t cell_count() const { return offsets_.size() - 1; }
    double cell_size(int axis) const { return cell_size_[axis]; }

  private:
    std::array<int, 3> cell_coords(const Vec3& p) const {
        std::array<int, 3> c;
        for (int a = 0; a < 3; ++a) {
            const int i = static_cast<int>((p[a] - origin_[a]) / cell_size_[a]);
            c[a] = std::clamp(i, 0, dims_[a] - 1);
        }
        return c;
    }

    std::uint32_t linear_index(const std::array<int, 3>& c) const {
        return static_cast<std::uint32_t>((c[2] * dims_[1] + c[1]) * dims_[0] + c[0]);
    }

    Vec3 origin_;
    double cell_size_[3] = {1, 1, 1};
    int dims_[3] = {1, 1, 1};
    std::vector<std::uint32_t> offsets_;
    std::vector<std::uint32_t> items_;
};

}  // namespace mflab
