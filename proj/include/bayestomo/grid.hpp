#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bayestomo/spatial.hpp"

namespace bayestomo {

/// Regular voxel grid; one velocity parameter per cell center. The z axis
/// points down (z = depth in km, surface at z = 0).
struct VoxelGrid {
    Point3 origin{0.0, 0.0, 0.0};
    std::array<int, 3> counts{1, 1, 1};
    Point3 cell{100.0, 100.0, 100.0}; // cell size per axis, km

    void validate() const {
        for (int c : counts)
            if (c < 1) throw std::invalid_argument("VoxelGrid: counts must be >= 1");
        for (double s : cell)
            if (!(s > 0.0)) throw std::invalid_argument("VoxelGrid: cell sizes must be positive");
    }

    int cell_count() const { return counts[0] * counts[1] * counts[2]; }

    int flat_index(int ix, int iy, int iz) const {
        return ix + counts[0] * (iy + counts[1] * iz);
    }

    Point3 cell_center(int flat) const {
        int ix = flat % counts[0];
        int iy = (flat / counts[0]) % counts[1];
        int iz = flat / (counts[0] * counts[1]);
        return {origin[0] + (ix + 0.5) * cell[0],
                origin[1] + (iy + 0.5) * cell[1],
                origin[2] + (iz + 0.5) * cell[2]};
    }

    Point3 max_corner() const {
        return {origin[0] + counts[0] * cell[0],
                origin[1] + counts[1] * cell[1],
                origin[2] + counts[2] * cell[2]};
    }

    /// Cell centers as the node set of the spatial prior.
    NodeSet cell_centers() const {
        NodeSet nodes;
        nodes.coords.resize(cell_count());
        for (int f = 0; f < cell_count(); ++f) nodes.coords[f] = cell_center(f);
        return nodes;
    }
};

struct RayEntry {
    int cell;
    double length; // chord length inside the cell, km
};

/// Chord lengths of the segment source->receiver through each traversed
/// cell. Portions outside the grid contribute nothing; face-grazing
/// crossings of zero length are assigned to neither cell. The result is
/// independent of endpoint order.
inline std::vector<RayEntry> trace_ray(const VoxelGrid& grid, Point3 a, Point3 b) {
    grid.validate();
    if (a == b) throw std::invalid_argument("trace_ray: degenerate segment");
    if (std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end()))
        std::swap(a, b); // canonical endpoint order makes the row reversible bit-for-bit

    const Point3 dir{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    const Point3 hi = grid.max_corner();

    // clip the parameter t in [0,1] against the grid slabs
    double t0 = 0.0, t1 = 1.0;
    for (int ax = 0; ax < 3; ++ax) {
        if (dir[ax] == 0.0) {
            if (a[ax] < grid.origin[ax] || a[ax] > hi[ax]) return {};
            continue;
        }
        double ta = (grid.origin[ax] - a[ax]) / dir[ax];
        double tb = (hi[ax] - a[ax]) / dir[ax];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (t0 >= t1) return {};

    // breakpoints at every face crossing inside [t0, t1]
    std::vector<double> ts{t0, t1};
    for (int ax = 0; ax < 3; ++ax) {
        if (dir[ax] == 0.0) continue;
        for (int k = 0; k <= grid.counts[ax]; ++k) {
            double plane = grid.origin[ax] + k * grid.cell[ax];
            double t = (plane - a[ax]) / dir[ax];
            if (t > t0 && t < t1) ts.push_back(t);
        }
    }
    std::sort(ts.begin(), ts.end());

    const double seg_len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    const double t_eps = 1e-12;
    std::vector<RayEntry> row;
    for (std::size_t s = 0; s + 1 < ts.size(); ++s) {
        double dt = ts[s + 1] - ts[s];
        if (dt <= t_eps) continue;
        double tm = 0.5 * (ts[s] + ts[s + 1]);
        std::array<int, 3> idx;
        bool inside = true;
        for (int ax = 0; ax < 3; ++ax) {
            double u = (a[ax] + tm * dir[ax] - grid.origin[ax]) / grid.cell[ax];
            int i = static_cast<int>(std::floor(u));
            if (i < 0 || i >= grid.counts[ax]) {
                inside = false;
                break;
            }
            idx[ax] = i;
        }
        if (!inside) continue;
        int cell = grid.flat_index(idx[0], idx[1], idx[2]);
        double len = dt * seg_len;
        if (!row.empty() && row.back().cell == cell)
            row.back().length += len;
        else
            row.push_back({cell, len});
    }
    return row;
}

} // namespace bayestomo
