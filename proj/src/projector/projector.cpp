#include "cbct/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cbct/parallel.hpp"

namespace cbct {
namespace {

struct Vec3 {
    double x, y, z;
};

struct Box {
    double lo[3], hi[3];
    double first_centre[3];
};

Box volume_box(const VolumeGrid& g) {
    Box b{};
    const double h = 0.5 * g.voxel_size;
    b.first_centre[0] = g.x_of(0);
    b.first_centre[1] = g.y_of(0);
    b.first_centre[2] = g.z_of(0);
    b.lo[0] = g.x_of(0) - h;
    b.hi[0] = g.x_of(g.nx - 1) + h;
    b.lo[1] = g.y_of(0) - h;
    b.hi[1] = g.y_of(g.ny - 1) + h;
    b.lo[2] = g.z_of(0) - h;
    b.hi[2] = g.z_of(g.nz - 1) + h;
    return b;
}

// Calls visit(voxel_index, weight) for every trilinear tap of every sample on
// the ray src + t * dir (|dir| = 1). Weights already include the step length.
template <typename Visit>
void trace_ray(const VolumeGrid& g, const Box& box, const Vec3& src, const Vec3& dir, Visit&& visit) {
    double t0 = 0.0;
    double t1 = std::numeric_limits<double>::infinity();
    const double s[3] = {src.x, src.y, src.z};
    const double d[3] = {dir.x, dir.y, dir.z};
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-12) {
            if (s[a] < box.lo[a] || s[a] > box.hi[a]) return;
            continue;
        }
        double ta = (box.lo[a] - s[a]) / d[a];
        double tb = (box.hi[a] - s[a]) / d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (!(t1 > t0)) return;

    const double len = t1 - t0;
    const double max_step = 0.5 * g.voxel_size;
    const auto n = static_cast<std::int64_t>(std::ceil(len / max_step));
    if (n <= 0) return;
    const double step = len / static_cast<double>(n);
    const double inv_vs = 1.0 / g.voxel_size;

    for (std::int64_t k = 0; k < n; ++k) {
        const double t = t0 + (static_cast<double>(k) + 0.5) * step;
        const double fx = (s[0] + t * d[0] - box.first_centre[0]) * inv_vs;
        const double fy = (s[1] + t * d[1] - box.first_centre[1]) * inv_vs;
        const double fz = (s[2] + t * d[2] - box.first_centre[2]) * inv_vs;
        const int ix = static_cast<int>(std::floor(fx));
        const int iy = static_cast<int>(std::floor(fy));
        const int iz = static_cast<int>(std::floor(fz));
        const double wx = fx - ix, wy = fy - iy, wz = fz - iz;
        for (int dz = 0; dz < 2; ++dz) {
            const int z = iz + dz;
            if (z < 0 || z >= g.nz) continue;
            const double wzz = dz ? wz : 1.0 - wz;
            for (int dy = 0; dy < 2; ++dy) {
                const int y = iy + dy;
                if (y < 0 || y >= g.ny) continue;
                const double wyy = wzz * (dy ? wy : 1.0 - wy);
                const std::int64_t row = std::int64_t{g.nx} * (y + std::int64_t{g.ny} * z);
                for (int dx = 0; dx < 2; ++dx) {
                    const int x = ix + dx;
                    if (x < 0 || x >= g.nx) continue;
                    visit(row + x, step * wyy * (dx ? wx : 1.0 - wx));
                }
            }
        }
    }
}

struct RayFrame {
    Vec3 src;
    Vec3 det_centre;
    Vec3 eu;  // detector column direction
};

RayFrame frame_for(const ScanGeometry& g, double beta) {
    const double c = std::cos(beta), s = std::sin(beta);
    return {{g.sod * c, g.sod * s, 0.0}, {(g.sod - g.sdd) * c, (g.sod - g.sdd) * s, 0.0}, {-s, c, 0.0}};
}

Vec3 unit_ray(const RayFrame& f, double u, double v) {
    Vec3 d{f.det_centre.x + u * f.eu.x - f.src.x, f.det_centre.y + u * f.eu.y - f.src.y,
           f.det_centre.z + v - f.src.z};
    const double n = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
    return {d.x / n, d.y / n, d.z / n};
}

}  // namespace

ProjectionSet forward_project(const Volume& v, const ScanGeometry& g, const ProjectorOptions& opts) {
    g.validate();
    ProjectionSet out(g);
    const VolumeGrid& grid = v.grid();
    const Box box = volume_box(grid);
    const auto vol = v.data();
    const std::int64_t lines = std::int64_t{g.n_views} * g.det_rows;

    parallel_chunks(lines, opts.threads, [&](std::int64_t begin, std::int64_t end, int) {
        for (std::int64_t line = begin; line < end; ++line) {
            const int view = static_cast<int>(line / g.det_rows);
            const int row = static_cast<int>(line % g.det_rows);
            const RayFrame f = frame_for(g, g.view_angles[view]);
            const double vv = g.v_of_row(row);
            for (int col = 0; col < g.det_cols; ++col) {
                const Vec3 dir = unit_ray(f, g.u_of_col(col), vv);
                double sum = 0.0;
                trace_ray(grid, box, f.src, dir, [&](std::int64_t idx, double w) { sum += w * vol[idx]; });
                out.at(view, row, col) = static_cast<float>(sum);
            }
        }
    });
    return out;
}

Volume back_project(const ProjectionSet& p, const VolumeGrid& grid, const ProjectorOptions& opts) {
    grid.validate();
    const ScanGeometry& g = p.geometry();
    const Box box = volume_box(grid);
    int threads = opts.threads <= 0 ? default_thread_count() : opts.threads;
    threads = std::min(threads, g.n_views);

    std::vector<std::vector<double>> partial(static_cast<std::size_t>(threads));
    parallel_chunks(g.n_views, threads, [&](std::int64_t begin, std::int64_t end, int t) {
        auto& acc = partial[static_cast<std::size_t>(t)];
        acc.assign(static_cast<std::size_t>(grid.voxel_count()), 0.0);
        for (auto view = static_cast<int>(begin); view < end; ++view) {
            const RayFrame f = frame_for(g, g.view_angles[view]);
            for (int row = 0; row < g.det_rows; ++row) {
                const double vv = g.v_of_row(row);
                for (int col = 0; col < g.det_cols; ++col) {
                    const double y = p.at(view, row, col);
                    if (y == 0.0) continue;
                    const Vec3 dir = unit_ray(f, g.u_of_col(col), vv);
                    trace_ray(grid, box, f.src, dir, [&](std::int64_t idx, double w) { acc[idx] += w * y; });
                }
            }
        }
    });

    Volume out(grid);
    auto data = out.data();
    for (std::int64_t i = 0; i < grid.voxel_count(); ++i) {
        double s = 0.0;
        for (const auto& acc : partial) {
            if (!acc.empty()) s += acc[static_cast<std::size_t>(i)];
        }
        data[i] = static_cast<float>(s);
    }
    return out;
}

}  // namespace cbct
