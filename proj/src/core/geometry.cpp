#include "cbct/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cbct/errors.hpp"

namespace cbct {

void ScanGeometry::validate() const {
    if (!(sod > 0.0) || !(sdd > sod)) {
        throw GeometryError("invalid geometry: need sdd > sod > 0 (sod=" + std::to_string(sod) +
                            ", sdd=" + std::to_string(sdd) + ")");
    }
    if (det_rows < 1 || det_cols < 1 || n_views < 1) {
        throw GeometryError("invalid geometry: detector rows/cols and view count must be >= 1");
    }
    if (!(det_pitch > 0.0)) throw GeometryError("invalid geometry: det_pitch must be > 0");
    if (!(arc_deg > 0.0) || arc_deg > 360.0) {
        throw GeometryError("invalid geometry: arc must lie in (0, 360] degrees");
    }
    if (view_angles.size() != static_cast<std::size_t>(n_views)) {
        throw GeometryError("invalid geometry: " + std::to_string(view_angles.size()) +
                            " view angles for n_views=" + std::to_string(n_views));
    }
    for (std::size_t i = 0; i < view_angles.size(); ++i) {
        if (!std::isfinite(view_angles[i])) throw GeometryError("invalid geometry: non-finite view angle");
        if (i > 0 && !(view_angles[i] > view_angles[i - 1])) {
            throw GeometryError("invalid geometry: view angles must be strictly increasing");
        }
    }
}

double ScanGeometry::angular_step() const {
    return arc_deg * std::numbers::pi / 180.0 / n_views;
}

ScanGeometry make_circular_geometry(double sod, double sdd, int det_rows, int det_cols,
                                    double det_pitch, int n_views, double arc_deg) {
    ScanGeometry g;
    g.sod = sod;
    g.sdd = sdd;
    g.det_rows = det_rows;
    g.det_cols = det_cols;
    g.det_pitch = det_pitch;
    g.n_views = n_views;
    g.arc_deg = arc_deg;
    if (n_views >= 1) {
        const double arc = arc_deg * std::numbers::pi / 180.0;
        g.view_angles.resize(n_views);
        for (int i = 0; i < n_views; ++i) g.view_angles[i] = arc * i / n_views;
    }
    g.validate();
    return g;
}

void VolumeGrid::validate() const {
    if (nx < 1 || ny < 1 || nz < 1) throw GeometryError("invalid grid: nx, ny, nz must be >= 1");
    if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
        throw GeometryError("invalid grid: voxel_size must be > 0");
    }
    for (double o : origin) {
        if (!std::isfinite(o)) throw GeometryError("invalid grid: non-finite origin");
    }
}

VolumeGrid make_cubic_grid(int n, double voxel_size) {
    VolumeGrid g{n, n, n, voxel_size, {0.0, 0.0, 0.0}};
    g.validate();
    return g;
}

ScanGeometry make_desk_geometry(const VolumeGrid& grid, int n_views, double arc_deg) {
    grid.validate();
    const double extent = std::max({grid.nx, grid.ny, grid.nz}) * grid.voxel_size;
    const double sod = 3.0 * extent;
    const double sdd = 4.5 * extent;
    const double pitch = 1.5 * grid.voxel_size;
    // Half-width of the inscribed cylinder seen from its nearest point, at the detector.
    const double half = 0.5 * extent * sdd / (sod - 0.5 * extent);
    int det = static_cast<int>(std::ceil(2.0 * half / pitch));
    det += det % 2;
    return make_circular_geometry(sod, sdd, det + 2, det + 2, pitch, n_views, arc_deg);
}

}  // namespace cbct
