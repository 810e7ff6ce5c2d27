#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace cbct {

/// Circular-orbit cone-beam acquisition.
///
/// Right-handed frame with the rotation axis along z. At view angle beta the
/// source sits at sod * (cos beta, sin beta, 0) and the flat detector is
/// centred on the opposite side of the axis at distance sdd from the source,
/// with its column axis along (-sin beta, cos beta, 0) and its row axis along z.
struct ScanGeometry {
    double sod = 0.0;        // source to rotation axis, mm
    double sdd = 0.0;        // source to detector, mm
    int det_rows = 0;        // D1
    int det_cols = 0;        // D2
    double det_pitch = 0.0;  // mm per pixel, square pixels
    int n_views = 0;         // M
    double arc_deg = 0.0;    // total angular coverage
    std::vector<double> view_angles;  // radians, strictly increasing

    /// Throws GeometryError when any invariant is violated.
    void validate() const;

    /// Angular increment used to weight backprojection, radians.
    double angular_step() const;

    /// Detector coordinate (mm) of a pixel centre along the column / row axis.
    double u_of_col(double col) const { return (col - 0.5 * (det_cols - 1)) * det_pitch; }
    double v_of_row(double row) const { return (row - 0.5 * (det_rows - 1)) * det_pitch; }

    std::int64_t pixels_per_view() const { return std::int64_t{det_rows} * det_cols; }
};

/// Builds a geometry with n_views angles uniformly spaced over `arc_deg`
/// (first angle 0, last angle arc * (n-1)/n).
ScanGeometry make_circular_geometry(double sod, double sdd, int det_rows, int det_cols,
                                    double det_pitch, int n_views, double arc_deg);

/// Regular voxel grid. Voxel (i, j, k) has centre
/// origin + ((i - (nx-1)/2) * voxel_size, (j - (ny-1)/2) * voxel_size, (k - (nz-1)/2) * voxel_size).
struct VolumeGrid {
    int nx = 0, ny = 0, nz = 0;  // N1, N2, N3
    double voxel_size = 0.0;     // mm
    std::array<double, 3> origin{0.0, 0.0, 0.0};

    void validate() const;

    std::int64_t voxel_count() const { return std::int64_t{nx} * ny * nz; }
    std::int64_t index(int x, int y, int z) const {
        return x + std::int64_t{nx} * (y + std::int64_t{ny} * z);
    }
    double x_of(double i) const { return origin[0] + (i - 0.5 * (nx - 1)) * voxel_size; }
    double y_of(double j) const { return origin[1] + (j - 0.5 * (ny - 1)) * voxel_size; }
    double z_of(double k) const { return origin[2] + (k - 0.5 * (nz - 1)) * voxel_size; }

    bool operator==(const VolumeGrid&) const = default;
};

/// Cubic grid of n^3 voxels centred on the rotation axis.
VolumeGrid make_cubic_grid(int n, double voxel_size = 1.0);

/// Desk-scale acquisition that covers the inscribed cylinder of `grid` with
/// 1.5x magnification and roughly one detector pixel per voxel at the axis.
ScanGeometry make_desk_geometry(const VolumeGrid& grid, int n_views, double arc_deg);

}  // namespace cbct
