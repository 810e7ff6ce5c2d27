#pragma once

#include "cbct/volume.hpp"

namespace cbct {

struct ProjectorOptions {
    int threads = 0;  // 0 = hardware concurrency
};

/// Cone-beam line integrals. Each detector pixel receives the integral of the
/// trilinearly interpolated volume along the segment from the source to the
/// pixel centre, sampled at midpoints of equal steps no longer than half a
/// voxel. Voxels outside the grid read as zero; rays that miss contribute 0.
ProjectionSet forward_project(const Volume& v, const ScanGeometry& g, const ProjectorOptions& opts = {});

/// Exact transpose of forward_project for the same sampling scheme.
///
/// Views are split into contiguous blocks, one per thread; each thread
/// scatters into a private double-precision buffer and the buffers are summed
/// in thread order. Output is bit-identical at a fixed thread count.
Volume back_project(const ProjectionSet& p, const VolumeGrid& grid, const ProjectorOptions& opts = {});

}  // namespace cbct
