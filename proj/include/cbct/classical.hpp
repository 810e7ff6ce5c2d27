#pragma once

#include <string_view>
#include <vector>

#include "cbct/projector.hpp"
#include "cbct/volume.hpp"

namespace cbct::recon {

enum class RampFilter { RamLak, HannRamLak };

RampFilter parse_ramp_filter(std::string_view name);  // "ram_lak" | "hann_windowed_ram_lak"
std::string_view to_string(RampFilter f);

/// Cosine-weights and ramp-filters every detector row. The ramp is the
/// discrete Ram-Lak kernel at the isocentre pixel spacing, applied by FFT
/// convolution with zero padding to 2 * next_pow2(det_cols).
ProjectionSet filter_projections(const ProjectionSet& p, RampFilter filter);

/// Feldkamp-Davis-Kress reconstruction. Arcs shorter than 360 degrees are
/// rescaled by 360/arc without redundancy (Parker) weighting.
Volume fdk_reconstruct(const ProjectionSet& p, const VolumeGrid& grid, RampFilter filter, int threads = 0);

struct SirtResult {
    Volume volume;
    /// ||A x_k - y|| for k = 0..n_iters (x_0 = 0).
    std::vector<double> residual;
    /// ||R^(1/2) (A x_k - y)||, the quantity SIRT provably does not increase.
    std::vector<double> weighted_residual;
};

/// x_{k+1} = max(0, x_k + C A^T R (y - A x_k)) with R, C the inverse row and
/// column sums of A (zero where the sum is below 1e-8).
SirtResult sirt_reconstruct(const ProjectionSet& p, const VolumeGrid& grid, int n_iters,
                            const ProjectorOptions& opts = {});

}  // namespace cbct::recon
