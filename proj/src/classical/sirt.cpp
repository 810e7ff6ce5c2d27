#include <cmath>
#include <stdexcept>
#include <vector>

#include "cbct/classical.hpp"

namespace cbct::recon {
namespace {

constexpr double kGuard = 1e-8;

std::vector<float> guarded_inverse(std::span<const float> sums) {
    std::vector<float> inv(sums.size());
    for (std::size_t i = 0; i < sums.size(); ++i) {
        inv[i] = sums[i] > kGuard ? static_cast<float>(1.0 / sums[i]) : 0.0f;
    }
    return inv;
}

}  // namespace

SirtResult sirt_reconstruct(const ProjectionSet& p, const VolumeGrid& grid, int n_iters,
                            const ProjectorOptions& opts) {
    if (n_iters < 1) throw std::invalid_argument("sirt_reconstruct: n_iters must be >= 1");
    const ScanGeometry& g = p.geometry();

    const std::vector<float> row_inv =
        guarded_inverse(forward_project(Volume(grid, 1.0f), g, opts).data());
    const std::vector<float> col_inv =
        guarded_inverse(back_project(ProjectionSet(g, 1.0f), grid, opts).data());

    SirtResult res;
    res.volume = Volume(grid);
    const auto y = p.data();

    auto record = [&](const ProjectionSet& ax, ProjectionSet& weighted) {
        double plain = 0.0, wsum = 0.0;
        const auto a = ax.data();
        auto wdat = weighted.data();
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double r = static_cast<double>(y[i]) - a[i];
            plain += r * r;
            wsum += row_inv[i] * r * r;
            wdat[i] = static_cast<float>(row_inv[i] * r);
        }
        res.residual.push_back(std::sqrt(plain));
        res.weighted_residual.push_back(std::sqrt(wsum));
    };

    ProjectionSet weighted(g);
    record(forward_project(res.volume, g, opts), weighted);
    for (int it = 0; it < n_iters; ++it) {
        const Volume update = back_project(weighted, grid, opts);
        auto x = res.volume.data();
        const auto u = update.data();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const float v = x[i] + col_inv[i] * u[i];
            x[i] = v > 0.0f ? v : 0.0f;
        }
        record(forward_project(res.volume, g, opts), weighted);
    }
    return res;
}

}  // namespace cbct::recon
