#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cbct/classical.hpp"
#include "cbct/parallel.hpp"

namespace cbct::recon {
namespace {

struct FftwDeleter {
    void operator()(void* p) const { fftwf_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter>;

template <typename T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
    return FftwBuffer<T>(static_cast<T*>(fftwf_malloc(sizeof(T) * n)));
}

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Frequency response of the (optionally Hann-windowed) discrete ramp,
// including the 1/L normalisation of the inverse transform and the tau factor
// of the convolution sum.
std::vector<float> ramp_response(int len, double tau, RampFilter filter) {
    std::vector<double> h(len, 0.0);
    h[0] = 1.0 / (4.0 * tau * tau);
    for (int k = 1; k <= len / 2; ++k) {
        if (k % 2 == 1) {
            const double val = -1.0 / (k * k * std::numbers::pi * std::numbers::pi * tau * tau);
            h[k] = val;
            h[len - k] = val;
        }
    }
    auto in = fftw_alloc<float>(len);
    auto out = fftw_alloc<fftwf_complex>(len / 2 + 1);
    fftwf_plan plan = fftwf_plan_dft_r2c_1d(len, in.get(), out.get(), FFTW_ESTIMATE);
    for (int i = 0; i < len; ++i) in[i] = static_cast<float>(h[i]);
    fftwf_execute(plan);
    fftwf_destroy_plan(plan);

    std::vector<float> resp(len / 2 + 1);
    for (int j = 0; j <= len / 2; ++j) {
        double r = out[j][0];
        if (filter == RampFilter::HannRamLak) r *= 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * j / len));
        resp[j] = static_cast<float>(r * tau / len);
    }
    return resp;
}

}  // namespace

RampFilter parse_ramp_filter(std::string_view name) {
    if (name == "ram_lak") return RampFilter::RamLak;
    if (name == "hann_windowed_ram_lak") return RampFilter::HannRamLak;
    throw std::invalid_argument("unknown filter '" + std::string(name) + "'");
}

std::string_view to_string(RampFilter f) {
    return f == RampFilter::RamLak ? "ram_lak" : "hann_windowed_ram_lak";
}

ProjectionSet filter_projections(const ProjectionSet& p, RampFilter filter) {
    const ScanGeometry& g = p.geometry();
    const int cols = g.det_cols;
    const int len = 2 * next_pow2(cols);
    const double tau = g.det_pitch * g.sod / g.sdd;
    const std::vector<float> resp = ramp_response(len, tau, filter);

    ProjectionSet out(g);
    auto in = fftw_alloc<float>(len);
    auto spec = fftw_alloc<fftwf_complex>(len / 2 + 1);
    fftwf_plan fwd = fftwf_plan_dft_r2c_1d(len, in.get(), spec.get(), FFTW_ESTIMATE);
    fftwf_plan inv = fftwf_plan_dft_c2r_1d(len, spec.get(), in.get(), FFTW_ESTIMATE);

    const double sdd2 = g.sdd * g.sdd;
    for (int view = 0; view < g.n_views; ++view) {
        for (int row = 0; row < g.det_rows; ++row) {
            const double v = g.v_of_row(row);
            for (int c = 0; c < cols; ++c) {
                const double u = g.u_of_col(c);
                in[c] = static_cast<float>(p.at(view, row, c) * g.sdd / std::sqrt(sdd2 + u * u + v * v));
            }
            std::fill(in.get() + cols, in.get() + len, 0.0f);
            fftwf_execute(fwd);
            for (int j = 0; j <= len / 2; ++j) {
                spec[j][0] *= resp[j];
                spec[j][1] *= resp[j];
            }
            fftwf_execute(inv);
            for (int c = 0; c < cols; ++c) out.at(view, row, c) = in[c];
        }
    }
    fftwf_destroy_plan(fwd);
    fftwf_destroy_plan(inv);
    return out;
}

Volume fdk_reconstruct(const ProjectionSet& p, const VolumeGrid& grid, RampFilter filter, int threads) {
    const ScanGeometry& g = p.geometry();
    if (g.n_views < 2) throw std::invalid_argument("fdk_reconstruct: need at least 2 views");
    grid.validate();
    const ProjectionSet q = filter_projections(p, filter);

    const double scale = 0.5 * (360.0 / g.arc_deg) * g.angular_step();
    std::vector<double> cosb(g.n_views), sinb(g.n_views);
    for (int i = 0; i < g.n_views; ++i) {
        cosb[i] = std::cos(g.view_angles[i]);
        sinb[i] = std::sin(g.view_angles[i]);
    }
    const double half_cols = 0.5 * (g.det_cols - 1);
    const double half_rows = 0.5 * (g.det_rows - 1);

    Volume out(grid);
    parallel_chunks(grid.nz, threads, [&](std::int64_t z0, std::int64_t z1, int) {
        for (auto k = static_cast<int>(z0); k < z1; ++k) {
            const double z = grid.z_of(k);
            for (int j = 0; j < grid.ny; ++j) {
                const double y = grid.y_of(j);
                for (int i = 0; i < grid.nx; ++i) {
                    const double x = grid.x_of(i);
                    double acc = 0.0;
                    for (int view = 0; view < g.n_views; ++view) {
                        const double t = x * cosb[view] + y * sinb[view];
                        const double sp = -x * sinb[view] + y * cosb[view];
                        const double dist = g.sod - t;
                        const double mag = g.sdd / dist;
                        const double col = sp * mag / g.det_pitch + half_cols;
                        const double row = z * mag / g.det_pitch + half_rows;
                        const int c0 = static_cast<int>(std::floor(col));
                        const int r0 = static_cast<int>(std::floor(row));
                        if (c0 < -1 || c0 >= g.det_cols || r0 < -1 || r0 >= g.det_rows) continue;
                        const double wc = col - c0, wr = row - r0;
                        double val = 0.0;
                        for (int dr = 0; dr < 2; ++dr) {
                            const int r = r0 + dr;
                            if (r < 0 || r >= g.det_rows) continue;
                            const double wrr = dr ? wr : 1.0 - wr;
                            for (int dc = 0; dc < 2; ++dc) {
                                const int c = c0 + dc;
                                if (c < 0 || c >= g.det_cols) continue;
                                val += wrr * (dc ? wc : 1.0 - wc) * q.at(view, r, c);
                            }
                        }
                        const double w = g.sod / dist;
                        acc += w * w * val;
                    }
                    const double f = acc * scale;
                    out.at(i, j, k) = std::isfinite(f) ? static_cast<float>(f) : 0.0f;
                }
            }
        }
    });
    return out;
}

}  // namespace cbct::recon
