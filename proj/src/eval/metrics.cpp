#include "cbct/eval/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cbct/errors.hpp"

namespace cbct::eval {

double psnr(std::span<const float> a, std::span<const float> b, double data_range) {
    if (a.size() != b.size()) {
        throw ShapeError("psnr: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " elements");
    }
    if (!(data_range > 0.0)) throw std::invalid_argument("psnr: data_range must be positive");
    if (a.empty()) throw ShapeError("psnr: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / mse);
}

double psnr(const Volume& a, const Volume& b, double data_range) {
    if (!(a.grid() == b.grid())) throw ShapeError("psnr: volumes are on different grids");
    return psnr(a.data(), b.data(), data_range);
}

namespace {

// Summed-volume table with a zero border: S(x, y, z) sums f over [0, x) x [0, y) x [0, z).
class Integral {
 public:
    Integral(int nx, int ny, int nz) : sx_(nx + 1), sy_(ny + 1), t_(static_cast<std::size_t>(sx_) * sy_ * (nz + 1)) {}

    template <class F>
    void build(int nx, int ny, int nz, F f) {
        for (int z = 1; z <= nz; ++z)
            for (int y = 1; y <= ny; ++y)
                for (int x = 1; x <= nx; ++x) {
                    at(x, y, z) = f(x - 1, y - 1, z - 1) + at(x - 1, y, z) + at(x, y - 1, z) + at(x, y, z - 1) -
                                  at(x - 1, y - 1, z) - at(x - 1, y, z - 1) - at(x, y - 1, z - 1) +
                                  at(x - 1, y - 1, z - 1);
                }
    }

    double box(int x, int y, int z, int w) const {
        const int X = x + w, Y = y + w, Z = z + w;
        return at(X, Y, Z) - at(x, Y, Z) - at(X, y, Z) - at(X, Y, z) + at(x, y, Z) + at(x, Y, z) + at(X, y, z) -
               at(x, y, z);
    }

 private:
    double& at(int x, int y, int z) { return t_[static_cast<std::size_t>(x + sx_ * (y + sy_ * z))]; }
    double at(int x, int y, int z) const { return t_[static_cast<std::size_t>(x + sx_ * (y + sy_ * z))]; }

    int sx_, sy_;
    std::vector<double> t_;
};

}  // namespace

double ssim(const Volume& a, const Volume& b, double data_range) {
    if (!(a.grid() == b.grid())) throw ShapeError("ssim: volumes are on different grids");
    if (!(data_range > 0.0)) throw std::invalid_argument("ssim: data_range must be positive");
    const auto& g = a.grid();
    constexpr int w = kSsimWindow;
    if (g.nx < w || g.ny < w || g.nz < w) {
        throw ShapeError("ssim: volume " + std::to_string(g.nx) + "x" + std::to_string(g.ny) + "x" +
                         std::to_string(g.nz) + " is smaller than the " + std::to_string(w) + "^3 window");
    }
    auto fa = [&](int x, int y, int z) { return static_cast<double>(a.at(x, y, z)); };
    auto fb = [&](int x, int y, int z) { return static_cast<double>(b.at(x, y, z)); };
    Integral sa(g.nx, g.ny, g.nz), sb(g.nx, g.ny, g.nz), saa(g.nx, g.ny, g.nz), sbb(g.nx, g.ny, g.nz),
        sab(g.nx, g.ny, g.nz);
    sa.build(g.nx, g.ny, g.nz, fa);
    sb.build(g.nx, g.ny, g.nz, fb);
    saa.build(g.nx, g.ny, g.nz, [&](int x, int y, int z) { return fa(x, y, z) * fa(x, y, z); });
    sbb.build(g.nx, g.ny, g.nz, [&](int x, int y, int z) { return fb(x, y, z) * fb(x, y, z); });
    sab.build(g.nx, g.ny, g.nz, [&](int x, int y, int z) { return fa(x, y, z) * fb(x, y, z); });

    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    const double n = static_cast<double>(w) * w * w;
    double total = 0.0;
    std::int64_t count = 0;
    for (int z = 0; z + w <= g.nz; ++z)
        for (int y = 0; y + w <= g.ny; ++y)
            for (int x = 0; x + w <= g.nx; ++x) {
                const double ma = sa.box(x, y, z, w) / n;
                const double mb = sb.box(x, y, z, w) / n;
                const double va = saa.box(x, y, z, w) / n - ma * ma;
                const double vb = sbb.box(x, y, z, w) / n - mb * mb;
                const double cov = sab.box(x, y, z, w) / n - ma * mb;
                total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
    return total / static_cast<double>(count);
}

}  // namespace cbct::eval
