#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cbct/volume.hpp"

namespace cbct_test {

/// SSIM by explicit per-window sums (no integral images), 7^3 windows over
/// every valid position, population statistics.
inline double brute_ssim(const cbct::Volume& a, const cbct::Volume& b, double range) {
    const auto& g = a.grid();
    const int w = 7;
    const double c1 = (0.01 * range) * (0.01 * range), c2 = (0.03 * range) * (0.03 * range);
    double total = 0.0;
    std::int64_t count = 0;
    for (int z = 0; z + w <= g.nz; ++z)
        for (int y = 0; y + w <= g.ny; ++y)
            for (int x = 0; x + w <= g.nx; ++x) {
                double ma = 0, mb = 0;
                for (int k = 0; k < w; ++k)
                    for (int j = 0; j < w; ++j)
                        for (int i = 0; i < w; ++i) {
                            ma += a.at(x + i, y + j, z + k);
                            mb += b.at(x + i, y + j, z + k);
                        }
                const double n = w * w * w;
                ma /= n;
                mb /= n;
                double va = 0, vb = 0, cov = 0;
                for (int k = 0; k < w; ++k)
                    for (int j = 0; j < w; ++j)
                        for (int i = 0; i < w; ++i) {
                            const double da = a.at(x + i, y + j, z + k) - ma;
                            const double db = b.at(x + i, y + j, z + k) - mb;
                            va += da * da;
                            vb += db * db;
                            cov += da * db;
                        }
                va /= n;
                vb /= n;
                cov /= n;
                total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++count;
            }
    return total / static_cast<double>(count);
}

/// One-sided signed-rank p-value by enumerating all 2^n sign patterns of the
/// average-ranked |differences| (zeros removed). Returns NaN if n > 24.
inline double enumerate_wilcoxon(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> d;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] != y[i]) d.push_back(x[i] - y[i]);
    }
    const int n = static_cast<int>(d.size());
    if (n > 24) return std::nan("");
    std::vector<double> rank(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int below = 0, equal = 0;
        for (int j = 0; j < n; ++j) {
            if (std::abs(d[static_cast<std::size_t>(j)]) < std::abs(d[static_cast<std::size_t>(i)])) ++below;
            if (std::abs(d[static_cast<std::size_t>(j)]) == std::abs(d[static_cast<std::size_t>(i)])) ++equal;
        }
        rank[static_cast<std::size_t>(i)] = below + (equal + 1) / 2.0;
    }
    double observed = 0;
    for (int i = 0; i < n; ++i) {
        if (d[static_cast<std::size_t>(i)] > 0) observed += rank[static_cast<std::size_t>(i)];
    }
    std::int64_t hits = 0;
    for (std::int64_t mask = 0; mask < (std::int64_t{1} << n); ++mask) {
        double wplus = 0;
        for (int i = 0; i < n; ++i) {
            if (mask >> i & 1) wplus += rank[static_cast<std::size_t>(i)];
        }
        if (wplus >= observed - 1e-9) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(std::int64_t{1} << n);
}

}  // namespace cbct_test
