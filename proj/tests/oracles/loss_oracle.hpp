#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace cbct_test {

/// Plain-loop recomputation of the multi-level loss in double precision.
/// Volumes are [nz][ny][nx]; DSConv weight [3][nx], bias [3]; extractor
/// weights per stage [out][in][3][3] with bias [out].
struct BruteExtractor {
    std::vector<std::vector<double>> weights, biases;
    std::vector<int> widths;
};

struct Image {
    int c = 0, h = 0, w = 0;
    std::vector<double> v;
    double& at(int ch, int y, int x) { return v[static_cast<std::size_t>((ch * h + y) * w + x)]; }
    double at(int ch, int y, int x) const { return v[static_cast<std::size_t>((ch * h + y) * w + x)]; }
};

inline Image brute_dsconv(const std::vector<double>& vol, int nx, int ny, int nz, const std::vector<double>& wt,
                          const std::vector<double>& b) {
    Image img{3, ny, nz, std::vector<double>(static_cast<std::size_t>(3 * ny * nz))};
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < ny; ++y)
            for (int z = 0; z < nz; ++z) {
                double acc = b[static_cast<std::size_t>(c)];
                for (int x = 0; x < nx; ++x)
                    acc += wt[static_cast<std::size_t>(c * nx + x)] *
                           vol[static_cast<std::size_t>((z * ny + y) * nx + x)];
                img.at(c, y, z) = acc;
            }
    return img;
}

inline Image brute_standardise(const Image& img, const Image& by, double eps = 1e-6) {
    Image out = img;
    const int n = by.h * by.w;
    for (int c = 0; c < img.c; ++c) {
        double m = 0, var = 0;
        for (int i = 0; i < n; ++i) m += by.v[static_cast<std::size_t>(c * n + i)];
        m /= n;
        for (int i = 0; i < n; ++i) var += std::pow(by.v[static_cast<std::size_t>(c * n + i)] - m, 2);
        const double sd = std::sqrt(var / n + eps);
        for (int i = 0; i < n; ++i) {
            auto& x = out.v[static_cast<std::size_t>(c * n + i)];
            x = (x - m) / sd;
        }
    }
    return out;
}

inline Image brute_conv_relu(const Image& in, const std::vector<double>& wt, const std::vector<double>& b, int out_c) {
    Image out{out_c, in.h, in.w, std::vector<double>(static_cast<std::size_t>(out_c * in.h * in.w))};
    for (int o = 0; o < out_c; ++o)
        for (int y = 0; y < in.h; ++y)
            for (int x = 0; x < in.w; ++x) {
                double acc = b[static_cast<std::size_t>(o)];
                for (int c = 0; c < in.c; ++c)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int yy = y + dy, xx = x + dx;
                            if (yy < 0 || yy >= in.h || xx < 0 || xx >= in.w) continue;
                            acc += in.at(c, yy, xx) *
                                   wt[static_cast<std::size_t>(((o * in.c + c) * 3 + dy + 1) * 3 + dx + 1)];
                        }
                out.at(o, y, x) = acc > 0 ? acc : 0;
            }
    return out;
}

inline Image brute_pool(const Image& in) {
    Image out{in.c, in.h / 2, in.w / 2, {}};
    out.v.resize(static_cast<std::size_t>(out.c * out.h * out.w));
    for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x)
                out.at(c, y, x) = std::max(std::max(in.at(c, 2 * y, 2 * x), in.at(c, 2 * y, 2 * x + 1)),
                                           std::max(in.at(c, 2 * y + 1, 2 * x), in.at(c, 2 * y + 1, 2 * x + 1)));
    return out;
}

/// VGG-11 feature stages; pooling after the 1st, 2nd, 4th and 6th relu.
inline std::vector<Image> brute_features(Image x, const BruteExtractor& fe) {
    std::vector<Image> taps;
    for (std::size_t i = 0; i < fe.widths.size(); ++i) {
        x = brute_conv_relu(x, fe.weights[i], fe.biases[i], fe.widths[i]);
        taps.push_back(x);
        if (i == 0 || i == 1 || i == 3 || i == 5) x = brute_pool(x);
    }
    return taps;
}

struct BruteLoss {
    double mse = 0, total = 0;
    std::vector<double> perceptual;
};

inline BruteLoss brute_total_loss(const std::vector<double>& x_ref, const std::vector<double>& x_gen, int nx, int ny,
                                  int nz, const std::vector<double>& w_ref, const std::vector<double>& b_ref,
                                  const std::vector<double>& w_gen, const std::vector<double>& b_gen,
                                  const BruteExtractor& fe, const std::vector<double>& w, double alpha) {
    BruteLoss out;
    for (std::size_t i = 0; i < x_ref.size(); ++i) out.mse += std::pow(x_ref[i] - x_gen[i], 2);
    out.mse /= static_cast<double>(x_ref.size());
    const Image ref = brute_dsconv(x_ref, nx, ny, nz, w_ref, b_ref);
    const Image gen = brute_dsconv(x_gen, nx, ny, nz, w_gen, b_gen);
    const auto fr = brute_features(brute_standardise(ref, ref), fe);
    const auto fg = brute_features(brute_standardise(gen, ref), fe);
    out.total = out.mse;
    for (std::size_t i = 0; i < fr.size(); ++i) {
        double s = 0;
        for (std::size_t j = 0; j < fr[i].v.size(); ++j) s += std::pow(fr[i].v[j] - fg[i].v[j], 2);
        out.perceptual.push_back(s / static_cast<double>(fr[i].v.size()));
        out.total += alpha * w[i] * out.perceptual.back();
    }
    return out;
}

}  // namespace cbct_test
