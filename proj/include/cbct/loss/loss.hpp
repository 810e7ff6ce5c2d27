#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cbct/ad/ops.hpp"
#include "cbct/ad/param_store.hpp"
#include "cbct/geometry.hpp"

namespace cbct::inline CBCT_REAL_NS::loss {

/// Dimension-shrinkage convolution: collapses the x axis (N1) of a
/// [nz, ny, nx] volume into 3 channels with a full-extent kernel per output
/// channel. Parameters "weight" [3, nx] and "bias" [3].
struct DSConv {
    ad::ParamStore params;
    int n1 = 0;
};

DSConv make_dsconv(const VolumeGrid& grid, std::uint64_t seed);

/// v [nz, ny, nx] -> [3, ny, nz]. Throws ShapeError on any other input shape.
ad::Var dsconv_apply(const DSConv& d, const ad::Var& v);

/// Frozen VGG-11 topology on 3-channel images. Taps are the 8 relu outputs;
/// 2x2 max pooling follows taps 1, 2, 4 and 6 (the trailing pool of the
/// classifier network contributes no tap and is omitted).
/// Checkpoint tensors: conv1.weight [64, 3, 3, 3], conv1.bias [64], ...,
/// conv8.weight [512, 512, 3, 3], conv8.bias [512].
class FeatureExtractor {
 public:
    static constexpr int kTaps = 8;
    static constexpr std::array<int, kTaps> kWidths{64, 128, 256, 256, 512, 512, 512, 512};
    static constexpr int kMinSide = 32;

    /// Glorot-normal weights, zero biases.
    static FeatureExtractor random(std::uint64_t seed);
    static FeatureExtractor load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    const ad::ParamStore& params() const { return params_; }
    /// Unit tests zero the biases through this.
    ad::ParamStore& mutable_params() { return params_; }

    /// img [3, H, W] with H, W >= kMinSide.
    std::vector<ad::Var> extract(const ad::Var& img) const;

 private:
    explicit FeatureExtractor(ad::ParamStore params);
    ad::ParamStore params_;
};

/// The K-vector w (a probability vector outside of mid-update states) and the
/// perceptual-term scale alpha.
struct LossWeights {
    std::vector<ad::real> w;
    ad::real alpha = 1;

    static LossWeights uniform(int k, ad::real alpha = 1);
};

struct LossTerms {
    ad::Var total;
    ad::Var mse;
    /// One scalar per tap; empty when not computed.
    std::vector<ad::Var> perceptual;
};

/// Per-tap mean squared feature differences between the reference path
/// f(std(C_ref(x_ref))) and the generated path f(std(C_gen(x_gen))), where
/// both images are standardised per channel by the statistics of the
/// reference-path image.
std::vector<ad::Var> perceptual_terms(const ad::Var& x_ref, const ad::Var& x_gen, const DSConv& d_ref,
                                      const DSConv& d_gen, const FeatureExtractor& fe);

/// mse(x_ref, x_gen) + alpha * sum_i w_i * perceptual_i. With alpha == 0 the
/// total is the MSE node itself and no perceptual graph is built.
/// w must have kTaps entries.
LossTerms total_loss(const ad::Var& x_ref, const ad::Var& x_gen, const DSConv& d_ref, const DSConv& d_gen,
                     const FeatureExtractor& fe, const ad::Var& w, ad::real alpha);

}  // namespace cbct::inline CBCT_REAL_NS::loss
