#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbct/ad/ops.hpp"
#include "cbct/ad/param_store.hpp"
#include "cbct/geometry.hpp"
#include "cbct/volume.hpp"

namespace cbct::inline CBCT_REAL_NS::gen {

/// Transformer-encoder / convolutional-decoder generator. With
/// S = log2(patch), the decoder works on S + 1 resolution levels
/// (level l is grid / 2^l); decoder_channels[l] is the width at level l.
struct UNETRConfig {
    int patch = 8;
    int embed_dim = 96;
    int n_heads = 4;
    int n_blocks = 4;
    int mlp_dim = 192;
    std::vector<int> decoder_channels{8, 16, 32, 64};
    int in_channels = 16;

    /// Throws std::invalid_argument.
    void validate() const;
    /// Also throws ShapeError if patch does not divide every grid dimension.
    void validate_for(const VolumeGrid& grid) const;

    int levels() const;  // S
    /// 1-based block index feeding skip tap k (k = 1..4).
    int tap_block(int k) const;
    int tap_level(int k) const;

    static UNETRConfig desk();
    /// Patch 16, embed 768, 12 heads, 12 blocks, MLP 3072.
    static UNETRConfig full_scale();
};

/// Plain 3D U-Net applied independently to cubic patches of the noise input.
struct UNet3DConfig {
    int patch = 16;
    int base_channels = 32;
    int depth = 3;
    int in_channels = 16;

    void validate() const;
    void validate_for(const VolumeGrid& grid) const;
};

enum class Architecture { unetr, unet3d };

/// The network, its weights and its fixed noise input for one run.
class GeneratorState {
 public:
    GeneratorState(Architecture arch, UNETRConfig unetr, UNet3DConfig unet, VolumeGrid grid,
                   ad::ParamStore params, ad::Tensor noise, std::uint64_t seed);

    /// Independent copy; copying the object itself shares the weights.
    GeneratorState clone() const;

    Architecture architecture() const { return arch_; }
    const UNETRConfig& unetr_config() const { return unetr_; }
    const UNet3DConfig& unet_config() const { return unet_; }
    const VolumeGrid& grid() const { return grid_; }
    std::uint64_t seed() const { return seed_; }

    ad::ParamStore& params() { return params_; }
    const ad::ParamStore& params() const { return params_; }
    /// [in_channels, nz, ny, nx]; never modified after construction.
    const ad::Tensor& noise() const { return noise_; }

 private:
    Architecture arch_;
    UNETRConfig unetr_;
    UNet3DConfig unet_;
    VolumeGrid grid_;
    ad::ParamStore params_;
    ad::Tensor noise_;
    std::uint64_t seed_;
};

/// i.i.d. N(0, 1), shape [channels, nz, ny, nx].
ad::Tensor sample_noise(const VolumeGrid& grid, int channels, std::uint64_t seed);

GeneratorState init_generator(const UNETRConfig& config, const VolumeGrid& grid, std::uint64_t seed);
GeneratorState init_unet3d(const UNet3DConfig& config, const VolumeGrid& grid, std::uint64_t seed);

/// Differentiable forward pass, output [nz, ny, nx].
ad::Var forward(const GeneratorState& state);
/// Same pass, reordering the patch tokens by `token_order` right after the
/// patch embedding. Exposed to check that position information is used.
ad::Var forward_unetr(const GeneratorState& state, const std::vector<int>& token_order);

/// Runs forward without recording a graph.
Volume generate(const GeneratorState& state);
Volume generate_unet3d(const GeneratorState& state);

Volume to_volume(const ad::Tensor& t, const VolumeGrid& grid);
ad::Tensor to_tensor(const Volume& v);

}  // namespace cbct::inline CBCT_REAL_NS::gen
