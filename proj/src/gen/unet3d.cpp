#include <stdexcept>

#include "cbct/errors.hpp"
#include "cbct/gen/generator.hpp"
#include "layers.hpp"

namespace cbct::inline CBCT_REAL_NS::gen {

using namespace detail;

void UNet3DConfig::validate() const {
    if (depth < 1) throw std::invalid_argument("U-Net depth must be >= 1");
    if (base_channels < 1) throw std::invalid_argument("U-Net base_channels must be >= 1");
    if (in_channels < 1) throw std::invalid_argument("U-Net in_channels must be >= 1");
    const int step = 1 << (depth - 1);
    if (patch < step || patch % step != 0) {
        throw std::invalid_argument("U-Net patch " + std::to_string(patch) + " must be divisible by 2^(depth-1) = " +
                                    std::to_string(step));
    }
}

void UNet3DConfig::validate_for(const VolumeGrid& grid) const {
    validate();
    grid.validate();
    if (grid.nx % patch || grid.ny % patch || grid.nz % patch) {
        throw ShapeError("patch " + std::to_string(patch) + " does not divide grid " + std::to_string(grid.nx) + "x" +
                         std::to_string(grid.ny) + "x" + std::to_string(grid.nz));
    }
}

namespace {

int width(const UNet3DConfig& c, int level) { return c.base_channels << level; }
std::string enc_name(int l) { return "enc" + std::to_string(l); }
std::string dec_name(int l) { return "dec" + std::to_string(l); }

}  // namespace

ad::ParamStore build_unet3d_params(const UNet3DConfig& c, std::mt19937_64& rng) {
    ad::ParamStore ps;
    for (int l = 0; l < c.depth; ++l) {
        add_conv_block(ps, enc_name(l), l == 0 ? c.in_channels : width(c, l - 1), width(c, l), rng);
    }
    for (int l = c.depth - 2; l >= 0; --l) {
        add_conv_transpose3d(ps, dec_name(l) + ".up", width(c, l + 1), width(c, l), rng);
        add_conv_block(ps, dec_name(l) + ".block", 2 * width(c, l), width(c, l), rng);
    }
    add_conv3d(ps, "head", width(c, 0), 1, 1, true, rng);
    return ps;
}

namespace {

Var unet_patch(const ad::ParamStore& ps, const UNet3DConfig& c, Var x) {
    std::vector<Var> skips;
    for (int l = 0; l < c.depth; ++l) {
        if (l > 0) x = ad::max_pool3d(x);
        x = conv_block(ps, enc_name(l), x);
        skips.push_back(x);
    }
    for (int l = c.depth - 2; l >= 0; --l) {
        x = up(ps, dec_name(l) + ".up", x);
        x = conv_block(ps, dec_name(l) + ".block", ad::concat({x, skips[static_cast<std::size_t>(l)]}, 0));
    }
    return ad::conv3d(x, ps.at("head.weight"), ps.at("head.bias"), {0, 0, 0});
}

}  // namespace

Var forward_unet3d(const GeneratorState& state) {
    const UNet3DConfig& c = state.unet_config();
    const VolumeGrid& grid = state.grid();
    const int p = c.patch;
    const std::int64_t p3 = std::int64_t{p} * p * p;

    Var tokens = ad::patchify_3d(Var::constant(state.noise()), p);
    const std::int64_t n = tokens.shape()[0];
    std::vector<Var> outs;
    outs.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        Var patch = ad::reshape(ad::slice0(tokens, i, i + 1), {c.in_channels, p, p, p});
        outs.push_back(ad::reshape(unet_patch(state.params(), c, patch), {1, p3}));
    }
    Var y = ad::unpatchify_3d(ad::concat(outs, 0), 1, {grid.nz, grid.ny, grid.nx}, p);
    return ad::reshape(y, {grid.nz, grid.ny, grid.nx});
}

}  // namespace cbct::inline CBCT_REAL_NS::gen
