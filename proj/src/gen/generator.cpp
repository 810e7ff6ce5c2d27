#include <random>

#include "cbct/errors.hpp"
#include "cbct/gen/generator.hpp"

namespace cbct::inline CBCT_REAL_NS::gen {

ad::ParamStore build_unetr_params(const UNETRConfig& c, const VolumeGrid& grid, std::mt19937_64& rng);
ad::ParamStore build_unet3d_params(const UNet3DConfig& c, std::mt19937_64& rng);
ad::Var forward_unet3d(const GeneratorState& state);

namespace {

// Parameters and noise draw from separate streams of the run seed.
constexpr std::uint64_t kNoiseStream = 0x9E3779B97F4A7C15ULL;

}  // namespace

GeneratorState::GeneratorState(Architecture arch, UNETRConfig unetr, UNet3DConfig unet, VolumeGrid grid,
                               ad::ParamStore params, ad::Tensor noise, std::uint64_t seed)
    : arch_(arch),
      unetr_(std::move(unetr)),
      unet_(unet),
      grid_(grid),
      params_(std::move(params)),
      noise_(std::move(noise)),
      seed_(seed) {}

GeneratorState GeneratorState::clone() const {
    return GeneratorState(arch_, unetr_, unet_, grid_, params_.clone(), noise_, seed_);
}

ad::Tensor sample_noise(const VolumeGrid& grid, int channels, std::uint64_t seed) {
    if (channels < 1) throw std::invalid_argument("noise channels must be >= 1");
    std::mt19937_64 rng(seed);
    return ad::standard_normal({channels, grid.nz, grid.ny, grid.nx}, rng);
}

GeneratorState init_generator(const UNETRConfig& config, const VolumeGrid& grid, std::uint64_t seed) {
    config.validate_for(grid);
    std::mt19937_64 rng(seed);
    auto params = build_unetr_params(config, grid, rng);
    auto noise = sample_noise(grid, config.in_channels, seed ^ kNoiseStream);
    return GeneratorState(Architecture::unetr, config, UNet3DConfig{}, grid, std::move(params), std::move(noise), seed);
}

GeneratorState init_unet3d(const UNet3DConfig& config, const VolumeGrid& grid, std::uint64_t seed) {
    config.validate_for(grid);
    std::mt19937_64 rng(seed);
    auto params = build_unet3d_params(config, rng);
    auto noise = sample_noise(grid, config.in_channels, seed ^ kNoiseStream);
    return GeneratorState(Architecture::unet3d, UNETRConfig{}, config, grid, std::move(params), std::move(noise), seed);
}

ad::Var forward(const GeneratorState& state) {
    return state.architecture() == Architecture::unetr ? forward_unetr(state, {}) : forward_unet3d(state);
}

Volume generate(const GeneratorState& state) {
    ad::NoGradGuard no_grad;
    return to_volume(forward(state).value(), state.grid());
}

Volume generate_unet3d(const GeneratorState& state) {
    if (state.architecture() != Architecture::unet3d) throw std::invalid_argument("state is not a U-Net generator");
    return generate(state);
}

Volume to_volume(const ad::Tensor& t, const VolumeGrid& grid) {
    if (t.numel() != grid.voxel_count()) {
        throw ShapeError("tensor " + ad::shape_str(t.shape()) + " does not fit grid of " +
                         std::to_string(grid.voxel_count()) + " voxels");
    }
    std::vector<float> data(t.values().begin(), t.values().end());
    return Volume(grid, std::move(data));
}

ad::Tensor to_tensor(const Volume& v) {
    const auto& g = v.grid();
    return ad::Tensor({g.nz, g.ny, g.nx}, std::vector<ad::real>(v.data().begin(), v.data().end()));
}

}  // namespace cbct::inline CBCT_REAL_NS::gen
