#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cbct/classical.hpp"
#include "cbct/gen/generator.hpp"
#include "cbct/optim/optim.hpp"
#include "cbct/phantom.hpp"
#include "cbct/volume.hpp"

namespace cbct::harness {

/// Every tunable of the command-line tools. Defaults are the desk-scale
/// experiment; a config file overrides them and command-line flags override
/// the file.
struct HarnessConfig {
    // [phantom]
    PhantomKind phantom_kind = PhantomKind::NestedShells;
    int size = 48;
    double voxel_size = 1.0;
    // [scan]
    int full_views = 180;
    int views = 20;
    double arc_deg = 360.0;
    double noise_sigma = 0.0;
    // [fdk]
    recon::RampFilter filter = recon::RampFilter::RamLak;
    // [sirt]
    int sirt_iters = 200;
    // [generator]
    gen::Architecture architecture = gen::Architecture::unetr;
    gen::UNETRConfig unetr = gen::UNETRConfig::desk();
    gen::UNet3DConfig unet;
    // [dip]
    optim::OptimizerConfig opt = default_optimizer();
    double alpha = 1.0;
    std::string extractor_path;
    // [ablate]
    int ablate_seeds = 3;
    int jobs = 1;

    static optim::OptimizerConfig default_optimizer();
};

/// Reads an INI file ("key = value" lines under "[section]" headers) into
/// `base`. Unknown sections or keys and unparsable values throw ConfigError
/// naming the offending key.
HarnessConfig load_config(const std::filesystem::path& path, HarnessConfig base = {});
/// The accepted sections and keys with their types, one "section.key: type" per line.
std::string config_schema();

/// FDK reference scaled into [0, 1]: clamp(fdk / s, 0, 1) with s = max(fdk).
/// Throws NumericalError if the maximum is not positive.
Volume normalise_reference(const Volume& fdk, double* scale);

/// Additive i.i.d. Gaussian noise with standard deviation sigma.
ProjectionSet add_noise(const ProjectionSet& p, double sigma, std::uint64_t seed);

/// Phantom -> full projections -> sparse subset -> FDK, all from `cfg`.
struct SyntheticCase {
    Volume gt;
    ProjectionSet sparse;
    Volume fdk;
};
SyntheticCase make_synthetic_case(const HarnessConfig& cfg, std::uint64_t seed);

/// Frozen extractor from cfg.extractor_path, or seeded random weights.
std::shared_ptr<const loss::FeatureExtractor> make_extractor(const HarnessConfig& cfg, std::uint64_t seed);

gen::GeneratorState make_generator(const HarnessConfig& cfg, const VolumeGrid& grid, std::uint64_t seed);

struct AblationRun {
    optim::WeightMode mode;
    std::uint64_t seed;
    optim::RunLog log;
    Volume volume;
};

/// Runs w_zero, w_fixed and reweight for each seed. Within a seed every mode
/// starts from the same generator weights and noise tensor. With jobs > 1 the
/// runs execute on separate threads; results do not depend on jobs.
std::vector<AblationRun> run_ablation(const HarnessConfig& cfg, const Volume& fdk, const std::optional<Volume>& gt,
                                      std::uint64_t first_seed);

/// mode,seed,dips,final_psnr_ref,final_ssim_ref,final_psnr_gt,final_ssim_gt
/// followed by one mean row per mode (seed column "mean").
std::string ablation_summary_csv(const std::vector<AblationRun>& runs);

enum class SliceAxis { x, y, z };
SliceAxis parse_slice_axis(std::string_view s);

/// Writes one 8-bit grayscale PNG per index, named <prefix>_<axis><index>.png.
/// Values are clipped to [0, 1] and mapped to 0..255. With `reference`, the
/// image is the error map |v - reference| / max|v - reference| over the
/// whole volume (all black when the volumes agree). Returns the written
/// paths. Throws std::out_of_range for an index outside the volume.
std::vector<std::filesystem::path> export_slices(const Volume& v, SliceAxis axis, const std::vector<int>& indices,
                                                 const std::filesystem::path& out_dir,
                                                 const Volume* reference = nullptr,
                                                 const std::string& prefix = "slice");

/// 8-bit grayscale pixels of one slice, row-major, before PNG encoding.
std::vector<std::uint8_t> slice_pixels(const Volume& v, SliceAxis axis, int index, const Volume* reference,
                                       int* width, int* height);

/// One evaluation record as written by the `eval` command.
struct EvalRecord {
    std::string method;
    std::string case_id;
    double psnr = 0;
    double ssim = 0;
};

std::string eval_csv(const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_eval_csv(const std::filesystem::path& path);

/// Markdown report: per-method mean +- sample std of PSNR and SSIM, then a
/// one-sided Wilcoxon p-value for every ordered method pair over the cases
/// both methods share. Pairs the test rejects are reported with the reason.
std::string summary_table(const std::vector<EvalRecord>& records);

/// Entry point of the cbct tool. Returns the process exit code:
/// 0 success, 1 usage error, 2 runtime error.
int run_cli(int argc, const char* const* argv);

}  // namespace cbct::harness
