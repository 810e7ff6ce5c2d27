#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbct/ad/param_store.hpp"
#include "cbct/gen/generator.hpp"
#include "cbct/loss/loss.hpp"
#include "cbct/volume.hpp"

namespace cbct::inline CBCT_REAL_NS::optim {

enum class Backend { gd, adam };
enum class WeightMode { w_zero, w_fixed, reweight };

Backend parse_backend(std::string_view s);
WeightMode parse_weight_mode(std::string_view s);
std::string to_string(Backend b);
std::string to_string(WeightMode m);

struct OptimizerConfig {
    double lr = 1e-3;
    /// Decoupled weight decay on the network and DSConv weights (never on w).
    double decay = 1e-5;
    int n_iters = 2000;
    Backend backend = Backend::adam;
    WeightMode mode = WeightMode::reweight;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int log_every = 1;
    std::uint64_t seed = 0;
    /// Rescale the gradient of w to norm <= w_grad_clip before each update.
    bool clip_w_grad = false;
    double w_grad_clip = 1.0;

    void validate() const;
};

/// Clip to >= 0, then divide by the sum; uniform 1/K if the clipped sum is 0.
std::vector<ad::real> reweight_step(std::span<const ad::real> w);

/// p -= lr * (g + decay * p).
void gd_update(ad::Tensor& param, const ad::Tensor& grad, double lr, double decay = 0.0);

struct AdamState {
    ad::Tensor m, v;
    std::int64_t t = 0;
};

/// AdamW: p *= 1 - lr * decay, then the bias-corrected Adam step.
void adam_update(ad::Tensor& param, const ad::Tensor& grad, AdamState& state, const OptimizerConfig& cfg,
                 double decay);

/// Backend state for every parameter of one store.
class StoreOptimizer {
 public:
    StoreOptimizer(const OptimizerConfig& cfg, double decay) : cfg_(cfg), decay_(decay) {}
    /// Updates every trainable parameter from its gradient slot.
    void step(ad::ParamStore& store);

 private:
    OptimizerConfig cfg_;
    double decay_;
    std::vector<AdamState> states_;
};

struct LogRow {
    int iter = 0;
    double total_loss = 0, mse = 0;
    std::vector<double> perceptual;
    std::vector<double> w;
    double psnr_ref = 0, ssim_ref = 0;
    /// NaN when no ground truth was supplied.
    double psnr_gt = 0, ssim_gt = 0;
    double ref_scale = 1;
};

struct RunLog {
    int k = loss::FeatureExtractor::kTaps;
    std::vector<LogRow> rows;
    std::vector<std::string> warnings;

    std::string csv() const;
    void write_csv(const std::filesystem::path& path) const;
    /// Drops of more than threshold_db in psnr_ref between consecutive rows.
    int dip_count(double threshold_db = 0.5) const;
};

struct LossConfig {
    ad::real alpha = 1;
    /// Shared frozen extractor; built from the run seed when null.
    std::shared_ptr<const loss::FeatureExtractor> extractor;
};

struct DipExtras {
    std::optional<Volume> gt;
    /// Maps [0, 1]-normalised outputs back to the units of gt.
    double ref_scale = 1.0;
    std::function<void(const LogRow&)> on_log;
};

struct DipResult {
    Volume volume;
    RunLog log;
};

/// Optimises the generator weights, both DSConvs and (in reweight mode) w
/// against x_ref, which must be normalised to [0, 1] on the generator grid.
/// Rows are logged every log_every iterations plus one final row (iter =
/// n_iters) for the returned volume. Throws NumericalError naming the first
/// non-finite loss term.
DipResult dip_reconstruct(const Volume& x_ref, gen::GeneratorState& gen, const LossConfig& loss_cfg,
                          const OptimizerConfig& opt, const DipExtras& extras = {});

}  // namespace cbct::inline CBCT_REAL_NS::optim
