#include <atomic>
#include <charconv>
#include <cmath>
#include <random>
#include <thread>

#include "cbct/errors.hpp"
#include "cbct/harness/harness.hpp"
#include "cbct/projector.hpp"

namespace cbct::harness {

Volume normalise_reference(const Volume& fdk, double* scale) {
    const double s = fdk.max_value();
    if (!(s > 0.0) || !std::isfinite(s)) throw NumericalError("reference has no positive maximum");
    if (scale) *scale = s;
    return clamp_volume(scale_volume(fdk, static_cast<float>(1.0 / s)), 0.0f, 1.0f);
}

ProjectionSet add_noise(const ProjectionSet& p, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("noise sigma must be non-negative");
    ProjectionSet out = p;
    if (sigma == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, sigma);
    for (auto& v : out.data()) v = static_cast<float>(v + dist(rng));
    return out;
}

SyntheticCase make_synthetic_case(const HarnessConfig& cfg, std::uint64_t seed) {
    const VolumeGrid grid = make_cubic_grid(cfg.size, cfg.voxel_size);
    SyntheticCase c;
    c.gt = make_phantom(cfg.phantom_kind, grid, seed);
    const ScanGeometry geom = make_desk_geometry(grid, cfg.full_views, cfg.arc_deg);
    ProjectionSet full = add_noise(forward_project(c.gt, geom), cfg.noise_sigma, seed);
    c.sparse = subsample_views(full, cfg.views);
    c.fdk = recon::fdk_reconstruct(c.sparse, grid, cfg.filter);
    return c;
}

std::shared_ptr<const loss::FeatureExtractor> make_extractor(const HarnessConfig& cfg, std::uint64_t seed) {
    return std::make_shared<const loss::FeatureExtractor>(cfg.extractor_path.empty()
                                                              ? loss::FeatureExtractor::random(seed)
                                                              : loss::FeatureExtractor::load(cfg.extractor_path));
}

gen::GeneratorState make_generator(const HarnessConfig& cfg, const VolumeGrid& grid, std::uint64_t seed) {
    return cfg.architecture == gen::Architecture::unetr ? gen::init_generator(cfg.unetr, grid, seed)
                                                        : gen::init_unet3d(cfg.unet, grid, seed);
}

std::vector<AblationRun> run_ablation(const HarnessConfig& cfg, const Volume& fdk, const std::optional<Volume>& gt,
                                      std::uint64_t first_seed) {
    if (cfg.ablate_seeds < 1) throw std::invalid_argument("ablation needs at least one seed");
    double scale = 1.0;
    const Volume ref = normalise_reference(fdk, &scale);

    optim::LossConfig loss_cfg;
    loss_cfg.alpha = static_cast<ad::real>(cfg.alpha);
    loss_cfg.extractor = make_extractor(cfg, first_seed);

    const optim::WeightMode modes[] = {optim::WeightMode::w_zero, optim::WeightMode::w_fixed,
                                       optim::WeightMode::reweight};
    std::vector<AblationRun> runs;
    std::vector<gen::GeneratorState> gens;
    for (int s = 0; s < cfg.ablate_seeds; ++s) {
        const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(s);
        gen::GeneratorState base = make_generator(cfg, fdk.grid(), seed);
        for (auto m : modes) {
            runs.push_back({m, seed, {}, {}});
            gens.push_back(base.clone());
        }
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(runs.size());
    auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            try {
                optim::OptimizerConfig opt = cfg.opt;
                opt.mode = runs[i].mode;
                opt.seed = runs[i].seed;
                optim::DipExtras extras;
                extras.gt = gt;
                extras.ref_scale = scale;
                auto result = optim::dip_reconstruct(ref, gens[i], loss_cfg, opt, extras);
                runs[i].log = std::move(result.log);
                runs[i].volume = scale_volume(result.volume, static_cast<float>(scale));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(runs.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return runs;
}

namespace {

void put(std::string& out, double v) {
    if (std::isnan(v)) {
        out += "nan";
    } else if (std::isinf(v)) {
        out += v > 0 ? "inf" : "-inf";
    } else {
        char buf[32];
        auto r = std::to_chars(buf, buf + sizeof buf, v);
        out.append(buf, r.ptr);
    }
}

}  // namespace

std::string ablation_summary_csv(const std::vector<AblationRun>& runs) {
    std::string out = "mode,seed,dips,final_psnr_ref,final_ssim_ref,final_psnr_gt,final_ssim_gt\n";
    auto row = [&](const std::string& mode, const std::string& seed, const std::array<double, 5>& v) {
        out += mode + "," + seed;
        for (double x : v) {
            out += ',';
            put(out, x);
        }
        out += '\n';
    };
    auto values = [](const AblationRun& r) {
        const double nan = std::nan("");
        if (r.log.rows.empty()) return std::array<double, 5>{double(r.log.dip_count()), nan, nan, nan, nan};
        const auto& last = r.log.rows.back();
        return std::array<double, 5>{double(r.log.dip_count()), last.psnr_ref, last.ssim_ref, last.psnr_gt,
                                     last.ssim_gt};
    };
    for (const auto& r : runs) row(optim::to_string(r.mode), std::to_string(r.seed), values(r));
    for (auto m : {optim::WeightMode::w_zero, optim::WeightMode::w_fixed, optim::WeightMode::reweight}) {
        std::array<double, 5> acc{};
        int n = 0;
        for (const auto& r : runs) {
            if (r.mode != m) continue;
            const auto v = values(r);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
            ++n;
        }
        if (n == 0) continue;
        for (auto& a : acc) a /= n;
        row(optim::to_string(m), "mean", acc);
    }
    return out;
}

}  // namespace cbct::harness
