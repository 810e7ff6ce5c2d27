#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "cbct/errors.hpp"
#include "cbct/eval/metrics.hpp"
#include "cbct/harness/harness.hpp"
#include "cbct/io.hpp"
#include "cbct/projector.hpp"

namespace cbct::harness {

namespace {

struct Common {
    std::uint64_t seed = 0;
    std::string config;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
    cmd->add_option("--seed", c.seed, "Seed for every random draw")->capture_default_str();
    cmd->add_option("--config", c.config, "INI config file")->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, out_help)->required();
}

HarnessConfig resolve(const Common& c) { return c.config.empty() ? HarnessConfig{} : load_config(c.config); }

template <class T>
void apply(std::optional<T> flag, T& field) {
    if (flag) field = *flag;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

std::filesystem::path prepare_file(const std::string& out) {
    std::filesystem::path p(out);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    return p;
}

VolumeGrid target_grid(const HarnessConfig& cfg, const std::string& like) {
    if (!like.empty()) return load_volume(like).grid();
    return make_cubic_grid(cfg.size, cfg.voxel_size);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Sparse-view cone-beam CT reconstruction with an untrained transformer prior"};
    app.require_subcommand(1);

    Common common;
    std::optional<std::string> kind, filter, mode, backend, arch;
    std::optional<int> size, views, iters, log_every, seeds, jobs;
    std::optional<double> voxel_size, arc, noise_sigma, lr, alpha;
    std::string in, like, ref, gt, recon, method = "recon", case_id = "0", axis = "z", diff, prefix = "slice",
                                         residual_csv;
    std::vector<int> indices;
    std::vector<std::string> inputs;

    auto* c_phantom = app.add_subcommand("phantom", "Write a synthetic phantom volume");
    add_common(c_phantom, common, "Output volume file");
    c_phantom->add_option("--kind", kind, "uniform_ball | shepp_logan_3d | nested_shells");
    c_phantom->add_option("--size", size, "Voxels per side");
    c_phantom->add_option("--voxel-size", voxel_size, "Voxel edge in mm");

    auto* c_project = app.add_subcommand("project", "Simulate cone-beam projections of a volume");
    add_common(c_project, common, "Output projection file");
    c_project->add_option("--in", in, "Input volume")->required()->check(CLI::ExistingFile);
    c_project->add_option("--views", views, "Number of views");
    c_project->add_option("--arc", arc, "Orbit arc in degrees");
    c_project->add_option("--noise-sigma", noise_sigma, "Additive Gaussian noise standard deviation");

    auto* c_subsample = app.add_subcommand("subsample", "Keep a uniform subset of views");
    add_common(c_subsample, common, "Output projection file");
    c_subsample->add_option("--in", in, "Input projections")->required()->check(CLI::ExistingFile);
    c_subsample->add_option("--views", views, "Views to keep")->required();

    auto* c_fdk = app.add_subcommand("fdk", "Filtered backprojection reconstruction");
    add_common(c_fdk, common, "Output volume file");
    c_fdk->add_option("--in", in, "Input projections")->required()->check(CLI::ExistingFile);
    c_fdk->add_option("--filter", filter, "ram_lak | hann_windowed_ram_lak");
    c_fdk->add_option("--size", size, "Voxels per side of the output grid");
    c_fdk->add_option("--voxel-size", voxel_size, "Voxel edge in mm");
    c_fdk->add_option("--like", like, "Take the output grid from this volume")->check(CLI::ExistingFile);

    auto* c_sirt = app.add_subcommand("sirt", "SIRT reconstruction");
    add_common(c_sirt, common, "Output volume file");
    c_sirt->add_option("--in", in, "Input projections")->required()->check(CLI::ExistingFile);
    c_sirt->add_option("--iters", iters, "Iterations");
    c_sirt->add_option("--size", size, "Voxels per side of the output grid");
    c_sirt->add_option("--voxel-size", voxel_size, "Voxel edge in mm");
    c_sirt->add_option("--like", like, "Take the output grid from this volume")->check(CLI::ExistingFile);
    c_sirt->add_option("--residual-csv", residual_csv, "Write per-iteration residuals here");

    auto* c_dip = app.add_subcommand("dip", "Untrained-generator reconstruction against an FDK reference");
    add_common(c_dip, common, "Output directory (recon.vol, runlog.csv)");
    c_dip->add_option("--ref", ref, "FDK reference volume")->required()->check(CLI::ExistingFile);
    c_dip->add_option("--gt", gt, "Ground truth for logged metrics")->check(CLI::ExistingFile);
    c_dip->add_option("--iters", iters, "Iterations");
    c_dip->add_option("--mode", mode, "w_zero | w_fixed | reweight");
    c_dip->add_option("--backend", backend, "gd | adam");
    c_dip->add_option("--lr", lr, "Learning rate");
    c_dip->add_option("--alpha", alpha, "Perceptual loss scale");
    c_dip->add_option("--log-every", log_every, "Logging interval");
    c_dip->add_option("--generator", arch, "unetr | unet3d");

    auto* c_eval = app.add_subcommand("eval", "PSNR/SSIM of a reconstruction against ground truth");
    add_common(c_eval, common, "Output CSV file");
    c_eval->add_option("--recon", recon, "Reconstruction")->required()->check(CLI::ExistingFile);
    c_eval->add_option("--gt", gt, "Ground truth")->required()->check(CLI::ExistingFile);
    c_eval->add_option("--method", method, "Method label")->capture_default_str();
    c_eval->add_option("--case", case_id, "Case label")->capture_default_str();

    auto* c_ablate = app.add_subcommand("ablate", "Compare the three loss weighting strategies");
    add_common(c_ablate, common, "Output directory");
    c_ablate->add_option("--ref", ref, "FDK reference (default: simulate from the config)")
        ->check(CLI::ExistingFile);
    c_ablate->add_option("--gt", gt, "Ground truth")->check(CLI::ExistingFile);
    c_ablate->add_option("--iters", iters, "Iterations per run");
    c_ablate->add_option("--seeds", seeds, "Consecutive seeds starting at --seed");
    c_ablate->add_option("--jobs", jobs, "Runs executed concurrently");
    c_ablate->add_option("--log-every", log_every, "Logging interval");

    auto* c_table = app.add_subcommand("table", "Aggregate eval CSVs into a summary table");
    add_common(c_table, common, "Output markdown file");
    c_table->add_option("inputs", inputs, "Eval CSV files")->required()->check(CLI::ExistingFile);

    auto* c_slices = app.add_subcommand("slices", "Export volume slices as PNG");
    add_common(c_slices, common, "Output directory");
    c_slices->add_option("--in", in, "Volume")->required()->check(CLI::ExistingFile);
    c_slices->add_option("--axis", axis, "x | y | z")->capture_default_str();
    c_slices->add_option("--indices", indices, "Slice indices")->required()->delimiter(',');
    c_slices->add_option("--diff", diff, "Write error maps against this volume")->check(CLI::ExistingFile);
    c_slices->add_option("--prefix", prefix, "File name prefix")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    HarnessConfig cfg;
    try {
        cfg = resolve(common);
        if (kind) cfg.phantom_kind = parse_phantom_kind(*kind);
        if (filter) cfg.filter = recon::parse_ramp_filter(*filter);
        if (mode) cfg.opt.mode = optim::parse_weight_mode(*mode);
        if (backend) cfg.opt.backend = optim::parse_backend(*backend);
        if (arch) {
            if (*arch == "unetr") cfg.architecture = gen::Architecture::unetr;
            else if (*arch == "unet3d") cfg.architecture = gen::Architecture::unet3d;
            else throw ConfigError("unknown generator '" + *arch + "'");
        }
        apply(size, cfg.size);
        apply(voxel_size, cfg.voxel_size);
        apply(arc, cfg.arc_deg);
        apply(noise_sigma, cfg.noise_sigma);
        apply(iters, app.got_subcommand(c_sirt) ? cfg.sirt_iters : cfg.opt.n_iters);
        apply(log_every, cfg.opt.log_every);
        apply(lr, cfg.opt.lr);
        apply(alpha, cfg.alpha);
        apply(seeds, cfg.ablate_seeds);
        apply(jobs, cfg.jobs);
        if (app.got_subcommand(c_project)) apply(views, cfg.full_views);
        cfg.opt.seed = common.seed;
        cfg.opt.validate();
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (app.got_subcommand(c_phantom)) {
            const VolumeGrid grid = make_cubic_grid(cfg.size, cfg.voxel_size);
            save_volume(make_phantom(cfg.phantom_kind, grid, common.seed), prepare_file(common.out));
        } else if (app.got_subcommand(c_project)) {
            const Volume v = load_volume(in);
            const ScanGeometry g = make_desk_geometry(v.grid(), cfg.full_views, cfg.arc_deg);
            save_projections(add_noise(forward_project(v, g), cfg.noise_sigma, common.seed), prepare_file(common.out));
        } else if (app.got_subcommand(c_subsample)) {
            save_projections(subsample_views(load_projections(in), *views), prepare_file(common.out));
        } else if (app.got_subcommand(c_fdk)) {
            const ProjectionSet p = load_projections(in);
            save_volume(recon::fdk_reconstruct(p, target_grid(cfg, like), cfg.filter), prepare_file(common.out));
        } else if (app.got_subcommand(c_sirt)) {
            const ProjectionSet p = load_projections(in);
            const auto r = recon::sirt_reconstruct(p, target_grid(cfg, like), cfg.sirt_iters);
            save_volume(r.volume, prepare_file(common.out));
            if (!residual_csv.empty()) {
                std::string text = "iter,residual,weighted_residual\n";
                for (std::size_t i = 0; i < r.residual.size(); ++i) {
                    char buf[96];
                    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", i, r.residual[i], r.weighted_residual[i]);
                    text += buf;
                }
                write_text(residual_csv, text);
            }
        } else if (app.got_subcommand(c_dip)) {
            const Volume fdk = load_volume(ref);
            double scale = 1.0;
            const Volume x_ref = normalise_reference(fdk, &scale);
            auto generator = make_generator(cfg, fdk.grid(), common.seed);
            optim::LossConfig loss_cfg;
            loss_cfg.alpha = static_cast<ad::real>(cfg.alpha);
            loss_cfg.extractor = make_extractor(cfg, common.seed);
            optim::DipExtras extras;
            if (!gt.empty()) extras.gt = load_volume(gt);
            extras.ref_scale = scale;
            extras.on_log = [](const optim::LogRow& r) {
                std::cerr << "iter " << r.iter << " loss " << r.total_loss << " psnr_ref " << r.psnr_ref << '\n';
            };
            auto result = optim::dip_reconstruct(x_ref, generator, loss_cfg, cfg.opt, extras);
            const std::filesystem::path dir(common.out);
            std::filesystem::create_directories(dir);
            save_volume(scale_volume(result.volume, static_cast<float>(scale)), dir / "recon.vol");
            result.log.write_csv(dir / "runlog.csv");
        } else if (app.got_subcommand(c_eval)) {
            const Volume r = clamp_volume(load_volume(recon), 0.0f, 1.0f);
            const Volume g = load_volume(gt);
            write_text(common.out, eval_csv({{method, case_id, eval::psnr(r, g), eval::ssim(r, g)}}));
        } else if (app.got_subcommand(c_ablate)) {
            Volume fdk;
            std::optional<Volume> truth;
            if (ref.empty()) {
                SyntheticCase c = make_synthetic_case(cfg, common.seed);
                fdk = std::move(c.fdk);
                truth = std::move(c.gt);
            } else {
                fdk = load_volume(ref);
            }
            if (!gt.empty()) truth = load_volume(gt);
            const auto runs = run_ablation(cfg, fdk, truth, common.seed);
            const std::filesystem::path dir(common.out);
            std::filesystem::create_directories(dir);
            for (const auto& r : runs) {
                r.log.write_csv(dir / ("runlog_" + optim::to_string(r.mode) + "_seed" + std::to_string(r.seed) + ".csv"));
            }
            write_text(dir / "summary.csv", ablation_summary_csv(runs));
        } else if (app.got_subcommand(c_table)) {
            std::vector<EvalRecord> records;
            for (const auto& path : inputs) {
                auto part = read_eval_csv(path);
                records.insert(records.end(), part.begin(), part.end());
            }
            write_text(common.out, summary_table(records));
        } else if (app.got_subcommand(c_slices)) {
            const Volume v = load_volume(in);
            std::optional<Volume> other;
            if (!diff.empty()) other = load_volume(diff);
            export_slices(v, parse_slice_axis(axis), indices, common.out, other ? &*other : nullptr, prefix);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace cbct::harness
