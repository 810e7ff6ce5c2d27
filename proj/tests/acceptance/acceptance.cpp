// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset. Exit status is non-zero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "cbct/classical.hpp"
#include "cbct/eval/metrics.hpp"
#include "cbct/harness/harness.hpp"
#include "cbct/phantom.hpp"
#include "cbct/projector.hpp"
#include "metric_oracles.hpp"

bool run_gradient_criterion(std::string* detail, double* seconds);

namespace {

using namespace cbct;
namespace fs = std::filesystem;

// Tolerances and frozen thresholds.
constexpr double kAdjointTol = 1e-4;
constexpr int kAdjointInstances = 20;
constexpr double kSimplexSumTol = 1e-6;
constexpr double kBallPsnrThreshold = 24.49;  // 64^3 ball, 180 views: measured 24.9978 dB minus 0.5 dB
constexpr int kSirtIters = 200;
constexpr double kSirtRelSlack = 1e-6;  // float accumulation in the residual norm
constexpr int kDipIters = 300;
constexpr double kDipMarginDb = 0.3;
constexpr int kAblationSeeds = 3;
constexpr int kDipLogEvery = 10;
constexpr double kDipThresholdDb = 0.5;
constexpr double kSsimTol = 1e-4;
constexpr int kSsimPairs = 10;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* spec, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, spec, args...);
    return buf;
}

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

Volume random_volume(const VolumeGrid& g, std::uint64_t seed, float lo, float hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> d(lo, hi);
    Volume v(g);
    for (auto& x : v.data()) x = d(rng);
    return v;
}

double psnr_vs_gt(const Volume& recon, const Volume& gt) { return eval::psnr(clamp_volume(recon, 0, 1), gt); }

Outcome adjoint() {
    const VolumeGrid grid = make_cubic_grid(16, 1.0);
    const ScanGeometry g = make_circular_geometry(40, 60, 24, 24, 1.5, 8, 360);
    double worst = 0;
    for (int s = 0; s < kAdjointInstances; ++s) {
        const Volume x = random_volume(grid, 1000 + s, -1, 1);
        ProjectionSet y(g);
        std::mt19937_64 rng(2000 + s);
        std::uniform_real_distribution<float> d(-1, 1);
        for (auto& v : y.data()) v = d(rng);
        const auto ax = forward_project(x, g);
        const auto aty = back_project(y, grid);
        const double defect = std::abs(dot(ax.data(), y.data()) - dot(x.data(), aty.data())) /
                              (std::sqrt(dot(ax.data(), ax.data())) * std::sqrt(dot(y.data(), y.data())));
        worst = std::max(worst, defect);
    }
    return {worst <= kAdjointTol, fmt("%d instances, worst relative defect %.3g (tol %.0e)", kAdjointInstances,
                                      worst, kAdjointTol)};
}

Outcome gradients() {
    Outcome o;
    double seconds = 0;
    o.pass = run_gradient_criterion(&o.detail, &seconds);
    o.detail += fmt(" (rtol 1e-3, atol 1e-5, double precision, %.0f s)", seconds);
    return o;
}

Outcome fdk_ball() {
    const VolumeGrid grid = make_cubic_grid(64, 1.0);
    const Volume gt = make_phantom(PhantomKind::UniformBall, grid, 0);
    const auto full = forward_project(gt, make_desk_geometry(grid, 180, 360));
    const double p180 = psnr_vs_gt(recon::fdk_reconstruct(full, grid, recon::RampFilter::RamLak), gt);
    const double p20 =
        psnr_vs_gt(recon::fdk_reconstruct(subsample_views(full, 20), grid, recon::RampFilter::RamLak), gt);
    return {p180 > kBallPsnrThreshold && p20 < p180,
            fmt("180 views %.4f dB (threshold %.2f), 20 views %.4f dB", p180, kBallPsnrThreshold, p20)};
}

Outcome sirt() {
    const harness::HarnessConfig cfg;
    const VolumeGrid grid = make_cubic_grid(cfg.size, cfg.voxel_size);
    const Volume gt = make_phantom(cfg.phantom_kind, grid, 0);
    const auto y = forward_project(gt, make_desk_geometry(grid, cfg.views, cfg.arc_deg));
    const auto r = recon::sirt_reconstruct(y, grid, kSirtIters);
    int rises = 0, weighted_rises = 0;
    for (std::size_t k = 1; k < r.residual.size(); ++k) {
        rises += r.residual[k] > r.residual[k - 1] * (1 + kSirtRelSlack);
        weighted_rises += r.weighted_residual[k] > r.weighted_residual[k - 1] * (1 + kSirtRelSlack);
    }
    return {rises == 0 && weighted_rises == 0,
            fmt("%d iterations on %d^3 %s, %d views: residual %.4g -> %.4g, increases %d (weighted %d), "
                "relative slack %.0e",
                kSirtIters, cfg.size, std::string(to_string(cfg.phantom_kind)).c_str(), cfg.views,
                r.residual.front(), r.residual.back(), rises, weighted_rises, kSirtRelSlack)};
}

// Desk-scale DIP experiment shared by criteria 3, 6 and 7. Every run logs
// every iteration; dip counts use the rows at the harness logging interval.
struct DipExperiment {
    double fdk_psnr_gt = 0;
    std::map<std::pair<int, optim::WeightMode>, optim::RunLog> logs;
    double seconds = 0;
};

const DipExperiment& dip_experiment() {
    static const DipExperiment e = [] {
        const auto t0 = std::chrono::steady_clock::now();
        DipExperiment out;
        harness::HarnessConfig cfg;
        cfg.opt.n_iters = kDipIters;
        cfg.opt.log_every = 1;
        const auto c = harness::make_synthetic_case(cfg, 0);
        out.fdk_psnr_gt = psnr_vs_gt(c.fdk, c.gt);
        double scale = 1.0;
        const Volume ref = harness::normalise_reference(c.fdk, &scale);
        optim::LossConfig loss_cfg;
        loss_cfg.alpha = static_cast<ad::real>(cfg.alpha);
        loss_cfg.extractor = harness::make_extractor(cfg, 0);
        for (int s = 0; s < kAblationSeeds; ++s) {
            const auto base = harness::make_generator(cfg, c.gt.grid(), static_cast<std::uint64_t>(s));
            for (auto mode : {optim::WeightMode::reweight, optim::WeightMode::w_fixed}) {
                auto g = base.clone();
                optim::OptimizerConfig opt = cfg.opt;
                opt.mode = mode;
                opt.seed = static_cast<std::uint64_t>(s);
                optim::DipExtras extras;
                extras.gt = c.gt;
                extras.ref_scale = scale;
                auto r = optim::dip_reconstruct(ref, g, loss_cfg, opt, extras);
                std::fprintf(stderr, "  dip seed %d %s: psnr_gt %.3f dB, psnr_ref %.3f dB\n", s,
                             optim::to_string(mode).c_str(), r.log.rows.back().psnr_gt,
                             r.log.rows.back().psnr_ref);
                out.logs[{s, mode}] = std::move(r.log);
            }
        }
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }();
    return e;
}

int dips_at_interval(const optim::RunLog& log) {
    optim::RunLog thinned;
    for (const auto& r : log.rows) {
        if (r.iter % kDipLogEvery == 0 || r.iter == kDipIters) thinned.rows.push_back(r);
    }
    return thinned.dip_count(kDipThresholdDb);
}

Outcome simplex() {
    const auto& log = dip_experiment().logs.at({0, optim::WeightMode::reweight});
    double worst_min = 1, worst_sum = 0, min_loss = 1e300;
    for (const auto& r : log.rows) {
        double sum = 0;
        for (double w : r.w) {
            worst_min = std::min(worst_min, w);
            sum += w;
        }
        worst_sum = std::max(worst_sum, std::abs(sum - 1));
        min_loss = std::min(min_loss, r.total_loss);
    }
    const bool complete = static_cast<int>(log.rows.size()) == kDipIters + 1;
    return {complete && worst_min >= 0 && worst_sum <= kSimplexSumTol && min_loss >= 0,
            fmt("%zu logged steps, min w %.3g, max |sum w - 1| %.3g (tol %.0e), min total loss %.4g", log.rows.size(),
                worst_min, worst_sum, kSimplexSumTol, min_loss)};
}

Outcome dip_trend() {
    const auto& e = dip_experiment();
    const auto& log = e.logs.at({0, optim::WeightMode::reweight});
    const double final_gt = log.rows.back().psnr_gt;
    const double first_ref = log.rows.front().psnr_ref, final_ref = log.rows.back().psnr_ref;
    return {final_gt > e.fdk_psnr_gt + kDipMarginDb && final_ref > first_ref,
            fmt("reweight T=%d vs GT %.3f dB, FDK vs GT %.3f dB, required margin +%.1f dB; psnr_ref %.3f -> %.3f",
                kDipIters, final_gt, e.fdk_psnr_gt, kDipMarginDb, first_ref, final_ref)};
}

Outcome ablation_stability() {
    const auto& e = dip_experiment();
    double reweight = 0, fixed = 0;
    std::string counts;
    for (int s = 0; s < kAblationSeeds; ++s) {
        const int r = dips_at_interval(e.logs.at({s, optim::WeightMode::reweight}));
        const int f = dips_at_interval(e.logs.at({s, optim::WeightMode::w_fixed}));
        reweight += r;
        fixed += f;
        counts += fmt(" seed%d %d/%d", s, r, f);
    }
    reweight /= kAblationSeeds;
    fixed /= kAblationSeeds;
    return {reweight <= fixed,
            fmt("mean dips reweight %.2f vs w_fixed %.2f (reweight/w_fixed:%s; drop > %.1f dB every %d iters; "
                "DIP runs took %.0f s)",
                reweight, fixed, counts.c_str(), kDipThresholdDb, kDipLogEvery, e.seconds)};
}

Outcome metrics_oracle() {
    double worst = 0;
    for (int i = 0; i < kSsimPairs; ++i) {
        VolumeGrid g;
        g.nx = 9 + i % 3;
        g.ny = 10 + i % 4;
        g.nz = 8 + i % 5;
        g.voxel_size = 1.0;
        const Volume a = random_volume(g, 300 + i, 0, 1);
        Volume b = a;
        std::mt19937_64 rng(400 + i);
        std::normal_distribution<float> n(0, 0.1f + 0.05f * i);
        for (auto& x : b.data()) x = std::clamp(x + n(rng), 0.0f, 1.0f);
        worst = std::max(worst, std::abs(eval::ssim(a, b) - cbct_test::brute_ssim(a, b, 1.0)));
    }
    const std::vector<double> x{3, 5, 2, 8, 7}, y{1, 1, 1, 1, 1};
    const double p = eval::wilcoxon_one_sided(x, y);
    return {worst <= kSsimTol && p == 1.0 / 32.0,
            fmt("SSIM worst |diff| %.3g over %d pairs (tol %.0e); Wilcoxon n=5 all positive p = %.17g", worst,
                kSsimPairs, kSsimTol, p)};
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "cbct_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "toy.ini");
        cfg << "[phantom]\nkind = shepp_logan_3d\nsize = 32\n"
               "[scan]\nfull_views = 60\nviews = 12\n"
               "[unetr]\npatch = 8\nembed_dim = 16\nn_heads = 2\nn_blocks = 2\nmlp_dim = 32\nin_channels = 4\n"
               "decoder_channels = 4, 4, 8, 8\n"
               "[dip]\niters = 30\nlog_every = 5\n"
               "[ablate]\nseeds = 2\n";
    }
    for (const char* run : {"a", "b"}) {
        const std::string cmd = std::string("\"") + CBCT_TOOL_PATH + "\" ablate --seed 11 --config \"" +
                                (dir / "toy.ini").string() + "\" --out \"" + (dir / run).string() + "\"";
        if (std::system(cmd.c_str()) != 0) return {false, "ablate invocation failed: " + cmd};
    }
    int files = 0, differing = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        if (entry.path().extension() != ".csv") continue;
        ++files;
        const fs::path other = dir / "b" / entry.path().filename();
        if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) ++differing;
    }
    int files_b = 0;
    for (const auto& entry : fs::directory_iterator(dir / "b")) files_b += entry.path().extension() == ".csv";
    return {files == 7 && files_b == files && differing == 0,
            fmt("two ablate invocations (2 seeds x 3 modes, T=30, 32^3): %d CSVs, %d differ", files, differing)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"projector adjoint", adjoint},
        {"gradient suite", gradients},
        {"simplex invariant", simplex},
        {"FDK sanity", fdk_ball},
        {"SIRT monotonicity", sirt},
        {"DIP trend", dip_trend},
        {"ablation stability", ablation_stability},
        {"metrics oracle", metrics_oracle},
        {"determinism", determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("CRITERION %d %s %s: %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first,
                    o.detail.c_str(), s);
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
