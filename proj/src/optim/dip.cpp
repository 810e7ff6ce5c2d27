#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "cbct/errors.hpp"
#include "cbct/eval/metrics.hpp"
#include "cbct/optim/optim.hpp"

namespace cbct::inline CBCT_REAL_NS::optim {

namespace {

std::uint64_t splitmix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void require_finite(int iter, const char* term, double v) {
    if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "non-finite loss at iteration " << iter << ": term " << term << " = " << v;
        throw NumericalError(msg.str());
    }
}

void check_terms(int iter, const loss::LossTerms& t) {
    require_finite(iter, "mse", t.mse.item());
    for (std::size_t i = 0; i < t.perceptual.size(); ++i) {
        const std::string name = "perc_" + std::to_string(i + 1);
        require_finite(iter, name.c_str(), t.perceptual[i].item());
    }
    require_finite(iter, "total", t.total.item());
}

void fill_metrics(LogRow& row, const ad::Tensor& x, const Volume& x_ref, const DipExtras& extras) {
    Volume out = gen::to_volume(x, x_ref.grid());
    Volume clamped = clamp_volume(out, 0.0f, 1.0f);
    row.psnr_ref = eval::psnr(clamped, x_ref);
    row.ssim_ref = eval::ssim(clamped, x_ref);
    row.ref_scale = extras.ref_scale;
    if (extras.gt) {
        Volume phys = clamp_volume(scale_volume(out, static_cast<float>(extras.ref_scale)), 0.0f, 1.0f);
        row.psnr_gt = eval::psnr(phys, *extras.gt);
        row.ssim_gt = eval::ssim(phys, *extras.gt);
    } else {
        row.psnr_gt = row.ssim_gt = std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

DipResult dip_reconstruct(const Volume& x_ref, gen::GeneratorState& gen, const LossConfig& loss_cfg,
                          const OptimizerConfig& opt, const DipExtras& extras) {
    opt.validate();
    if (!(x_ref.grid() == gen.grid())) throw ShapeError("dip: reference grid differs from generator grid");
    if (extras.gt && !(extras.gt->grid() == x_ref.grid())) throw ShapeError("dip: ground-truth grid differs");
    if (loss_cfg.alpha < 0) throw std::invalid_argument("dip: alpha must be non-negative");

    DipResult result;
    if (opt.n_iters == 0) {
        result.volume = gen::generate(gen);
        return result;
    }

    const int K = loss::FeatureExtractor::kTaps;
    auto fe = loss_cfg.extractor;
    if (!fe) fe = std::make_shared<const loss::FeatureExtractor>(loss::FeatureExtractor::random(splitmix(opt.seed, 3)));
    loss::DSConv d_ref = loss::make_dsconv(x_ref.grid(), splitmix(opt.seed, 1));
    loss::DSConv d_gen = loss::make_dsconv(x_ref.grid(), splitmix(opt.seed, 2));

    const bool reweight = opt.mode == WeightMode::reweight;
    const ad::real alpha = opt.mode == WeightMode::w_zero ? ad::real(0) : loss_cfg.alpha;
    ad::Tensor w0 = ad::Tensor(ad::Shape{K}, ad::real(1) / static_cast<ad::real>(K));
    ad::Var w = reweight ? ad::Var::parameter(w0) : ad::Var::constant(w0);

    StoreOptimizer opt_theta(opt, opt.decay), opt_ref(opt, opt.decay), opt_gen(opt, opt.decay);
    AdamState w_state;
    const ad::Var ref = ad::Var::constant(gen::to_tensor(x_ref));

    auto make_row = [&](int iter, const loss::LossTerms& terms, const ad::Var& x) {
        LogRow row;
        row.iter = iter;
        row.total_loss = terms.total.item();
        row.mse = terms.mse.item();
        if (terms.perceptual.empty()) {
            ad::NoGradGuard no_grad;
            for (const auto& p : loss::perceptual_terms(ref, x.detach(), d_ref, d_gen, *fe)) {
                row.perceptual.push_back(p.item());
            }
        } else {
            for (const auto& p : terms.perceptual) row.perceptual.push_back(p.item());
        }
        for (ad::real v : w.value().values()) row.w.push_back(opt.mode == WeightMode::w_zero ? 0.0 : v);
        fill_metrics(row, x.value(), x_ref, extras);
        result.log.rows.push_back(row);
        if (extras.on_log) extras.on_log(row);
    };

    double initial_total = 0.0;
    bool warned = false;
    for (int t = 0; t < opt.n_iters; ++t) {
        if (reweight) {
            auto projected = reweight_step(w.value().values());
            w.mutable_value() = ad::Tensor(ad::Shape{K}, std::move(projected));
        }
        ad::Var x = gen::forward(gen);
        loss::LossTerms terms = loss::total_loss(ref, x, d_ref, d_gen, *fe, w, alpha);
        check_terms(t, terms);
        const double total = terms.total.item();
        if (t == 0) initial_total = total;
        if (!warned && total > 10.0 * initial_total) {
            warned = true;
            std::ostringstream msg;
            msg << "iteration " << t << ": loss " << total << " exceeds 10x its initial value " << initial_total;
            result.log.warnings.push_back(msg.str());
            std::cerr << "warning: " << msg.str() << '\n';
        }
        if (t % opt.log_every == 0) make_row(t, terms, x);

        w.zero_grad();
        ad::grad(terms.total, {&gen.params(), &d_ref.params, &d_gen.params});
        opt_theta.step(gen.params());
        opt_ref.step(d_ref.params);
        opt_gen.step(d_gen.params);
        if (reweight) {
            ad::Tensor g = w.grad();
            if (opt.clip_w_grad) {
                double norm = 0.0;
                for (ad::real v : g.values()) norm += static_cast<double>(v) * v;
                norm = std::sqrt(norm);
                if (norm > opt.w_grad_clip) {
                    for (auto& v : g.values()) v = static_cast<ad::real>(v * (opt.w_grad_clip / norm));
                }
            }
            if (opt.backend == Backend::gd) {
                gd_update(w.mutable_value(), g, opt.lr, 0.0);
            } else {
                adam_update(w.mutable_value(), g, w_state, opt, 0.0);
            }
        }
    }

    ad::NoGradGuard no_grad;
    if (reweight) w.mutable_value() = ad::Tensor(ad::Shape{K}, reweight_step(w.value().values()));
    ad::Var x = gen::forward(gen);
    loss::LossTerms terms = loss::total_loss(ref, x, d_ref, d_gen, *fe, w, alpha);
    check_terms(opt.n_iters, terms);
    make_row(opt.n_iters, terms, x);
    result.volume = gen::to_volume(x.value(), x_ref.grid());
    return result;
}

}  // namespace cbct::inline CBCT_REAL_NS::optim
