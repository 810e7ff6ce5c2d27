#include <cmath>

#include "cbct/errors.hpp"
#include "cbct/optim/optim.hpp"

namespace cbct::inline CBCT_REAL_NS::optim {

namespace {

void require_match(const char* op, const ad::Tensor& p, const ad::Tensor& g) {
    if (p.shape() != g.shape()) {
        throw ShapeError(std::string(op) + ": parameter " + ad::shape_str(p.shape()) + " vs gradient " +
                         ad::shape_str(g.shape()));
    }
}

}  // namespace

void gd_update(ad::Tensor& param, const ad::Tensor& grad, double lr, double decay) {
    require_match("gd_update", param, grad);
    for (std::int64_t i = 0; i < param.numel(); ++i) {
        param[i] = static_cast<ad::real>(param[i] - lr * (grad[i] + decay * param[i]));
    }
}

void adam_update(ad::Tensor& param, const ad::Tensor& grad, AdamState& s, const OptimizerConfig& cfg, double decay) {
    require_match("adam_update", param, grad);
    if (s.m.shape() != param.shape()) {
        s.m = ad::Tensor(param.shape());
        s.v = ad::Tensor(param.shape());
        s.t = 0;
    }
    ++s.t;
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.t));
    const double shrink = 1.0 - cfg.lr * decay;
    for (std::int64_t i = 0; i < param.numel(); ++i) {
        const double g = grad[i];
        const double m = b1 * s.m[i] + (1.0 - b1) * g;
        const double v = b2 * s.v[i] + (1.0 - b2) * g * g;
        s.m[i] = static_cast<ad::real>(m);
        s.v[i] = static_cast<ad::real>(v);
        const double p = param[i] * shrink - cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.eps);
        param[i] = static_cast<ad::real>(p);
    }
}

void StoreOptimizer::step(ad::ParamStore& store) {
    states_.resize(store.size());
    std::size_t i = 0;
    for (auto& e : store) {
        AdamState& s = states_[i++];
        if (!e.var.requires_grad()) continue;
        if (cfg_.backend == Backend::gd) {
            gd_update(e.var.mutable_value(), e.var.grad(), cfg_.lr, decay_);
        } else {
            adam_update(e.var.mutable_value(), e.var.grad(), s, cfg_, decay_);
        }
    }
}

}  // namespace cbct::inline CBCT_REAL_NS::optim
