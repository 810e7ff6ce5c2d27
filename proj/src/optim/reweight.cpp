#include <algorithm>
#include <stdexcept>

#include "cbct/optim/optim.hpp"

namespace cbct::inline CBCT_REAL_NS::optim {

Backend parse_backend(std::string_view s) {
    if (s == "gd") return Backend::gd;
    if (s == "adam") return Backend::adam;
    throw std::invalid_argument("unknown backend '" + std::string(s) + "' (expected gd or adam)");
}

WeightMode parse_weight_mode(std::string_view s) {
    if (s == "w_zero") return WeightMode::w_zero;
    if (s == "w_fixed") return WeightMode::w_fixed;
    if (s == "reweight") return WeightMode::reweight;
    throw std::invalid_argument("unknown weighting mode '" + std::string(s) + "' (expected w_zero, w_fixed or reweight)");
}

std::string to_string(Backend b) { return b == Backend::gd ? "gd" : "adam"; }

std::string to_string(WeightMode m) {
    switch (m) {
        case WeightMode::w_zero: return "w_zero";
        case WeightMode::w_fixed: return "w_fixed";
        case WeightMode::reweight: return "reweight";
    }
    return "?";
}

void OptimizerConfig::validate() const {
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
    if (decay < 0.0) throw std::invalid_argument("decay must be non-negative");
    if (n_iters < 0) throw std::invalid_argument("n_iters must be non-negative");
    if (log_every < 1) throw std::invalid_argument("log_every must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("adam betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("adam eps must be positive");
    if (clip_w_grad && !(w_grad_clip > 0.0)) throw std::invalid_argument("w_grad_clip must be positive");
}

std::vector<ad::real> reweight_step(std::span<const ad::real> w) {
    std::vector<ad::real> out(w.begin(), w.end());
    double total = 0.0;
    for (auto& v : out) {
        v = std::max(v, ad::real(0));
        total += v;
    }
    if (total == 0.0) {
        for (auto& v : out) v = ad::real(1) / static_cast<ad::real>(out.size());
        return out;
    }
    for (auto& v : out) v = static_cast<ad::real>(v / total);
    return out;
}

}  // namespace cbct::inline CBCT_REAL_NS::optim
