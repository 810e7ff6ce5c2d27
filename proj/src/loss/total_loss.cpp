#include "cbct/errors.hpp"
#include "cbct/loss/loss.hpp"

namespace cbct::inline CBCT_REAL_NS::loss {

LossWeights LossWeights::uniform(int k, ad::real alpha) {
    return {std::vector<ad::real>(static_cast<std::size_t>(k), ad::real(1) / static_cast<ad::real>(k)), alpha};
}

std::vector<ad::Var> perceptual_terms(const ad::Var& x_ref, const ad::Var& x_gen, const DSConv& d_ref,
                                      const DSConv& d_gen, const FeatureExtractor& fe) {
    if (x_ref.shape() != x_gen.shape()) {
        throw ShapeError("loss: reference " + ad::shape_str(x_ref.shape()) + " vs generated " +
                         ad::shape_str(x_gen.shape()));
    }
    ad::Var ref_img = dsconv_apply(d_ref, x_ref);
    ad::Var gen_img = dsconv_apply(d_gen, x_gen);
    ad::Var stats = ad::channel_stats(ref_img);
    auto f_ref = fe.extract(ad::channel_normalize(ref_img, stats));
    auto f_gen = fe.extract(ad::channel_normalize(gen_img, stats));
    std::vector<ad::Var> terms;
    terms.reserve(f_ref.size());
    for (std::size_t i = 0; i < f_ref.size(); ++i) terms.push_back(ad::mse(f_ref[i], f_gen[i]));
    return terms;
}

LossTerms total_loss(const ad::Var& x_ref, const ad::Var& x_gen, const DSConv& d_ref, const DSConv& d_gen,
                     const FeatureExtractor& fe, const ad::Var& w, ad::real alpha) {
    if (x_ref.shape() != x_gen.shape()) {
        throw ShapeError("loss: reference " + ad::shape_str(x_ref.shape()) + " vs generated " +
                         ad::shape_str(x_gen.shape()));
    }
    if (w.shape() != ad::Shape{FeatureExtractor::kTaps}) {
        throw ShapeError("loss: weights " + ad::shape_str(w.shape()) + " vs " +
                         std::to_string(FeatureExtractor::kTaps) + " taps");
    }
    LossTerms t;
    t.mse = ad::mse(x_ref, x_gen);
    if (alpha == ad::real(0)) {
        t.total = t.mse;
        return t;
    }
    t.perceptual = perceptual_terms(x_ref, x_gen, d_ref, d_gen, fe);
    std::vector<ad::Var> flat;
    for (const auto& p : t.perceptual) flat.push_back(ad::reshape(p, {1}));
    ad::Var weighted = ad::sum(ad::mul(w, ad::concat(flat, 0)));
    t.total = ad::add(t.mse, ad::mul_scalar(weighted, alpha));
    return t;
}

}  // namespace cbct::inline CBCT_REAL_NS::loss
