#include <random>
#include <string>

#include "cbct/errors.hpp"
#include "cbct/loss/loss.hpp"

namespace cbct::inline CBCT_REAL_NS::loss {

namespace {

std::string conv_name(int i) { return "conv" + std::to_string(i + 1); }

bool pool_after(int tap) { return tap == 0 || tap == 1 || tap == 3 || tap == 5; }

void check_topology(const ad::ParamStore& ps) {
    if (ps.size() != 2 * FeatureExtractor::kTaps) {
        throw FormatError("feature extractor needs " + std::to_string(2 * FeatureExtractor::kTaps) + " tensors, got " +
                          std::to_string(ps.size()));
    }
    std::int64_t in = 3;
    for (int i = 0; i < FeatureExtractor::kTaps; ++i) {
        const std::int64_t out = FeatureExtractor::kWidths[static_cast<std::size_t>(i)];
        const auto n = conv_name(i);
        if (!ps.contains(n + ".weight") || !ps.contains(n + ".bias")) {
            throw FormatError("feature extractor checkpoint lacks " + n);
        }
        if (ps.at(n + ".weight").shape() != ad::Shape{out, in, 3, 3} || ps.at(n + ".bias").shape() != ad::Shape{out}) {
            throw FormatError("feature extractor tensor " + n + " has shape " +
                              ad::shape_str(ps.at(n + ".weight").shape()));
        }
        in = out;
    }
}

}  // namespace

FeatureExtractor::FeatureExtractor(ad::ParamStore params) : params_(std::move(params)) {
    check_topology(params_);
    params_.set_trainable(false);
}

FeatureExtractor FeatureExtractor::random(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ad::ParamStore ps;
    int in = 3;
    for (int i = 0; i < kTaps; ++i) {
        const int out = kWidths[static_cast<std::size_t>(i)];
        ps.add(conv_name(i) + ".weight", ad::glorot_normal({out, in, 3, 3}, in * 9, out * 9, rng), false);
        ps.add(conv_name(i) + ".bias", ad::Tensor(ad::Shape{out}), false);
        in = out;
    }
    return FeatureExtractor(std::move(ps));
}

FeatureExtractor FeatureExtractor::load(const std::filesystem::path& path) {
    return FeatureExtractor(ad::load_params(path));
}

void FeatureExtractor::save(const std::filesystem::path& path) const {
    ad::save_params(params_, path, {{"kind", "vgg11_features"}});
}

std::vector<ad::Var> FeatureExtractor::extract(const ad::Var& img) const {
    const auto& s = img.shape();
    if (s.size() != 3 || s[0] != 3) throw ShapeError("feature extractor expects [3, H, W], got " + ad::shape_str(s));
    if (s[1] < kMinSide || s[2] < kMinSide) {
        throw ShapeError("feature extractor input " + ad::shape_str(s) + " is smaller than " +
                         std::to_string(kMinSide) + " pixels per side");
    }
    std::vector<ad::Var> taps;
    taps.reserve(kTaps);
    ad::Var x = img;
    for (int i = 0; i < kTaps; ++i) {
        x = ad::relu(ad::conv2d(x, params_.at(conv_name(i) + ".weight"), params_.at(conv_name(i) + ".bias"), {1, 1}));
        taps.push_back(x);
        if (pool_after(i)) x = ad::max_pool2d(x);
    }
    return taps;
}

}  // namespace cbct::inline CBCT_REAL_NS::loss
