#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "cbct/ad/ops.hpp"
#include "cbct/errors.hpp"
#include "cbct/gen/generator.hpp"
#include "fd_check.hpp"

using namespace cbct;
using namespace cbct::gen;
using ad::Var;

namespace {

UNETRConfig tiny(int patch = 8) {
    UNETRConfig c;
    c.patch = patch;
    c.embed_dim = 16;
    c.n_heads = 2;
    c.n_blocks = 2;
    c.mlp_dim = 24;
    c.decoder_channels.assign(static_cast<std::size_t>(std::countr_zero(static_cast<unsigned>(patch)) + 1), 4);
    c.in_channels = 3;
    return c;
}

VolumeGrid grid_of(int nx, int ny, int nz) {
    VolumeGrid g;
    g.nx = nx;
    g.ny = ny;
    g.nz = nz;
    g.voxel_size = 1.0;
    return g;
}

}  // namespace

TEST(UNETRConfig, Validation) {
    UNETRConfig c = UNETRConfig::desk();
    EXPECT_NO_THROW(c.validate());
    c.n_heads = 5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = UNETRConfig::desk();
    c.in_channels = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = UNETRConfig::desk();
    c.decoder_channels.pop_back();
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = UNETRConfig::desk();
    c.patch = 6;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_NO_THROW(UNETRConfig::full_scale().validate());
}

TEST(UNETRConfig, DeskAndFullScalePresets) {
    const UNETRConfig d = UNETRConfig::desk();
    EXPECT_EQ(d.patch, 8);
    EXPECT_EQ(d.embed_dim, 96);
    EXPECT_EQ(d.n_heads, 4);
    EXPECT_EQ(d.n_blocks, 4);
    EXPECT_EQ(d.mlp_dim, 192);
    EXPECT_EQ(d.in_channels, 16);
    const UNETRConfig p = UNETRConfig::full_scale();
    EXPECT_EQ(p.patch, 16);
    EXPECT_EQ(p.embed_dim, 768);
    EXPECT_EQ(p.n_heads, 12);
    EXPECT_EQ(p.n_blocks, 12);
    EXPECT_EQ(p.mlp_dim, 3072);
}

TEST(UNETRConfig, SkipTapsAreEvenlySpaced) {
    const UNETRConfig p = UNETRConfig::full_scale();
    EXPECT_EQ(std::vector<int>({p.tap_block(1), p.tap_block(2), p.tap_block(3), p.tap_block(4)}),
              (std::vector<int>{3, 6, 9, 12}));
    const UNETRConfig d = UNETRConfig::desk();
    EXPECT_EQ(std::vector<int>({d.tap_block(1), d.tap_block(2), d.tap_block(3), d.tap_block(4)}),
              (std::vector<int>{1, 2, 3, 4}));
    UNETRConfig two = tiny();
    EXPECT_EQ(std::vector<int>({two.tap_block(1), two.tap_block(2), two.tap_block(3), two.tap_block(4)}),
              (std::vector<int>{1, 1, 1, 2}));
}

TEST(InitGenerator, Patch16On48IsValidAnd50IsNot) {
    const UNETRConfig c = tiny(16);
    const auto s = init_generator(c, make_cubic_grid(48), 1);
    EXPECT_EQ(s.params().at("pos_embed").shape(), (ad::Shape{27, 16}));
    EXPECT_THROW(init_generator(c, make_cubic_grid(50), 1), ShapeError);
}

TEST(InitGenerator, DeterministicPerSeed) {
    const auto g = make_cubic_grid(16);
    const auto a = init_generator(tiny(), g, 5), b = init_generator(tiny(), g, 5), c = init_generator(tiny(), g, 6);
    ASSERT_EQ(a.params().size(), b.params().size());
    bool any_diff = false;
    auto ia = a.params().begin(), ic = c.params().begin();
    for (auto ib = b.params().begin(); ib != b.params().end(); ++ia, ++ib, ++ic) {
        EXPECT_EQ(ia->name, ib->name);
        EXPECT_EQ(ia->var.value(), ib->var.value()) << ia->name;
        any_diff |= !(ia->var.value() == ic->var.value());
    }
    EXPECT_TRUE(any_diff);
    EXPECT_EQ(a.noise(), b.noise());
}

TEST(InitGenerator, BiasesZeroAndWeightsGlorot) {
    const auto s = init_generator(UNETRConfig::desk(), make_cubic_grid(16), 3);
    for (const auto& e : s.params()) {
        if (e.name.ends_with(".bias") || e.name.ends_with(".beta")) {
            for (auto v : e.var.value().values()) ASSERT_EQ(v, 0) << e.name;
        }
        if (e.name.ends_with(".gamma")) {
            for (auto v : e.var.value().values()) ASSERT_EQ(v, 1) << e.name;
        }
    }
    // fc1 weight [192, 96]: std sqrt(2 / (96 + 192)).
    const auto& w = s.params().at("blocks.0.mlp.fc1.weight").value();
    double ss = 0;
    for (auto v : w.values()) ss += double(v) * v;
    EXPECT_NEAR(std::sqrt(ss / w.numel()), std::sqrt(2.0 / 288), 0.02 * std::sqrt(2.0 / 288));
}

TEST(SampleNoise, StandardNormalStatistics) {
    const auto t = sample_noise(make_cubic_grid(48), 1, 11);
    ASSERT_GE(t.numel(), 100000);
    double m = 0;
    for (auto v : t.values()) m += v;
    m /= t.numel();
    double var = 0;
    for (auto v : t.values()) var += (v - m) * (v - m);
    var /= t.numel();
    EXPECT_GE(m, -0.02);
    EXPECT_LE(m, 0.02);
    EXPECT_GE(var, 0.97);
    EXPECT_LE(var, 1.03);
}

TEST(SampleNoise, SeedBehaviour) {
    const auto g = make_cubic_grid(8);
    EXPECT_EQ(sample_noise(g, 2, 3), sample_noise(g, 2, 3));
    EXPECT_FALSE(sample_noise(g, 2, 3) == sample_noise(g, 2, 4));
    EXPECT_EQ(sample_noise(g, 2, 3).shape(), (ad::Shape{2, 8, 8, 8}));
    EXPECT_THROW(sample_noise(g, 0, 3), std::invalid_argument);
}

TEST(Generate, OutputShapeMatchesGrid) {
    for (const auto& g : {make_cubic_grid(16), grid_of(8, 16, 24), grid_of(32, 8, 16)}) {
        const auto s = init_generator(tiny(), g, 2);
        const Volume v = generate(s);
        EXPECT_EQ(v.grid(), g);
        EXPECT_TRUE(v.all_finite());
        EXPECT_EQ(forward(s).shape(), (ad::Shape{g.nz, g.ny, g.nx}));
    }
    const auto s4 = init_generator(tiny(4), grid_of(8, 12, 4), 2);
    EXPECT_EQ(generate(s4).grid(), grid_of(8, 12, 4));
}

TEST(Generate, DeterministicAndUnbounded) {
    const auto s = init_generator(tiny(), make_cubic_grid(16), 9);
    const Volume a = generate(s), b = generate(s);
    EXPECT_EQ(a, b);
    // No output activation: a random network produces both signs.
    EXPECT_LT(a.min_value(), 0.0f);
    EXPECT_GT(a.max_value(), 0.0f);
}

TEST(Generate, DeskConfigRunsOn48) {
    const auto s = init_generator(UNETRConfig::desk(), make_cubic_grid(48), 0);
    EXPECT_EQ(s.params().at("pos_embed").shape(), (ad::Shape{216, 96}));
    EXPECT_EQ(s.noise().shape(), (ad::Shape{16, 48, 48, 48}));
    EXPECT_TRUE(generate(s).all_finite());
}

TEST(Generate, GradientReachesEveryParameter) {
    const auto s = init_generator(tiny(), make_cubic_grid(16), 4);
    std::mt19937_64 rng(1);
    Var target = Var::constant(cbct_test::random_tensor({16, 16, 16}, rng));
    auto ps = s.params();
    ad::grad(ad::mse(forward(s), target), {&ps});
    for (const auto& e : s.params()) {
        const auto& g = e.var.grad();
        const bool nonzero = std::any_of(g.values().begin(), g.values().end(), [](auto v) { return v != 0; });
        EXPECT_TRUE(nonzero) << e.name;
    }
}

TEST(Generate, TokenCountFollowsGrid) {
    const auto s = init_generator(tiny(), grid_of(16, 24, 8), 1);
    EXPECT_EQ(s.params().at("pos_embed").value().dim(0), (16 / 8) * (24 / 8) * (8 / 8));
    EXPECT_EQ(ad::patchify_3d(Var::constant(s.noise()), 8).shape()[0], 6);
}

TEST(Generate, AttentionRowsSumToOne) {
    const auto s = init_generator(tiny(), make_cubic_grid(16), 8);
    const auto& ps = s.params();
    ad::NoGradGuard ng;
    Var x = ad::linear(ad::patchify_3d(Var::constant(s.noise()), 8), ps.at("patch_embed.weight"),
                       ps.at("patch_embed.bias"));
    x = ad::add(x, ps.at("pos_embed"));
    Var h = ad::layer_norm(x, ps.at("blocks.0.ln1.gamma"), ps.at("blocks.0.ln1.beta"));
    Var q = ad::linear(h, ps.at("blocks.0.attn.q.weight"), ps.at("blocks.0.attn.q.bias"));
    Var k = ad::linear(h, ps.at("blocks.0.attn.k.weight"), ps.at("blocks.0.attn.k.bias"));
    const auto p = ad::attention_probabilities(q.value(), k.value(), 2);
    const std::int64_t n = 8;
    ASSERT_EQ(p.shape(), (ad::Shape{2, n, n}));
    for (std::int64_t r = 0; r < 2 * n; ++r) {
        double sum = 0;
        for (std::int64_t j = 0; j < n; ++j) sum += p[r * n + j];
        EXPECT_NEAR(sum, 1.0, 1e-5);
    }
}

TEST(Generate, PositionalEmbeddingIsUsed) {
    auto s = init_generator(tiny(), make_cubic_grid(16), 12);
    std::vector<int> identity(8), reversed(8);
    std::iota(identity.begin(), identity.end(), 0);
    std::iota(reversed.rbegin(), reversed.rend(), 0);
    ad::NoGradGuard ng;
    const auto base = forward(s).value();
    EXPECT_EQ(forward_unetr(s, identity).value(), base);
    const auto permuted = forward_unetr(s, reversed).value();
    double diff = 0;
    for (std::int64_t i = 0; i < base.numel(); ++i) diff = std::max(diff, double(std::abs(base[i] - permuted[i])));
    EXPECT_GT(diff, 1e-3);

    // Without a positional embedding the transformer is permutation-equivariant,
    // so reordering tokens and undoing it on the taps changes nothing.
    s.params().at("pos_embed").mutable_value().fill(0);
    const auto base0 = forward(s).value();
    const auto perm0 = forward_unetr(s, reversed).value();
    for (std::int64_t i = 0; i < base0.numel(); ++i) ASSERT_NEAR(base0[i], perm0[i], 1e-4);

    EXPECT_THROW(forward_unetr(s, {0, 1}), ShapeError);
    EXPECT_THROW(forward_unetr(s, {0, 0, 1, 2, 3, 4, 5, 6}), std::invalid_argument);
}

TEST(GeneratorState, CloneIsIndependent) {
    const auto s = init_generator(tiny(), make_cubic_grid(16), 3);
    auto c = s.clone();
    c.params().at("head.bias").mutable_value()[0] += 1;
    EXPECT_EQ(s.params().at("head.bias").value()[0], 0);
    const Volume a = generate(s), b = generate(c);
    EXPECT_NEAR(b[0] - a[0], 1.0f, 1e-5);
}

TEST(UNet3D, ShapeDeterminismAndErrors) {
    UNet3DConfig c;
    c.base_channels = 4;
    c.depth = 2;
    c.in_channels = 2;
    const auto g = grid_of(16, 32, 16);
    const auto s = init_unet3d(c, g, 1);
    const Volume a = generate_unet3d(s);
    EXPECT_EQ(a.grid(), g);
    EXPECT_EQ(a, generate_unet3d(init_unet3d(c, g, 1)));
    EXPECT_THROW(init_unet3d(c, make_cubic_grid(20), 1), ShapeError);
    EXPECT_THROW(generate_unet3d(init_generator(tiny(), make_cubic_grid(16), 1)), std::invalid_argument);
}

TEST(UNet3D, CapacityComparableToDeskUNETR) {
    const auto g = make_cubic_grid(48);
    const auto n_unet = init_unet3d(UNet3DConfig{}, g, 0).params().numel();
    const auto n_unetr = init_generator(UNETRConfig::desk(), g, 0).params().numel();
    const double ratio = double(n_unet) / double(n_unetr);
    EXPECT_GE(ratio, 0.5) << n_unet << " vs " << n_unetr;
    EXPECT_LE(ratio, 2.0) << n_unet << " vs " << n_unetr;
}

TEST(UNet3D, GradientReachesEveryParameter) {
    UNet3DConfig c;
    c.base_channels = 4;
    c.depth = 2;
    c.in_channels = 2;
    const auto s = init_unet3d(c, make_cubic_grid(16), 2);
    std::mt19937_64 rng(3);
    Var target = Var::constant(cbct_test::random_tensor({16, 16, 16}, rng));
    auto ps = s.params();
    ad::grad(ad::mse(forward(s), target), {&ps});
    for (const auto& e : s.params()) {
        const auto& gr = e.var.grad();
        EXPECT_TRUE(std::any_of(gr.values().begin(), gr.values().end(), [](auto v) { return v != 0; })) << e.name;
    }
}

TEST(VolumeTensor, RoundTrip) {
    const auto g = grid_of(3, 4, 5);
    std::vector<float> d(60);
    std::iota(d.begin(), d.end(), 0.0f);
    const Volume v(g, d);
    const auto t = to_tensor(v);
    EXPECT_EQ(t.shape(), (ad::Shape{5, 4, 3}));
    EXPECT_EQ(t[1], 1.0f);
    EXPECT_EQ(to_volume(t, g), v);
    EXPECT_THROW(to_volume(t, make_cubic_grid(4)), ShapeError);
}
