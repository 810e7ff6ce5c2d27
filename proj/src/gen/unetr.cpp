#include <algorithm>
#include <bit>
#include <stdexcept>

#include "cbct/errors.hpp"
#include "cbct/gen/generator.hpp"
#include "layers.hpp"

namespace cbct::inline CBCT_REAL_NS::gen {

using namespace detail;

void UNETRConfig::validate() const {
    if (patch < 2 || !std::has_single_bit(static_cast<unsigned>(patch))) {
        throw std::invalid_argument("UNETR patch must be a power of two >= 2, got " + std::to_string(patch));
    }
    if (embed_dim < 1 || n_heads < 1 || embed_dim % n_heads != 0) {
        throw std::invalid_argument("UNETR embed_dim " + std::to_string(embed_dim) + " not divisible by n_heads " +
                                    std::to_string(n_heads));
    }
    if (n_blocks < 1) throw std::invalid_argument("UNETR n_blocks must be >= 1");
    if (mlp_dim < 1) throw std::invalid_argument("UNETR mlp_dim must be >= 1");
    if (in_channels < 1) throw std::invalid_argument("UNETR in_channels must be >= 1");
    if (static_cast<int>(decoder_channels.size()) != levels() + 1) {
        throw std::invalid_argument("UNETR decoder_channels needs log2(patch) + 1 = " + std::to_string(levels() + 1) +
                                    " entries, got " + std::to_string(decoder_channels.size()));
    }
    for (int c : decoder_channels) {
        if (c < 1) throw std::invalid_argument("UNETR decoder_channels entries must be >= 1");
    }
}

void UNETRConfig::validate_for(const VolumeGrid& grid) const {
    validate();
    grid.validate();
    if (grid.nx % patch || grid.ny % patch || grid.nz % patch) {
        throw ShapeError("patch " + std::to_string(patch) + " does not divide grid " + std::to_string(grid.nx) + "x" +
                         std::to_string(grid.ny) + "x" + std::to_string(grid.nz));
    }
}

int UNETRConfig::levels() const { return std::countr_zero(static_cast<unsigned>(patch)); }

int UNETRConfig::tap_block(int k) const { return std::max(1, n_blocks * k / 4); }

int UNETRConfig::tap_level(int k) const { return std::min(k, levels()); }

UNETRConfig UNETRConfig::desk() { return {}; }

UNETRConfig UNETRConfig::full_scale() {
    UNETRConfig c;
    c.patch = 16;
    c.embed_dim = 768;
    c.n_heads = 12;
    c.n_blocks = 12;
    c.mlp_dim = 3072;
    c.decoder_channels = {32, 64, 128, 256, 512};
    c.in_channels = 16;
    return c;
}

namespace {

std::string block_name(int i) { return "blocks." + std::to_string(i); }
std::string skip_name(int k) { return "skip" + std::to_string(k); }
std::string dec_name(int l) { return "dec" + std::to_string(l); }

int skips_at_level(const UNETRConfig& c, int level) {
    int m = 0;
    for (int k = 1; k <= 4; ++k) m += c.tap_level(k) == level;
    return m;
}

}  // namespace

ad::ParamStore build_unetr_params(const UNETRConfig& c, const VolumeGrid& grid, std::mt19937_64& rng) {
    const int p = c.patch;
    const int E = c.embed_dim;
    const int S = c.levels();
    const auto& ch = c.decoder_channels;
    const std::int64_t tokens = std::int64_t{grid.nx / p} * (grid.ny / p) * (grid.nz / p);

    ad::ParamStore ps;
    add_linear(ps, "patch_embed", c.in_channels * p * p * p, E, rng);
    ps.add("pos_embed", ad::glorot_normal({tokens, E}, tokens, E, rng));
    for (int i = 0; i < c.n_blocks; ++i) {
        const auto b = block_name(i);
        add_norm(ps, b + ".ln1", E);
        for (const char* m : {".attn.q", ".attn.k", ".attn.v", ".attn.out"}) add_linear(ps, b + m, E, E, rng);
        add_norm(ps, b + ".ln2", E);
        add_linear(ps, b + ".mlp.fc1", E, c.mlp_dim, rng);
        add_linear(ps, b + ".mlp.fc2", c.mlp_dim, E, rng);
    }
    add_norm(ps, "norm", E);

    for (int k = 1; k <= 4; ++k) {
        const int l = c.tap_level(k);
        if (l == S) {
            add_conv3d(ps, skip_name(k) + ".proj", E, ch[l], 1, true, rng);
        } else {
            for (int j = 0; j < S - l; ++j) {
                add_conv_transpose3d(ps, skip_name(k) + ".up" + std::to_string(j), j == 0 ? E : ch[l], ch[l], rng);
            }
        }
    }
    add_conv_block(ps, "enc1", c.in_channels, ch[0], rng);
    add_conv_block(ps, dec_name(S) + ".block", skips_at_level(c, S) * ch[S], ch[S], rng);
    for (int l = S - 1; l >= 0; --l) {
        add_conv_transpose3d(ps, dec_name(l) + ".up", ch[l + 1], ch[l], rng);
        const int in = ch[l] * (1 + skips_at_level(c, l) + (l == 0 ? 1 : 0));
        add_conv_block(ps, dec_name(l) + ".block", in, ch[l], rng);
    }
    add_conv3d(ps, "head", ch[0], 1, 1, true, rng);
    return ps;
}

namespace {

Var gather_rows(const Var& x, const std::vector<int>& order) {
    std::vector<Var> rows;
    rows.reserve(order.size());
    for (int r : order) rows.push_back(ad::slice0(x, r, r + 1));
    return ad::concat(rows, 0);
}

Var transformer_block(const ad::ParamStore& ps, const UNETRConfig& c, int i, const Var& x) {
    const auto b = block_name(i);
    Var h = ad::layer_norm(x, ps.at(b + ".ln1.gamma"), ps.at(b + ".ln1.beta"));
    Var a = ad::scaled_dot_product_attention(linear(ps, b + ".attn.q", h), linear(ps, b + ".attn.k", h),
                                             linear(ps, b + ".attn.v", h), c.n_heads);
    Var y = ad::add(x, linear(ps, b + ".attn.out", a));
    h = ad::layer_norm(y, ps.at(b + ".ln2.gamma"), ps.at(b + ".ln2.beta"));
    h = linear(ps, b + ".mlp.fc2", ad::gelu(linear(ps, b + ".mlp.fc1", h)));
    return ad::add(y, h);
}

}  // namespace

Var forward_unetr(const GeneratorState& state, const std::vector<int>& token_order) {
    const UNETRConfig& c = state.unetr_config();
    const VolumeGrid& grid = state.grid();
    const ad::ParamStore& ps = state.params();
    const int p = c.patch;
    const int S = c.levels();
    const std::array<std::int64_t, 3> token_dims{grid.nz / p, grid.ny / p, grid.nx / p};
    const std::int64_t n_tokens = token_dims[0] * token_dims[1] * token_dims[2];

    std::vector<int> inverse;
    if (!token_order.empty()) {
        if (static_cast<std::int64_t>(token_order.size()) != n_tokens) {
            throw ShapeError("token order has " + std::to_string(token_order.size()) + " entries, expected " +
                             std::to_string(n_tokens));
        }
        inverse.assign(token_order.size(), -1);
        for (std::size_t i = 0; i < token_order.size(); ++i) {
            const int t = token_order[i];
            if (t < 0 || t >= n_tokens || inverse[static_cast<std::size_t>(t)] != -1) {
                throw std::invalid_argument("token order is not a permutation");
            }
            inverse[static_cast<std::size_t>(t)] = static_cast<int>(i);
        }
    }

    Var noise = Var::constant(state.noise());
    Var x = linear(ps, "patch_embed", ad::patchify_3d(noise, p));
    if (!token_order.empty()) x = gather_rows(x, token_order);
    x = ad::add(x, ps.at("pos_embed"));

    std::array<Var, 5> taps;
    for (int i = 1; i <= c.n_blocks; ++i) {
        x = transformer_block(ps, c, i - 1, x);
        for (int k = 1; k <= 4; ++k) {
            if (c.tap_block(k) == i) taps[static_cast<std::size_t>(k)] = x;
        }
    }
    taps[4] = ad::layer_norm(taps[4], ps.at("norm.gamma"), ps.at("norm.beta"));

    std::vector<std::vector<Var>> skips(static_cast<std::size_t>(S + 1));
    for (int k = 1; k <= 4; ++k) {
        Var t = taps[static_cast<std::size_t>(k)];
        if (!inverse.empty()) t = gather_rows(t, inverse);
        Var f = ad::unpatchify_3d(t, c.embed_dim, token_dims, 1);
        const int l = c.tap_level(k);
        if (l == S) {
            f = ad::conv3d(f, ps.at(skip_name(k) + ".proj.weight"), ps.at(skip_name(k) + ".proj.bias"), {0, 0, 0});
        } else {
            for (int j = 0; j < S - l; ++j) f = up(ps, skip_name(k) + ".up" + std::to_string(j), f);
        }
        skips[static_cast<std::size_t>(l)].push_back(f);
    }

    Var y = conv_block(ps, dec_name(S) + ".block", ad::concat(skips[static_cast<std::size_t>(S)], 0));
    for (int l = S - 1; l >= 0; --l) {
        std::vector<Var> parts{up(ps, dec_name(l) + ".up", y)};
        for (const Var& s : skips[static_cast<std::size_t>(l)]) parts.push_back(s);
        if (l == 0) parts.push_back(conv_block(ps, "enc1", noise));
        y = conv_block(ps, dec_name(l) + ".block", ad::concat(parts, 0));
    }
    y = ad::conv3d(y, ps.at("head.weight"), ps.at("head.bias"), {0, 0, 0});
    return ad::reshape(y, {grid.nz, grid.ny, grid.nx});
}

}  // namespace cbct::inline CBCT_REAL_NS::gen
