#include <algorithm>
#include <limits>
#include <numeric>

#include "ops_internal.hpp"

namespace cbct::inline CBCT_REAL_NS::ad {

using namespace detail;

Var reshape(const Var& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) shape_mismatch("reshape", x.shape(), shape);
    return make_op("reshape", x.value().reshaped(std::move(shape)), {x}, [](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            for (std::int64_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i];
        }
    });
}

namespace {

std::vector<std::int64_t> strides_of(const Shape& s) {
    std::vector<std::int64_t> st(s.size(), 1);
    for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i) st[i] = st[i + 1] * s[i + 1];
    return st;
}

// For every output element (row-major over out_shape), the flat index of the
// input element it copies.
std::vector<std::int64_t> permute_gather_index(const Shape& in_shape, const std::vector<int>& axes) {
    const std::size_t r = in_shape.size();
    Shape out_shape(r);
    for (std::size_t i = 0; i < r; ++i) out_shape[i] = in_shape[static_cast<std::size_t>(axes[i])];
    const auto in_strides = strides_of(in_shape);
    std::vector<std::int64_t> src_stride(r);
    for (std::size_t i = 0; i < r; ++i) src_stride[i] = in_strides[static_cast<std::size_t>(axes[i])];

    const std::int64_t n = shape_numel(in_shape);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
    std::vector<std::int64_t> counter(r, 0);
    std::int64_t src = 0;
    for (std::int64_t o = 0; o < n; ++o) {
        idx[static_cast<std::size_t>(o)] = src;
        for (int a = static_cast<int>(r) - 1; a >= 0; --a) {
            if (++counter[a] < out_shape[a]) {
                src += src_stride[a];
                break;
            }
            src -= src_stride[a] * (out_shape[a] - 1);
            counter[a] = 0;
        }
    }
    return idx;
}

}  // namespace

Var permute(const Var& x, const std::vector<int>& axes) {
    const Shape& in = x.shape();
    std::vector<int> sorted = axes;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> expect(in.size());
    std::iota(expect.begin(), expect.end(), 0);
    if (sorted != expect) throw ShapeError("permute: axes are not a permutation for shape " + shape_str(in));

    Shape out_shape(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out_shape[i] = in[static_cast<std::size_t>(axes[i])];
    auto idx = permute_gather_index(in, axes);
    Tensor out(out_shape);
    const real* src = x.value().data();
    for (std::size_t o = 0; o < idx.size(); ++o) out[static_cast<std::int64_t>(o)] = src[idx[o]];
    return make_op("permute", std::move(out), {x}, [idx = std::move(idx)](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            for (std::size_t o = 0; o < idx.size(); ++o) (*g)[idx[o]] += self.grad[static_cast<std::int64_t>(o)];
        }
    });
}

Var concat(const std::vector<Var>& xs, int axis) {
    if (xs.empty()) throw ShapeError("concat: no inputs");
    const Shape& first = xs[0].shape();
    const int r = static_cast<int>(first.size());
    const int ax = axis < 0 ? axis + r : axis;
    if (ax < 0 || ax >= r) throw ShapeError("concat: axis out of range for " + shape_str(first));

    Shape out_shape = first;
    out_shape[ax] = 0;
    for (const auto& x : xs) {
        const Shape& s = x.shape();
        if (static_cast<int>(s.size()) != r) shape_mismatch("concat", first, s);
        for (int i = 0; i < r; ++i) {
            if (i != ax && s[i] != first[i]) shape_mismatch("concat", first, s);
        }
        out_shape[ax] += s[ax];
    }
    std::int64_t outer = 1, inner = 1;
    for (int i = 0; i < ax; ++i) outer *= first[i];
    for (int i = ax + 1; i < r; ++i) inner *= first[i];

    Tensor out(out_shape);
    std::vector<std::int64_t> widths;
    const std::int64_t out_row = out_shape[ax] * inner;
    std::int64_t offset = 0;
    for (const auto& x : xs) {
        const std::int64_t w = x.shape()[ax] * inner;
        widths.push_back(w);
        for (std::int64_t o = 0; o < outer; ++o) {
            std::copy_n(x.value().data() + o * w, w, out.data() + o * out_row + offset);
        }
        offset += w;
    }
    return make_op("concat", std::move(out), std::vector<Var>(xs),
                   [widths = std::move(widths), outer, out_row](Node& self) {
                       std::int64_t off = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                           if (Tensor* g = input_grad(self, k)) {
                               for (std::int64_t o = 0; o < outer; ++o) {
                                   const real* src = self.grad.data() + o * out_row + off;
                                   real* dst = g->data() + o * widths[k];
                                   for (std::int64_t i = 0; i < widths[k]; ++i) dst[i] += src[i];
                               }
                           }
                           off += widths[k];
                       }
                   });
}

Var slice0(const Var& x, std::int64_t begin, std::int64_t end) {
    const Shape& in = x.shape();
    if (in.empty() || begin < 0 || end > in[0] || begin >= end) {
        throw ShapeError("slice0: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for shape " + shape_str(in));
    }
    Shape out_shape = in;
    out_shape[0] = end - begin;
    const std::int64_t row = in[0] == 0 ? 0 : x.numel() / in[0];
    const real* src = x.value().data() + begin * row;
    Tensor out(out_shape, std::vector<real>(src, src + (end - begin) * row));
    return make_op("slice0", std::move(out), {x}, [offset = begin * row](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            for (std::int64_t i = 0; i < self.grad.numel(); ++i) (*g)[offset + i] += self.grad[i];
        }
    });
}

namespace {

// Flat volume index for every (token, feature) entry of the patch layout.
std::vector<std::int64_t> patch_index(std::int64_t C, std::int64_t D, std::int64_t H, std::int64_t W, int p) {
    const std::int64_t td = D / p, th = H / p, tw = W / p;
    const std::int64_t feat = C * p * p * p;
    std::vector<std::int64_t> idx(static_cast<std::size_t>(td * th * tw * feat));
    std::size_t n = 0;
    for (std::int64_t a = 0; a < td; ++a)
        for (std::int64_t b = 0; b < th; ++b)
            for (std::int64_t c = 0; c < tw; ++c)
                for (std::int64_t ch = 0; ch < C; ++ch)
                    for (int dz = 0; dz < p; ++dz)
                        for (int dy = 0; dy < p; ++dy)
                            for (int dx = 0; dx < p; ++dx) {
                                idx[n++] = ((ch * D + a * p + dz) * H + b * p + dy) * W + c * p + dx;
                            }
    return idx;
}

}  // namespace

Var patchify_3d(const Var& x, int patch) {
    require_rank("patchify_3d", x, 4);
    const Shape& s = x.shape();
    if (patch < 1 || s[1] % patch || s[2] % patch || s[3] % patch) {
        throw ShapeError("patchify_3d: patch " + std::to_string(patch) + " does not divide " + shape_str(s));
    }
    auto idx = patch_index(s[0], s[1], s[2], s[3], patch);
    const std::int64_t feat = s[0] * patch * patch * patch;
    Tensor out(Shape{static_cast<std::int64_t>(idx.size()) / feat, feat});
    const real* src = x.value().data();
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<std::int64_t>(i)] = src[idx[i]];
    return make_op("patchify_3d", std::move(out), {x}, [idx = std::move(idx)](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            for (std::size_t i = 0; i < idx.size(); ++i) (*g)[idx[i]] += self.grad[static_cast<std::int64_t>(i)];
        }
    });
}

Var unpatchify_3d(const Var& tokens, int channels, std::array<std::int64_t, 3> dims, int patch) {
    require_rank("unpatchify_3d", tokens, 2);
    const auto [D, H, W] = dims;
    if (patch < 1 || D % patch || H % patch || W % patch) {
        throw ShapeError("unpatchify_3d: patch " + std::to_string(patch) + " does not divide " +
                         shape_str({D, H, W}));
    }
    const Shape expect{(D / patch) * (H / patch) * (W / patch), std::int64_t{channels} * patch * patch * patch};
    if (tokens.shape() != expect) shape_mismatch("unpatchify_3d", tokens.shape(), expect);
    auto idx = patch_index(channels, D, H, W, patch);
    Tensor out(Shape{channels, D, H, W});
    const real* src = tokens.value().data();
    for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = src[i];
    return make_op("unpatchify_3d", std::move(out), {tokens}, [idx = std::move(idx)](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            for (std::size_t i = 0; i < idx.size(); ++i) (*g)[static_cast<std::int64_t>(i)] += self.grad[idx[i]];
        }
    });
}

namespace {

Var max_pool_impl(const char* name, const Var& x, int spatial) {
    require_rank(name, x, spatial + 1);
    const Shape& s = x.shape();
    Shape out_shape = s;
    for (int a = 1; a <= spatial; ++a) {
        out_shape[a] = s[a] / 2;
        if (out_shape[a] < 1) throw ShapeError(std::string(name) + ": input too small " + shape_str(s));
    }
    const std::int64_t C = s[0];
    const std::int64_t D = spatial == 3 ? s[1] : 1;
    const std::int64_t H = s[spatial - 1], W = s[spatial];
    const std::int64_t od = spatial == 3 ? out_shape[1] : 1;
    const std::int64_t oh = out_shape[spatial - 1], ow = out_shape[spatial];
    const int kd = spatial == 3 ? 2 : 1;

    Tensor out(out_shape);
    std::vector<std::int64_t> arg(static_cast<std::size_t>(out.numel()));
    const real* in = x.value().data();
    std::int64_t o = 0;
    for (std::int64_t c = 0; c < C; ++c)
        for (std::int64_t z = 0; z < od; ++z)
            for (std::int64_t y = 0; y < oh; ++y)
                for (std::int64_t xx = 0; xx < ow; ++xx, ++o) {
                    real best = -std::numeric_limits<real>::infinity();
                    std::int64_t best_i = 0;
                    for (int a = 0; a < kd; ++a)
                        for (int b = 0; b < 2; ++b)
                            for (int d = 0; d < 2; ++d) {
                                const std::int64_t i = ((c * D + z * kd + a) * H + y * 2 + b) * W + xx * 2 + d;
                                if (in[i] > best) {
                                    best = in[i];
                                    best_i = i;
                                }
                            }
                    out[o] = best;
                    arg[static_cast<std::size_t>(o)] = best_i;
                }
    return make_op(name, std::move(out), {x}, [arg = std::move(arg)](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            for (std::size_t i = 0; i < arg.size(); ++i) (*g)[arg[i]] += self.grad[static_cast<std::int64_t>(i)];
        }
    });
}

}  // namespace

Var max_pool2d(const Var& x) { return max_pool_impl("max_pool2d", x, 2); }
Var max_pool3d(const Var& x) { return max_pool_impl("max_pool3d", x, 3); }

}  // namespace cbct::inline CBCT_REAL_NS::ad
