#include <algorithm>

#include "ops_internal.hpp"

namespace cbct::inline CBCT_REAL_NS::ad {

using namespace detail;

namespace {

struct ConvDims {
    std::int64_t cin, d, h, w;
    std::int64_t cout, kd, kh, kw;
    std::int64_t pd, ph, pw;
    std::int64_t od, oh, ow;

    std::int64_t k() const { return cin * kd * kh * kw; }
    std::int64_t plane() const { return oh * ow; }
    std::int64_t out_spatial() const { return od * oh * ow; }
    // Output planes per im2col chunk, keeping the column buffer near 4M entries.
    std::int64_t chunk_planes() const {
        constexpr std::int64_t budget = std::int64_t{1} << 22;
        return std::clamp<std::int64_t>(budget / std::max<std::int64_t>(k() * plane(), 1), 1, od);
    }
};

// col[r, p] for kernel row r = ((ci * kd + a) * kh + b) * kw + c and output
// position p within planes [z0, z1).
void im2col(const real* x, const ConvDims& c, std::int64_t z0, std::int64_t z1, real* col) {
    const std::int64_t P = (z1 - z0) * c.plane();
    std::int64_t r = 0;
    for (std::int64_t ci = 0; ci < c.cin; ++ci)
        for (std::int64_t a = 0; a < c.kd; ++a)
            for (std::int64_t b = 0; b < c.kh; ++b)
                for (std::int64_t cc = 0; cc < c.kw; ++cc, ++r) {
                    real* dst = col + r * P;
                    const std::int64_t x_lo = std::max<std::int64_t>(0, c.pw - cc);
                    const std::int64_t x_hi = std::min<std::int64_t>(c.ow, c.w + c.pw - cc);
                    for (std::int64_t zo = z0; zo < z1; ++zo) {
                        const std::int64_t iz = zo + a - c.pd;
                        for (std::int64_t yo = 0; yo < c.oh; ++yo, dst += c.ow) {
                            const std::int64_t iy = yo + b - c.ph;
                            if (iz < 0 || iz >= c.d || iy < 0 || iy >= c.h || x_lo >= x_hi) {
                                std::fill(dst, dst + c.ow, real(0));
                                continue;
                            }
                            const real* src = x + ((ci * c.d + iz) * c.h + iy) * c.w + (cc - c.pw);
                            std::fill(dst, dst + x_lo, real(0));
                            std::copy(src + x_lo, src + x_hi, dst + x_lo);
                            std::fill(dst + x_hi, dst + c.ow, real(0));
                        }
                    }
                }
}

void col2im(const real* col, const ConvDims& c, std::int64_t z0, std::int64_t z1, real* dx) {
    const std::int64_t P = (z1 - z0) * c.plane();
    std::int64_t r = 0;
    for (std::int64_t ci = 0; ci < c.cin; ++ci)
        for (std::int64_t a = 0; a < c.kd; ++a)
            for (std::int64_t b = 0; b < c.kh; ++b)
                for (std::int64_t cc = 0; cc < c.kw; ++cc, ++r) {
                    const real* src = col + r * P;
                    const std::int64_t x_lo = std::max<std::int64_t>(0, c.pw - cc);
                    const std::int64_t x_hi = std::min<std::int64_t>(c.ow, c.w + c.pw - cc);
                    for (std::int64_t zo = z0; zo < z1; ++zo) {
                        const std::int64_t iz = zo + a - c.pd;
                        for (std::int64_t yo = 0; yo < c.oh; ++yo, src += c.ow) {
                            const std::int64_t iy = yo + b - c.ph;
                            if (iz < 0 || iz >= c.d || iy < 0 || iy >= c.h) continue;
                            real* dst = dx + ((ci * c.d + iz) * c.h + iy) * c.w + (cc - c.pw);
                            for (std::int64_t xo = x_lo; xo < x_hi; ++xo) dst[xo] += src[xo];
                        }
                    }
                }
}

Var conv_impl(const char* name, const Var& x, const Var& w, const Var& b, const ConvDims& c, Shape out_shape) {
    if (c.od < 1 || c.oh < 1 || c.ow < 1) shape_mismatch(name, x.shape(), w.shape());
    if (b.defined() && b.shape() != Shape{c.cout}) shape_mismatch(name, w.shape(), b.shape());

    Tensor out(std::move(out_shape));
    const std::int64_t K = c.k();
    const std::int64_t S = c.out_spatial();
    const std::int64_t step = c.chunk_planes();
    Mat col;
    const auto wm = as_mat(w.value(), c.cout, K);
    for (std::int64_t z0 = 0; z0 < c.od; z0 += step) {
        const std::int64_t z1 = std::min(c.od, z0 + step);
        const std::int64_t P = (z1 - z0) * c.plane();
        col.resize(K, P);
        im2col(x.value().data(), c, z0, z1, col.data());
        StridedMap y(out.data() + z0 * c.plane(), c.cout, P, Eigen::OuterStride<>(S));
        y.noalias() = wm * col;
    }
    if (b.defined()) {
        for (std::int64_t co = 0; co < c.cout; ++co) {
            real* p = out.data() + co * S;
            const real bias = b.value()[co];
            for (std::int64_t i = 0; i < S; ++i) p[i] += bias;
        }
    }

    return make_op(name, std::move(out), {x, w, b}, [c](Node& self) {
        const std::int64_t K = c.k();
        const std::int64_t S = c.out_spatial();
        Tensor* gx = input_grad(self, 0);
        Tensor* gw = input_grad(self, 1);
        Tensor* gb = input_grad(self, 2);
        if (gb) {
            for (std::int64_t co = 0; co < c.cout; ++co) {
                const real* p = self.grad.data() + co * S;
                double s = 0.0;
                for (std::int64_t i = 0; i < S; ++i) s += p[i];
                (*gb)[co] += static_cast<real>(s);
            }
        }
        if (!gx && !gw) return;
        const auto wm = as_mat(self.inputs[1]->value, c.cout, K);
        const std::int64_t step = c.chunk_planes();
        Mat col, dcol;
        for (std::int64_t z0 = 0; z0 < c.od; z0 += step) {
            const std::int64_t z1 = std::min(c.od, z0 + step);
            const std::int64_t P = (z1 - z0) * c.plane();
            ConstStridedMap dy(self.grad.data() + z0 * c.plane(), c.cout, P, Eigen::OuterStride<>(S));
            if (gw) {
                col.resize(K, P);
                im2col(self.inputs[0]->value.data(), c, z0, z1, col.data());
                as_mat(*gw, c.cout, K).noalias() += dy * col.transpose();
            }
            if (gx) {
                dcol.resize(K, P);
                dcol.noalias() = wm.transpose() * dy;
                col2im(dcol.data(), c, z0, z1, gx->data());
            }
        }
    });
}

}  // namespace

Var conv3d(const Var& x, const Var& w, const Var& b, std::array<int, 3> pad) {
    require_rank("conv3d", x, 4);
    require_rank("conv3d", w, 5);
    const Shape& xs = x.shape();
    const Shape& ws = w.shape();
    if (ws[1] != xs[0]) shape_mismatch("conv3d", xs, ws);
    ConvDims c{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3], ws[4], pad[0], pad[1], pad[2], 0, 0, 0};
    c.od = c.d + 2 * c.pd - c.kd + 1;
    c.oh = c.h + 2 * c.ph - c.kh + 1;
    c.ow = c.w + 2 * c.pw - c.kw + 1;
    return conv_impl("conv3d", x, w, b, c, Shape{c.cout, c.od, c.oh, c.ow});
}

Var conv2d(const Var& x, const Var& w, const Var& b, std::array<int, 2> pad) {
    require_rank("conv2d", x, 3);
    require_rank("conv2d", w, 4);
    const Shape& xs = x.shape();
    const Shape& ws = w.shape();
    if (ws[1] != xs[0]) shape_mismatch("conv2d", xs, ws);
    ConvDims c{xs[0], 1, xs[1], xs[2], ws[0], 1, ws[2], ws[3], 0, pad[0], pad[1], 1, 0, 0};
    c.oh = c.h + 2 * c.ph - c.kh + 1;
    c.ow = c.w + 2 * c.pw - c.kw + 1;
    return conv_impl("conv2d", x, w, b, c, Shape{c.cout, c.oh, c.ow});
}

Var conv_transpose3d(const Var& x, const Var& w, const Var& b) {
    require_rank("conv_transpose3d", x, 4);
    require_rank("conv_transpose3d", w, 5);
    const Shape& xs = x.shape();
    const Shape& ws = w.shape();
    if (ws[0] != xs[0] || ws[2] != 2 || ws[3] != 2 || ws[4] != 2) shape_mismatch("conv_transpose3d", xs, ws);
    const std::int64_t cin = xs[0], D = xs[1], H = xs[2], W = xs[3], cout = ws[1];
    if (b.defined() && b.shape() != Shape{cout}) shape_mismatch("conv_transpose3d", ws, b.shape());
    const std::int64_t N = D * H * W;

    // Z[co * 8 + tap, n] = sum_ci W[ci, co * 8 + tap] X[ci, n]; each input voxel
    // owns one 2x2x2 output block, so the scatter below is a bijection.
    Mat z = as_mat(w.value(), cin, cout * 8).transpose() * as_mat(x.value(), cin, N);
    Tensor out(Shape{cout, 2 * D, 2 * H, 2 * W});
    auto out_index = [=](std::int64_t co, std::int64_t tap, std::int64_t n) {
        const std::int64_t zz = n / (H * W), yy = (n / W) % H, xx = n % W;
        const std::int64_t a = tap >> 2, bb = (tap >> 1) & 1, cc = tap & 1;
        return ((co * 2 * D + 2 * zz + a) * 2 * H + 2 * yy + bb) * 2 * W + 2 * xx + cc;
    };
    for (std::int64_t co = 0; co < cout; ++co) {
        const real bias = b.defined() ? b.value()[co] : real(0);
        for (std::int64_t tap = 0; tap < 8; ++tap) {
            const real* row = z.data() + (co * 8 + tap) * N;
            for (std::int64_t n = 0; n < N; ++n) out[out_index(co, tap, n)] = row[n] + bias;
        }
    }
    return make_op("conv_transpose3d", std::move(out), {x, w, b}, [=](Node& self) {
        Mat dz(cout * 8, N);
        for (std::int64_t co = 0; co < cout; ++co)
            for (std::int64_t tap = 0; tap < 8; ++tap) {
                real* row = dz.data() + (co * 8 + tap) * N;
                for (std::int64_t n = 0; n < N; ++n) row[n] = self.grad[out_index(co, tap, n)];
            }
        if (Tensor* gb = input_grad(self, 2)) {
            for (std::int64_t co = 0; co < cout; ++co) (*gb)[co] += dz.middleRows(co * 8, 8).sum();
        }
        if (Tensor* gx = input_grad(self, 0)) {
            as_mat(*gx, cin, N).noalias() += as_mat(self.inputs[1]->value, cin, cout * 8) * dz;
        }
        if (Tensor* gw = input_grad(self, 1)) {
            as_mat(*gw, cin, cout * 8).noalias() += as_mat(self.inputs[0]->value, cin, N) * dz.transpose();
        }
    });
}

}  // namespace cbct::inline CBCT_REAL_NS::ad
