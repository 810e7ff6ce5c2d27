#include <cmath>

#include "ops_internal.hpp"

namespace cbct::inline CBCT_REAL_NS::ad {

using namespace detail;

Var matmul(const Var& a, const Var& b) {
    require_rank("matmul", a, 2);
    require_rank("matmul", b, 2);
    const std::int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k) shape_mismatch("matmul", a.shape(), b.shape());
    Tensor out(Shape{m, n});
    as_mat(out, m, n).noalias() = as_mat(a.value(), m, k) * as_mat(b.value(), k, n);
    return make_op("matmul", std::move(out), {a, b}, [m, k, n](Node& self) {
        const auto dy = as_mat(std::as_const(self.grad), m, n);
        if (Tensor* g = input_grad(self, 0)) {
            as_mat(*g, m, k).noalias() += dy * as_mat(self.inputs[1]->value, k, n).transpose();
        }
        if (Tensor* g = input_grad(self, 1)) {
            as_mat(*g, k, n).noalias() += as_mat(self.inputs[0]->value, m, k).transpose() * dy;
        }
    });
}

Var linear(const Var& x, const Var& w, const Var& b) {
    require_rank("linear", w, 2);
    const Shape& xs = x.shape();
    const std::int64_t out_f = w.shape()[0], in_f = w.shape()[1];
    if (xs.empty() || xs.back() != in_f) shape_mismatch("linear", xs, w.shape());
    if (b.defined() && b.shape() != Shape{out_f}) shape_mismatch("linear", w.shape(), b.shape());
    const std::int64_t rows = x.numel() / in_f;

    Shape out_shape = xs;
    out_shape.back() = out_f;
    Tensor out(out_shape);
    auto y = as_mat(out, rows, out_f);
    y.noalias() = as_mat(x.value(), rows, in_f) * as_mat(w.value(), out_f, in_f).transpose();
    if (b.defined()) {
        const auto bias = Eigen::Map<const Eigen::Matrix<real, 1, Eigen::Dynamic>>(b.value().data(), out_f);
        y.rowwise() += bias;
    }
    return make_op("linear", std::move(out), {x, w, b}, [rows, in_f, out_f](Node& self) {
        const auto dy = as_mat(std::as_const(self.grad), rows, out_f);
        if (Tensor* g = input_grad(self, 0)) {
            as_mat(*g, rows, in_f).noalias() += dy * as_mat(self.inputs[1]->value, out_f, in_f);
        }
        if (Tensor* g = input_grad(self, 1)) {
            as_mat(*g, out_f, in_f).noalias() += dy.transpose() * as_mat(self.inputs[0]->value, rows, in_f);
        }
        if (Tensor* g = input_grad(self, 2)) {
            as_mat(*g, 1, out_f) += dy.colwise().sum();
        }
    });
}

Var softmax(const Var& x, int axis) {
    const Shape& s = x.shape();
    const int r = static_cast<int>(s.size());
    const int ax = axis < 0 ? axis + r : axis;
    if (ax < 0 || ax >= r) throw ShapeError("softmax: axis out of range for " + shape_str(s));
    std::int64_t outer = 1, inner = 1;
    for (int i = 0; i < ax; ++i) outer *= s[i];
    for (int i = ax + 1; i < r; ++i) inner *= s[i];
    const std::int64_t n = s[ax];

    Tensor out(s);
    const real* in = x.value().data();
    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t i = 0; i < inner; ++i) {
            const std::int64_t base = o * n * inner + i;
            real hi = in[base];
            for (std::int64_t j = 1; j < n; ++j) hi = std::max(hi, in[base + j * inner]);
            double z = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
                const real e = std::exp(in[base + j * inner] - hi);
                out[base + j * inner] = e;
                z += e;
            }
            const auto inv = static_cast<real>(1.0 / z);
            for (std::int64_t j = 0; j < n; ++j) out[base + j * inner] *= inv;
        }
    return make_op("softmax", std::move(out), {x}, [outer, inner, n](Node& self) {
        Tensor* g = input_grad(self, 0);
        if (!g) return;
        const Tensor& y = self.value;
        for (std::int64_t o = 0; o < outer; ++o)
            for (std::int64_t i = 0; i < inner; ++i) {
                const std::int64_t base = o * n * inner + i;
                double dot = 0.0;
                for (std::int64_t j = 0; j < n; ++j) dot += self.grad[base + j * inner] * y[base + j * inner];
                for (std::int64_t j = 0; j < n; ++j) {
                    const std::int64_t k = base + j * inner;
                    (*g)[k] += y[k] * (self.grad[k] - static_cast<real>(dot));
                }
            }
    });
}

namespace {

// Shared normalisation kernel: `groups` independent groups of `count`
// elements; element e of group q lives at q * group_stride + e * elem_stride.
// Affine parameter index is the group (per_group) or the element.
struct NormLayout {
    std::int64_t groups, count, group_stride, elem_stride;
    bool affine_per_group;
};

Var normalize(const char* name, const Var& x, const Var& gamma, const Var& beta, real eps, NormLayout L) {
    const std::int64_t params = L.affine_per_group ? L.groups : L.count;
    if (gamma.numel() != params || beta.numel() != params) {
        shape_mismatch(name, x.shape(), gamma.shape());
    }
    Tensor out(x.shape());
    std::vector<real> xhat(static_cast<std::size_t>(x.numel()));
    std::vector<real> inv_std(static_cast<std::size_t>(L.groups));
    const real* in = x.value().data();
    const real* gm = gamma.value().data();
    const real* bt = beta.value().data();
    for (std::int64_t q = 0; q < L.groups; ++q) {
        double s = 0.0, s2 = 0.0;
        for (std::int64_t e = 0; e < L.count; ++e) s += in[q * L.group_stride + e * L.elem_stride];
        const double mu = s / static_cast<double>(L.count);
        for (std::int64_t e = 0; e < L.count; ++e) {
            const double d = in[q * L.group_stride + e * L.elem_stride] - mu;
            s2 += d * d;
        }
        const double istd = 1.0 / std::sqrt(s2 / static_cast<double>(L.count) + eps);
        inv_std[static_cast<std::size_t>(q)] = static_cast<real>(istd);
        for (std::int64_t e = 0; e < L.count; ++e) {
            const std::int64_t i = q * L.group_stride + e * L.elem_stride;
            const auto xh = static_cast<real>((in[i] - mu) * istd);
            xhat[static_cast<std::size_t>(i)] = xh;
            const std::int64_t p = L.affine_per_group ? q : e;
            out[i] = gm[p] * xh + bt[p];
        }
    }
    return make_op(name, std::move(out), {x, gamma, beta},
                   [L, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       const real* gm = self.inputs[1]->value.data();
                       Tensor* gx = input_grad(self, 0);
                       Tensor* gg = input_grad(self, 1);
                       Tensor* gb = input_grad(self, 2);
                       for (std::int64_t q = 0; q < L.groups; ++q) {
                           double m1 = 0.0, m2 = 0.0;
                           for (std::int64_t e = 0; e < L.count; ++e) {
                               const std::int64_t i = q * L.group_stride + e * L.elem_stride;
                               const std::int64_t p = L.affine_per_group ? q : e;
                               const real dy = self.grad[i];
                               const real xh = xhat[static_cast<std::size_t>(i)];
                               const double dxh = static_cast<double>(dy) * gm[p];
                               m1 += dxh;
                               m2 += dxh * xh;
                               if (gg) (*gg)[p] += dy * xh;
                               if (gb) (*gb)[p] += dy;
                           }
                           if (!gx) continue;
                           m1 /= static_cast<double>(L.count);
                           m2 /= static_cast<double>(L.count);
                           const real istd = inv_std[static_cast<std::size_t>(q)];
                           for (std::int64_t e = 0; e < L.count; ++e) {
                               const std::int64_t i = q * L.group_stride + e * L.elem_stride;
                               const std::int64_t p = L.affine_per_group ? q : e;
                               const double dxh = static_cast<double>(self.grad[i]) * gm[p];
                               (*gx)[i] += static_cast<real>(istd * (dxh - m1 - xhat[static_cast<std::size_t>(i)] * m2));
                           }
                       }
                   });
}

}  // namespace

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, real eps) {
    if (x.shape().empty()) throw ShapeError("layer_norm: rank-0 input");
    const std::int64_t count = x.shape().back();
    return normalize("layer_norm", x, gamma, beta, eps, {x.numel() / count, count, count, 1, false});
}

Var batch_norm(const Var& x, const Var& gamma, const Var& beta, real eps) {
    if (x.shape().size() < 2) throw ShapeError("batch_norm: need [C, ...], got " + shape_str(x.shape()));
    const std::int64_t channels = x.shape()[0];
    const std::int64_t count = x.numel() / channels;
    return normalize("batch_norm", x, gamma, beta, eps, {channels, count, count, 1, true});
}

Tensor attention_probabilities(const Tensor& q, const Tensor& k, int heads) {
    const std::int64_t n = q.shape()[0], e = q.shape()[1];
    const std::int64_t dh = e / heads;
    const real scale = real(1) / std::sqrt(static_cast<real>(dh));
    Tensor probs(Shape{heads, n, n});
    for (int h = 0; h < heads; ++h) {
        ConstStridedMap qh(q.data() + h * dh, n, dh, Eigen::OuterStride<>(e));
        ConstStridedMap kh(k.data() + h * dh, n, dh, Eigen::OuterStride<>(e));
        MatMap p(probs.data() + h * n * n, n, n);
        p.noalias() = scale * (qh * kh.transpose());
        for (std::int64_t i = 0; i < n; ++i) {
            auto row = p.row(i);
            const real hi = row.maxCoeff();
            row = (row.array() - hi).exp().matrix();
            row /= row.sum();
        }
    }
    return probs;
}

Var scaled_dot_product_attention(const Var& q, const Var& k, const Var& v, int heads) {
    require_rank("attention", q, 2);
    require_same_shape("attention", q, k);
    require_same_shape("attention", q, v);
    const std::int64_t n = q.shape()[0], e = q.shape()[1];
    if (heads < 1 || e % heads != 0) {
        throw ShapeError("attention: embedding " + std::to_string(e) + " not divisible by " +
                         std::to_string(heads) + " heads");
    }
    const std::int64_t dh = e / heads;
    Tensor probs = attention_probabilities(q.value(), k.value(), heads);
    Tensor out(Shape{n, e});
    for (int h = 0; h < heads; ++h) {
        ConstMatMap p(probs.data() + h * n * n, n, n);
        ConstStridedMap vh(v.value().data() + h * dh, n, dh, Eigen::OuterStride<>(e));
        StridedMap oh(out.data() + h * dh, n, dh, Eigen::OuterStride<>(e));
        oh.noalias() = p * vh;
    }
    return make_op("attention", std::move(out), {q, k, v}, [probs = std::move(probs), n, e, dh, heads](Node& self) {
        const real scale = real(1) / std::sqrt(static_cast<real>(dh));
        Tensor* gq = input_grad(self, 0);
        Tensor* gk = input_grad(self, 1);
        Tensor* gv = input_grad(self, 2);
        Mat ds(n, n);
        for (int h = 0; h < heads; ++h) {
            ConstMatMap p(probs.data() + h * n * n, n, n);
            ConstStridedMap dout(self.grad.data() + h * dh, n, dh, Eigen::OuterStride<>(e));
            ConstStridedMap qh(self.inputs[0]->value.data() + h * dh, n, dh, Eigen::OuterStride<>(e));
            ConstStridedMap kh(self.inputs[1]->value.data() + h * dh, n, dh, Eigen::OuterStride<>(e));
            ConstStridedMap vh(self.inputs[2]->value.data() + h * dh, n, dh, Eigen::OuterStride<>(e));
            if (gv) {
                StridedMap g(gv->data() + h * dh, n, dh, Eigen::OuterStride<>(e));
                g.noalias() += p.transpose() * dout;
            }
            if (!gq && !gk) continue;
            ds.noalias() = dout * vh.transpose();  // dP
            for (std::int64_t i = 0; i < n; ++i) {
                const real dot = ds.row(i).dot(p.row(i));
                ds.row(i) = (p.row(i).array() * (ds.row(i).array() - dot)).matrix();
            }
            if (gq) {
                StridedMap g(gq->data() + h * dh, n, dh, Eigen::OuterStride<>(e));
                g.noalias() += scale * (ds * kh);
            }
            if (gk) {
                StridedMap g(gk->data() + h * dh, n, dh, Eigen::OuterStride<>(e));
                g.noalias() += scale * (ds.transpose() * qh);
            }
        }
    });
}

}  // namespace cbct::inline CBCT_REAL_NS::ad
