#include <algorithm>
#include <cmath>
#include <numbers>

#include "ops_internal.hpp"

namespace cbct::inline CBCT_REAL_NS::ad {

using namespace detail;

Var add(const Var& a, const Var& b) {
    require_same_shape("add", a, b);
    Tensor out = a.value();
    const real* pb = b.value().data();
    real* po = out.data();
    for (std::int64_t i = 0; i < out.numel(); ++i) po[i] += pb[i];
    return make_op("add", std::move(out), {a, b}, [](Node& self) {
        for (std::size_t k = 0; k < 2; ++k) {
            if (Tensor* g = input_grad(self, k)) {
                for (std::int64_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i];
            }
        }
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape("sub", a, b);
    Tensor out = a.value();
    const real* pb = b.value().data();
    real* po = out.data();
    for (std::int64_t i = 0; i < out.numel(); ++i) po[i] -= pb[i];
    return make_op("sub", std::move(out), {a, b}, [](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            for (std::int64_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i];
        }
        if (Tensor* g = input_grad(self, 1)) {
            for (std::int64_t i = 0; i < g->numel(); ++i) (*g)[i] -= self.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape("mul", a, b);
    Tensor out = a.value();
    const real* pb = b.value().data();
    real* po = out.data();
    for (std::int64_t i = 0; i < out.numel(); ++i) po[i] *= pb[i];
    return make_op("mul", std::move(out), {a, b}, [](Node& self) {
        const Tensor& va = self.inputs[0]->value;
        const Tensor& vb = self.inputs[1]->value;
        if (Tensor* g = input_grad(self, 0)) {
            for (std::int64_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i] * vb[i];
        }
        if (Tensor* g = input_grad(self, 1)) {
            for (std::int64_t i = 0; i < g->numel(); ++i) (*g)[i] += self.grad[i] * va[i];
        }
    });
}

Var mul_scalar(const Var& a, real s) {
    Tensor out = a.value();
    for (auto& v : out.values()) v *= s;
    return make_op("mul_scalar", std::move(out), {a}, [s](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            for (std::int64_t i = 0; i < g->numel(); ++i) (*g)[i] += s * self.grad[i];
        }
    });
}

Var relu(const Var& x) {
    Tensor out = x.value();
    for (auto& v : out.values()) v = v > real(0) ? v : real(0);
    return make_op("relu", std::move(out), {x}, [](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            const Tensor& in = self.inputs[0]->value;
            for (std::int64_t i = 0; i < g->numel(); ++i) {
                if (in[i] > real(0)) (*g)[i] += self.grad[i];
            }
        }
    });
}

Var gelu(const Var& x) {
    Tensor out = x.value();
    for (auto& v : out.values()) v = real(0.5) * v * (real(1) + std::erf(v / std::numbers::sqrt2_v<real>));
    return make_op("gelu", std::move(out), {x}, [](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            const Tensor& in = self.inputs[0]->value;
            const real inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<real> / std::numbers::sqrt2_v<real>;
            for (std::int64_t i = 0; i < g->numel(); ++i) {
                const real v = in[i];
                const real cdf = real(0.5) * (real(1) + std::erf(v / std::numbers::sqrt2_v<real>));
                const real pdf = inv_sqrt_2pi * std::exp(real(-0.5) * v * v);
                (*g)[i] += self.grad[i] * (cdf + v * pdf);
            }
        }
    });
}

Var sum(const Var& x) {
    double acc = 0.0;
    for (real v : x.value().values()) acc += v;
    return make_op("sum", Tensor::scalar(static_cast<real>(acc)), {x}, [](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            const real d = self.grad[0];
            for (auto& v : g->values()) v += d;
        }
    });
}

Var mean(const Var& x) {
    double acc = 0.0;
    for (real v : x.value().values()) acc += v;
    const auto n = static_cast<double>(x.numel());
    return make_op("mean", Tensor::scalar(static_cast<real>(acc / n)), {x}, [n](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            const auto d = static_cast<real>(self.grad[0] / n);
            for (auto& v : g->values()) v += d;
        }
    });
}

Var mse(const Var& a, const Var& b) {
    require_same_shape("mse", a, b);
    const real* pa = a.value().data();
    const real* pb = b.value().data();
    const std::int64_t n = a.numel();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pa[i]) - pb[i];
        acc += d * d;
    }
    return make_op("mse", Tensor::scalar(static_cast<real>(acc / static_cast<double>(n))), {a, b},
                   [n](Node& self) {
                       const Tensor& va = self.inputs[0]->value;
                       const Tensor& vb = self.inputs[1]->value;
                       const real scale = real(2) * self.grad[0] / static_cast<real>(n);
                       Tensor* ga = input_grad(self, 0);
                       Tensor* gb = input_grad(self, 1);
                       for (std::int64_t i = 0; i < n; ++i) {
                           const real d = scale * (va[i] - vb[i]);
                           if (ga) (*ga)[i] += d;
                           if (gb) (*gb)[i] -= d;
                       }
                   });
}

Var channel_stats(const Var& x, real eps) {
    if (x.shape().empty() || x.shape()[0] < 1 || x.numel() == 0) {
        throw ShapeError("channel_stats: input " + shape_str(x.shape()) + " has no channels");
    }
    const std::int64_t channels = x.shape()[0];
    const std::int64_t inner = x.numel() / channels;
    Tensor out(Shape{2, channels});
    const real* px = x.value().data();
    for (std::int64_t c = 0; c < channels; ++c) {
        const real* p = px + c * inner;
        double m = 0.0;
        for (std::int64_t i = 0; i < inner; ++i) m += p[i];
        m /= static_cast<double>(inner);
        double v = 0.0;
        for (std::int64_t i = 0; i < inner; ++i) v += (p[i] - m) * (p[i] - m);
        v /= static_cast<double>(inner);
        out[c] = static_cast<real>(m);
        out[channels + c] = static_cast<real>(std::sqrt(v + eps));
    }
    return make_op("channel_stats", std::move(out), {x}, [channels, inner](Node& self) {
        if (Tensor* g = input_grad(self, 0)) {
            const real* px = self.inputs[0]->value.data();
            const auto n = static_cast<real>(inner);
            for (std::int64_t c = 0; c < channels; ++c) {
                const real m = self.value[c];
                const real s = self.value[channels + c];
                const real gm = self.grad[c] / n;
                const real gs = self.grad[channels + c] / (n * s);
                for (std::int64_t i = 0; i < inner; ++i) {
                    const std::int64_t k = c * inner + i;
                    (*g)[k] += gm + gs * (px[k] - m);
                }
            }
        }
    });
}

Var channel_normalize(const Var& x, const Var& stats) {
    if (x.shape().empty() || stats.shape() != Shape{2, x.shape()[0]}) {
        shape_mismatch("channel_normalize", x.shape(), stats.shape());
    }
    const std::int64_t channels = x.shape()[0];
    const std::int64_t inner = x.numel() / channels;
    Tensor out = x.value();
    const Tensor& st = stats.value();
    for (std::int64_t c = 0; c < channels; ++c) {
        real* p = out.data() + c * inner;
        for (std::int64_t i = 0; i < inner; ++i) p[i] = (p[i] - st[c]) / st[channels + c];
    }
    return make_op("channel_normalize", std::move(out), {x, stats}, [channels, inner](Node& self) {
        const Tensor& st = self.inputs[1]->value;
        Tensor* gx = input_grad(self, 0);
        Tensor* gs = input_grad(self, 1);
        for (std::int64_t c = 0; c < channels; ++c) {
            const real inv = real(1) / st[channels + c];
            double gm = 0.0, gsd = 0.0;
            for (std::int64_t i = 0; i < inner; ++i) {
                const std::int64_t k = c * inner + i;
                const real g = self.grad[k];
                if (gx) (*gx)[k] += g * inv;
                gm += g;
                gsd += static_cast<double>(g) * self.value[k];
            }
            if (gs) {
                (*gs)[c] -= static_cast<real>(gm) * inv;
                (*gs)[channels + c] -= static_cast<real>(gsd) * inv;
            }
        }
    });
}

}  // namespace cbct::inline CBCT_REAL_NS::ad
