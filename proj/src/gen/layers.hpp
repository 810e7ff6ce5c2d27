#pragma once

#include <random>
#include <string>

#include "cbct/ad/ops.hpp"
#include "cbct/ad/param_store.hpp"

namespace cbct::inline CBCT_REAL_NS::gen::detail {

using ad::ParamStore;
using ad::Shape;
using ad::Tensor;
using ad::Var;
using ad::real;

inline void add_linear(ParamStore& ps, const std::string& name, int in, int out, std::mt19937_64& rng) {
    ps.add(name + ".weight", ad::glorot_normal({out, in}, in, out, rng));
    ps.add(name + ".bias", Tensor(Shape{out}));
}

inline void add_conv3d(ParamStore& ps, const std::string& name, int in, int out, int k, bool bias,
                       std::mt19937_64& rng) {
    const int rf = k * k * k;
    ps.add(name + ".weight", ad::glorot_normal({out, in, k, k, k}, std::int64_t{in} * rf, std::int64_t{out} * rf, rng));
    if (bias) ps.add(name + ".bias", Tensor(Shape{out}));
}

inline void add_conv_transpose3d(ParamStore& ps, const std::string& name, int in, int out, std::mt19937_64& rng) {
    ps.add(name + ".weight", ad::glorot_normal({in, out, 2, 2, 2}, std::int64_t{in} * 8, std::int64_t{out} * 8, rng));
    ps.add(name + ".bias", Tensor(Shape{out}));
}

inline void add_norm(ParamStore& ps, const std::string& name, int n) {
    ps.add(name + ".gamma", Tensor(Shape{n}, real(1)));
    ps.add(name + ".beta", Tensor(Shape{n}));
}

/// (conv 3^3 -> batch_norm -> relu) x 2.
inline void add_conv_block(ParamStore& ps, const std::string& name, int in, int out, std::mt19937_64& rng) {
    add_conv3d(ps, name + ".conv1", in, out, 3, false, rng);
    add_norm(ps, name + ".bn1", out);
    add_conv3d(ps, name + ".conv2", out, out, 3, false, rng);
    add_norm(ps, name + ".bn2", out);
}

inline Var linear(const ParamStore& ps, const std::string& name, const Var& x) {
    return ad::linear(x, ps.at(name + ".weight"), ps.at(name + ".bias"));
}

inline Var conv_block(const ParamStore& ps, const std::string& name, Var x) {
    for (const char* i : {"1", "2"}) {
        x = ad::conv3d(x, ps.at(name + ".conv" + i + ".weight"), Var{}, {1, 1, 1});
        x = ad::batch_norm(x, ps.at(name + ".bn" + i + ".gamma"), ps.at(name + ".bn" + i + ".beta"));
        x = ad::relu(x);
    }
    return x;
}

inline Var up(const ParamStore& ps, const std::string& name, const Var& x) {
    return ad::conv_transpose3d(x, ps.at(name + ".weight"), ps.at(name + ".bias"));
}

}  // namespace cbct::inline CBCT_REAL_NS::gen::detail
