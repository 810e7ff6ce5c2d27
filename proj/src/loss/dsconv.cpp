#include <random>

#include "cbct/errors.hpp"
#include "cbct/loss/loss.hpp"

namespace cbct::inline CBCT_REAL_NS::loss {

DSConv make_dsconv(const VolumeGrid& grid, std::uint64_t seed) {
    grid.validate();
    std::mt19937_64 rng(seed);
    DSConv d;
    d.n1 = grid.nx;
    d.params.add("weight", ad::glorot_normal({3, grid.nx}, grid.nx, 3, rng));
    d.params.add("bias", ad::Tensor(ad::Shape{3}));
    return d;
}

ad::Var dsconv_apply(const DSConv& d, const ad::Var& v) {
    const auto& s = v.shape();
    if (s.size() != 3 || s[2] != d.n1) {
        throw ShapeError("dsconv: expected [nz, ny, " + std::to_string(d.n1) + "], got " + ad::shape_str(s));
    }
    const std::int64_t nz = s[0], ny = s[1], nx = s[2];
    ad::Var rows = ad::reshape(ad::permute(v, {1, 0, 2}), {ny * nz, nx});
    ad::Var y = ad::linear(rows, d.params.at("weight"), d.params.at("bias"));
    return ad::reshape(ad::permute(y, {1, 0}), {3, ny, nz});
}

}  // namespace cbct::inline CBCT_REAL_NS::loss
