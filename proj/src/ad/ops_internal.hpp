#pragma once

#include <Eigen/Core>
#include <string>

#include "cbct/ad/ops.hpp"
#include "cbct/errors.hpp"

namespace cbct::inline CBCT_REAL_NS::ad::detail {

using Mat = Eigen::Matrix<real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using StridedMap = Eigen::Map<Mat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const Mat, 0, Eigen::OuterStride<>>;

inline MatMap as_mat(Tensor& t, std::int64_t rows, std::int64_t cols) { return MatMap(t.data(), rows, cols); }
inline ConstMatMap as_mat(const Tensor& t, std::int64_t rows, std::int64_t cols) {
    return ConstMatMap(t.data(), rows, cols);
}

[[noreturn]] inline void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

inline void require_same_shape(const char* op, const Var& a, const Var& b) {
    if (a.shape() != b.shape()) shape_mismatch(op, a.shape(), b.shape());
}

inline void require_rank(const char* op, const Var& x, int rank) {
    if (static_cast<int>(x.shape().size()) != rank) {
        throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(x.shape()));
    }
}

}  // namespace cbct::inline CBCT_REAL_NS::ad::detail
