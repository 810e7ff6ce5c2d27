#include "cbct/ad/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "cbct/errors.hpp"

namespace cbct::inline CBCT_REAL_NS::ad {

std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s[i];
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, real fill) : shape_(std::move(shape)) {
    for (auto d : shape_) {
        if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape_));
    }
    data_.assign(static_cast<std::size_t>(shape_numel(shape_)), fill);
}

Tensor::Tensor(Shape shape, std::vector<real> data)
    : Tensor(from_storage(std::move(shape), Storage(data.begin(), data.end()))) {}

Tensor Tensor::from_storage(Shape shape, Storage data) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    if (static_cast<std::int64_t>(t.data_.size()) != shape_numel(t.shape_)) {
        throw ShapeError("tensor data has " + std::to_string(t.data_.size()) + " elements for shape " +
                         shape_str(t.shape_));
    }
    return t;
}

std::int64_t Tensor::dim(int axis) const {
    const int r = rank();
    const int a = axis < 0 ? axis + r : axis;
    if (a < 0 || a >= r) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape_));
    return shape_[static_cast<std::size_t>(a)];
}

real Tensor::item() const {
    if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape_));
    return data_[0];
}

void Tensor::fill(real v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_numel(shape) != numel()) {
        throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    return from_storage(std::move(shape), data_);
}

}  // namespace cbct::inline CBCT_REAL_NS::ad
