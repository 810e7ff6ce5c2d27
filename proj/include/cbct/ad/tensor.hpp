#pragma once

#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "cbct/ad/real.hpp"

namespace cbct::inline CBCT_REAL_NS::ad {

using Shape = std::vector<std::int64_t>;

/// Cache-line aligned storage, so vectorised kernels see the same alignment
/// (and hence the same summation order) on every run.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const {
        return true;
    }
};

using Storage = std::vector<real, AlignedAllocator<real>>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

/// Dense row-major array. A rank-0 tensor holds one element.
class Tensor {
 public:
    Tensor() : shape_{0} {}
    explicit Tensor(Shape shape, real fill = real(0));
    Tensor(Shape shape, std::vector<real> data);

    static Tensor scalar(real v) { return Tensor(Shape{}, std::vector<real>{v}); }

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    /// Negative axes count from the end.
    std::int64_t dim(int axis) const;
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

    real* data() { return data_.data(); }
    const real* data() const { return data_.data(); }
    std::span<real> values() { return data_; }
    std::span<const real> values() const { return data_; }
    real& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    real operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    real item() const;
    void fill(real v);
    Tensor reshaped(Shape shape) const;

    bool operator==(const Tensor&) const = default;

 private:
    static Tensor from_storage(Shape shape, Storage data);

    Shape shape_;
    Storage data_;
};

}  // namespace cbct::inline CBCT_REAL_NS::ad
