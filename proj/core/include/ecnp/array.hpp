#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ecnp {

using Shape = std::vector<int64_t>;

int64_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);
bool shape_eq(const Shape& a, const Shape& b);
/// True when `suffix` equals the trailing axes of `shape` (rank-0 matches
/// everything); used for elementwise broadcasting over leading axes.
bool shape_is_suffix(const Shape& suffix, const Shape& shape);

/// Dense row-major array of 64-bit reals. The buffer is shared between
/// copies; operations always allocate fresh outputs, and only a buffer's
/// owner (e.g. the optimizer updating parameters) may write through data().
class Array {
public:
    Array() = default;

    static Array zeros(Shape shape);
    static Array full(Shape shape, double value);
    static Array scalar(double value);
    static Array from(Shape shape, std::vector<double> values);
    static Array from(Shape shape, std::initializer_list<double> values);

    const Shape& shape() const noexcept { return shape_; }
    int64_t size() const noexcept { return size_; }
    int64_t rank() const noexcept { return static_cast<int64_t>(shape_.size()); }
    int64_t dim(int64_t axis) const { return shape_[static_cast<size_t>(axis)]; }
    bool empty() const noexcept { return data_ == nullptr; }

    double* data() noexcept { return data_.get(); }
    const double* data() const noexcept { return data_.get(); }
    double operator[](int64_t i) const { return data_[i]; }
    double& operator[](int64_t i) { return data_[i]; }
    std::span<const double> values() const { return {data_.get(), static_cast<size_t>(size_)}; }

    /// Deep copy with its own buffer.
    Array clone() const;
    /// Same buffer, new shape; sizes must agree.
    Array reshaped(Shape shape) const;

    bool all_finite() const;
    void fill(double value);

private:
    Array(Shape shape, std::shared_ptr<double[]> data, int64_t size)
        : shape_(std::move(shape)), data_(std::move(data)), size_(size) {}

    Shape shape_;
    std::shared_ptr<double[]> data_;
    int64_t size_ = 0;
};

}  // namespace ecnp
