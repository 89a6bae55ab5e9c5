#include "ecnp/array.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "ecnp/error.hpp"

namespace ecnp {

int64_t shape_size(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

bool shape_eq(const Shape& a, const Shape& b) { return a == b; }

bool shape_is_suffix(const Shape& suffix, const Shape& shape) {
    if (suffix.size() > shape.size()) return false;
    size_t off = shape.size() - suffix.size();
    for (size_t i = 0; i < suffix.size(); ++i) {
        if (suffix[i] != shape[off + i]) return false;
    }
    return true;
}

static std::shared_ptr<double[]> alloc(int64_t n) {
    return std::shared_ptr<double[]>(new double[static_cast<size_t>(n)]);
}

Array Array::zeros(Shape shape) {
    int64_t n = shape_size(shape);
    auto buf = alloc(n);
    std::memset(buf.get(), 0, static_cast<size_t>(n) * sizeof(double));
    return Array(std::move(shape), std::move(buf), n);
}

Array Array::full(Shape shape, double value) {
    int64_t n = shape_size(shape);
    auto buf = alloc(n);
    for (int64_t i = 0; i < n; ++i) buf[i] = value;
    return Array(std::move(shape), std::move(buf), n);
}

Array Array::scalar(double value) { return full({}, value); }

Array Array::from(Shape shape, std::vector<double> values) {
    int64_t n = shape_size(shape);
    if (n != static_cast<int64_t>(values.size()))
        raise(Error::Kind::ShapeMismatch,
              "array data length " + std::to_string(values.size()) +
                  " does not match shape " + shape_str(shape));
    auto buf = alloc(n);
    std::memcpy(buf.get(), values.data(), static_cast<size_t>(n) * sizeof(double));
    return Array(std::move(shape), std::move(buf), n);
}

Array Array::from(Shape shape, std::initializer_list<double> values) {
    return from(std::move(shape), std::vector<double>(values));
}

Array Array::clone() const {
    auto buf = alloc(size_);
    std::memcpy(buf.get(), data_.get(), static_cast<size_t>(size_) * sizeof(double));
    return Array(shape_, std::move(buf), size_);
}

Array Array::reshaped(Shape shape) const {
    if (shape_size(shape) != size_)
        raise(Error::Kind::ShapeMismatch,
              "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    return Array(std::move(shape), data_, size_);
}

bool Array::all_finite() const {
    for (int64_t i = 0; i < size_; ++i) {
        if (!std::isfinite(data_[i])) return false;
    }
    return true;
}

void Array::fill(double value) {
    for (int64_t i = 0; i < size_; ++i) data_[i] = value;
}

}  // namespace ecnp
