#include "mfm/array.hpp"

#include <cmath>
#include <sstream>

namespace mfm {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

DenseArray::DenseArray(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

DenseArray::DenseArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_)) {
        throw ShapeError("DenseArray: data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str(shape_));
    }
}

DenseArray::DenseArray(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

DenseArray DenseArray::scalar(double v) {
    DenseArray a;
    a.data_[0] = v;
    return a;
}

DenseArray DenseArray::from(std::initializer_list<double> values) {
    return DenseArray({values.size()}, std::vector<double>(values));
}

double DenseArray::scalar_value() const {
    if (numel() != 1) {
        throw ShapeError("scalar_value on array of shape " + shape_str(shape_));
    }
    return data_[0];
}

bool DenseArray::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void require_same_shape(const DenseArray& a, const DenseArray& b, const std::string& where) {
    if (!a.same_shape(b)) {
        throw ShapeError(where + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
}

double l2_norm(const DenseArray& a) {
    double s = 0.0;
    for (double v : a.vec()) s += v * v;
    return std::sqrt(s);
}

double squared_distance(const DenseArray& a, const DenseArray& b) {
    require_same_shape(a, b, "squared_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace mfm
