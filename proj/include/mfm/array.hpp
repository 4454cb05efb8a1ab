#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

#include "mfm/errors.hpp"

namespace mfm {

using Shape = std::vector<std::size_t>;

class DenseArray;
// Named arrays, ordered by name so iteration (checkpoints, reductions) is
// deterministic.
using ParamMap = std::map<std::string, DenseArray>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Row-major dense array of 64-bit floats. Rank 0 (empty shape) is a scalar
// with one element. Public operations keep values finite; NaN/Inf is an
// error state surfaced as NumericError by the consumers that can produce it.
class DenseArray {
  public:
    DenseArray() : shape_{}, data_(1, 0.0) {}
    explicit DenseArray(Shape shape);
    DenseArray(Shape shape, std::vector<double> data);
    DenseArray(Shape shape, double fill);

    static DenseArray scalar(double v);
    static DenseArray zeros(Shape shape) { return DenseArray(std::move(shape)); }
    static DenseArray from(std::initializer_list<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // 2-D accessors; bounds are the caller's responsibility.
    double& at2(std::size_t row, std::size_t col) { return data_[row * shape_[1] + col]; }
    double at2(std::size_t row, std::size_t col) const { return data_[row * shape_[1] + col]; }

    double scalar_value() const;
    bool all_finite() const;
    bool same_shape(const DenseArray& other) const { return shape_ == other.shape_; }

    bool operator==(const DenseArray& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

  private:
    Shape shape_;
    std::vector<double> data_;
};

void require_same_shape(const DenseArray& a, const DenseArray& b, const std::string& where);

double l2_norm(const DenseArray& a);
double squared_distance(const DenseArray& a, const DenseArray& b);

}  // namespace mfm
