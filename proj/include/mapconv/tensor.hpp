#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mapconv/errors.hpp"

namespace mapconv {

// Dense row-major array. Images are (C, H, W), mesh signals are (C, N);
// the first axis is always channels and the rest is the flattened spatial
// domain.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(std::vector<std::size_t> shape, T fill = T(0))
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  BasicTensor(std::vector<std::size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string());
    }
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::size_t channels() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t spatial_size() const {
    return shape_.empty() ? 0 : data_.size() / std::max<std::size_t>(shape_[0], 1);
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Element (c, s) of the channel-first flattened view.
  T& at(std::size_t c, std::size_t s) { return data_[c * spatial_size() + s]; }
  const T& at(std::size_t c, std::size_t s) const { return data_[c * spatial_size() + s]; }

  std::span<T> channel(std::size_t c) { return {data_.data() + c * spatial_size(), spatial_size()}; }
  std::span<const T> channel(std::size_t c) const {
    return {data_.data() + c * spatial_size(), spatial_size()};
  }

  void reshape(std::vector<std::size_t> shape) {
    if (element_count(shape) != data_.size()) {
      throw DimensionError("cannot reshape " + shape_string() + " to a different element count");
    }
    shape_ = std::move(shape);
  }

  std::string shape_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    if (shape.empty()) return 0;
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<double>;
using TensorF = BasicTensor<float>;

}  // namespace mapconv
