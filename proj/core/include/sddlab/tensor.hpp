#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sddlab/error.hpp"

namespace sddlab {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

// Dense row-major array. A tensor that lives on a Tape carries the id of its
// node; free-standing tensors have no tape id.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  // A default-constructed tensor is the scalar 0.
  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)), values_(shape_size(shape_)) {
    check_extents();
  }

  Tensor(Shape shape, std::vector<T> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    check_extents();
    if (values_.size() != shape_size(shape_)) {
      throw DimensionError("tensor of shape " + shape_string(shape_) + " needs " +
                           std::to_string(shape_size(shape_)) + " values, got " +
                           std::to_string(values_.size()));
    }
  }

  static Tensor full(Shape shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.values_.begin(), t.values_.end(), value);
    return t;
  }

  static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  T* data() noexcept { return values_.data(); }
  const T* data() const noexcept { return values_.data(); }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  // Row/column access for rank-2 tensors.
  T& at(std::size_t row, std::size_t col) { return values_[row * shape_[1] + col]; }
  const T& at(std::size_t row, std::size_t col) const {
    return values_[row * shape_[1] + col];
  }

  T item() const {
    if (values_.size() != 1) {
      throw ContractError("item() on tensor of shape " + shape_string(shape_));
    }
    return values_[0];
  }

  bool requires_grad() const noexcept { return requires_grad_; }
  Tensor& set_requires_grad(bool flag) noexcept {
    requires_grad_ = flag;
    return *this;
  }

  std::optional<std::size_t> tape_id() const noexcept { return tape_id_; }
  void set_tape_id(std::optional<std::size_t> id) noexcept { tape_id_ = id; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](T x) { return std::isfinite(x); });
  }

  // Same shape, new storage; the tape binding is not copied.
  Tensor reshaped(Shape shape) const {
    Tensor out(std::move(shape), values_);
    return out;
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> converted(values_.begin(), values_.end());
    Tensor<U> out(shape_, std::move(converted));
    out.set_requires_grad(requires_grad_);
    return out;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  void check_extents() const {
    for (std::size_t e : shape_) {
      if (e == 0) {
        throw DimensionError("tensor extents must be positive, got " + shape_string(shape_));
      }
    }
  }

  Shape shape_;
  std::vector<T> values_ = std::vector<T>(1);
  bool requires_grad_ = false;
  std::optional<std::size_t> tape_id_;
};

}  // namespace sddlab
