#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hsicnn/error.hpp"

namespace hsicnn {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(std::span<const std::size_t> shape) {
  std::ostringstream oss;
  oss << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) oss << ',';
    oss << shape[i];
  }
  oss << ']';
  return oss.str();
}

inline std::size_t shape_volume(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

// Dense row-major n-dimensional array. The last axis varies fastest.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)) {
    if (shape_.empty()) {
      throw Error(ErrorKind::invalid_shape, "tensor needs at least one axis");
    }
    for (std::size_t extent : shape_) {
      if (extent == 0) {
        throw Error(ErrorKind::invalid_shape,
                    "zero extent in shape " + shape_string(shape_));
      }
    }
    compute_strides();
    elems_.assign(shape_volume(shape_), fill);
  }

  Tensor(std::initializer_list<std::size_t> shape, T fill = T{0})
      : Tensor(Shape(shape), fill) {}

  static Tensor create(Shape shape, T fill) { return Tensor(std::move(shape), fill); }

  static Tensor from_values(Shape shape, std::vector<T> values) {
    Tensor t(std::move(shape));
    if (values.size() != t.size()) {
      throw Error(ErrorKind::invalid_shape,
                  "value count " + std::to_string(values.size()) +
                      " does not match shape " + shape_string(t.shape_));
    }
    t.elems_ = std::move(values);
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  const Shape& strides() const noexcept { return strides_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return elems_.size(); }
  bool empty() const noexcept { return elems_.empty(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  std::span<T> data() noexcept { return elems_; }
  std::span<const T> data() const noexcept { return elems_; }
  T* raw() noexcept { return elems_.data(); }
  const T* raw() const noexcept { return elems_.data(); }

  T& operator[](std::size_t i) noexcept { return elems_[i]; }
  const T& operator[](std::size_t i) const noexcept { return elems_[i]; }

  std::size_t offset(std::span<const std::size_t> index) const {
    if (index.size() != shape_.size()) {
      throw Error(ErrorKind::bounds, "index rank " + std::to_string(index.size()) +
                                         " vs tensor rank " +
                                         std::to_string(shape_.size()));
    }
    std::size_t off = 0;
    for (std::size_t a = 0; a < index.size(); ++a) {
      if (index[a] >= shape_[a]) {
        throw Error(ErrorKind::bounds, "index " + std::to_string(index[a]) +
                                           " out of range on axis " +
                                           std::to_string(a));
      }
      off += index[a] * strides_[a];
    }
    return off;
  }

  std::size_t offset(std::initializer_list<std::size_t> index) const {
    return offset(std::span<const std::size_t>(index.begin(), index.size()));
  }

  T& at(std::initializer_list<std::size_t> index) { return elems_[offset(index)]; }
  const T& at(std::initializer_list<std::size_t> index) const {
    return elems_[offset(index)];
  }
  T& at(std::span<const std::size_t> index) { return elems_[offset(index)]; }
  const T& at(std::span<const std::size_t> index) const {
    return elems_[offset(index)];
  }

  void fill(T value) { std::fill(elems_.begin(), elems_.end(), value); }

  Tensor reshape(Shape new_shape) const& {
    Tensor copy = *this;
    return std::move(copy).reshape(std::move(new_shape));
  }

  Tensor reshape(Shape new_shape) && {
    for (std::size_t extent : new_shape) {
      if (extent == 0) {
        throw Error(ErrorKind::invalid_shape,
                    "zero extent in shape " + shape_string(new_shape));
      }
    }
    if (new_shape.empty() || shape_volume(new_shape) != elems_.size()) {
      throw Error(ErrorKind::invalid_shape,
                  "cannot reshape " + shape_string(shape_) + " to " +
                      shape_string(new_shape));
    }
    shape_ = std::move(new_shape);
    compute_strides();
    return std::move(*this);
  }

  // Copies the hyper-rectangle [offsets, offsets + sizes) into a new tensor.
  Tensor slice_block(std::span<const std::size_t> offsets,
                     std::span<const std::size_t> sizes) const {
    if (offsets.size() != rank() || sizes.size() != rank()) {
      throw Error(ErrorKind::bounds, "slice rank does not match tensor rank");
    }
    for (std::size_t a = 0; a < rank(); ++a) {
      if (sizes[a] == 0 || offsets[a] + sizes[a] > shape_[a]) {
        throw Error(ErrorKind::bounds,
                    "slice [" + std::to_string(offsets[a]) + ", +" +
                        std::to_string(sizes[a]) + ") exceeds extent " +
                        std::to_string(shape_[a]) + " on axis " +
                        std::to_string(a));
      }
    }
    Tensor out(Shape(sizes.begin(), sizes.end()));
    const std::size_t inner = sizes.back();
    const std::size_t rows = out.size() / inner;
    Shape idx(rank(), 0);
    for (std::size_t r = 0; r < rows; ++r) {
      // Decompose r over all axes but the last.
      std::size_t rem = r;
      std::size_t src = offsets.back();
      for (std::size_t a = rank() - 1; a-- > 0;) {
        idx[a] = rem % sizes[a];
        rem /= sizes[a];
        src += (offsets[a] + idx[a]) * strides_[a];
      }
      std::copy_n(elems_.begin() + static_cast<std::ptrdiff_t>(src), inner,
                  out.elems_.begin() + static_cast<std::ptrdiff_t>(r * inner));
    }
    return out;
  }

  Tensor slice_block(std::initializer_list<std::size_t> offsets,
                     std::initializer_list<std::size_t> sizes) const {
    return slice_block(std::span<const std::size_t>(offsets.begin(), offsets.size()),
                       std::span<const std::size_t>(sizes.begin(), sizes.size()));
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    std::transform(elems_.begin(), elems_.end(), out.data().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.elems_ == b.elems_;
  }

 private:
  void compute_strides() {
    strides_.assign(shape_.size(), 1);
    for (std::size_t a = shape_.size(); a-- > 1;) {
      strides_[a - 1] = strides_[a] * shape_[a];
    }
  }

  Shape shape_;
  Shape strides_;
  std::vector<T> elems_;
};

}  // namespace hsicnn
