#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace gfs {

// Row-major matrix; vectors are rows x 1. Rows index features, columns index
// the batch.
template <typename T>
struct Tensor {
  size_t rows = 0, cols = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(size_t r, size_t c) : rows(r), cols(c), v(r * c, T(0)) {}
  Tensor(size_t r, size_t c, std::vector<T> data)
      : rows(r), cols(c), v(std::move(data)) {
    if (v.size() != rows * cols) throw InvalidArgument("tensor size mismatch");
  }

  size_t size() const { return v.size(); }
  T& at(size_t r, size_t c) { return v[r * cols + c]; }
  const T& at(size_t r, size_t c) const { return v[r * cols + c]; }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  bool same_shape(const Tensor& o) const {
    return rows == o.rows && cols == o.cols;
  }
  void release() {
    v.clear();
    v.shrink_to_fit();
  }
};

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  void zero_grad() {
    if (!grad.same_shape(value)) grad = Tensor<T>(value.rows, value.cols);
    std::fill(grad.v.begin(), grad.v.end(), T(0));
  }
};

}  // namespace gfs
