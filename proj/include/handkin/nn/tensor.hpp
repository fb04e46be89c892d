#pragma once

#include "handkin/common.hpp"

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace handkin::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& s);
std::string shape_string(const Shape& s);

// Dense row-major buffer of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // [n, c, t] for rank-3 tensors.
  double& at(std::size_t n, std::size_t c, std::size_t t) { return data_[(n * shape_[1] + c) * shape_[2] + t]; }
  double at(std::size_t n, std::size_t c, std::size_t t) const { return data_[(n * shape_[1] + c) * shape_[2] + t]; }

  void fill(double v);
  Tensor reshaped(Shape shape) const;
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }
  static Tensor from_matrix(const Matrix& m);  // rows x cols
  Matrix to_matrix() const;                    // rank-2 only

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace handkin::nn
