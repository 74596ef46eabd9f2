#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pmoe {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles, rank 0 (scalar), 1 (vector) or 2 (matrix).
///
/// A rank-1 tensor of length n behaves as a 1 x n row wherever a matrix is
/// expected, so single samples and mini-batches share the same kernels.
class Tensor {
 public:
  Tensor() : shape_{0} {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  // Matrix view: rank 2 -> (shape[0], shape[1]); rank 1 -> (1, n); rank 0 -> (1, 1).
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  // Value of a single-element tensor.
  double item() const;

  void fill(double value);
  bool all_finite() const noexcept;
  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

  // Row r of a matrix as its own rank-1 tensor.
  Tensor row(std::size_t r) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Stacks equal-length rank-1 tensors as the rows of a matrix.
Tensor stack_rows(std::span<const Tensor> rows);

// Bitwise comparison (distinguishes -0.0 from 0.0, equal NaN payloads).
bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept;

}  // namespace pmoe
