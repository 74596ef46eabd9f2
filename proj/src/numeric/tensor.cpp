#include "pmoe/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "pmoe/errors.hpp"

namespace pmoe {

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  if (shape_.size() > 2) throw DimensionError("tensor rank must be <= 2, got shape " + shape_string(shape_));
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > 2) throw DimensionError("tensor rank must be <= 2, got shape " + shape_string(shape_));
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("shape " + shape_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const noexcept { return rank() == 2 ? shape_[0] : 1; }

std::size_t Tensor::cols() const noexcept {
  if (rank() == 2) return shape_[1];
  if (rank() == 1) return shape_[0];
  return 1;
}

double Tensor::item() const {
  if (data_.size() != 1) throw DimensionError("item() needs a single element, got shape " + shape_string(shape_));
  return data_[0];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::row(std::size_t r) const {
  if (r >= rows()) throw DimensionError("row " + std::to_string(r) + " out of range for shape " + shape_string(shape_));
  const auto first = data_.begin() + static_cast<std::ptrdiff_t>(r * cols());
  return Tensor::vector(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(cols())));
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) return Tensor(Shape{0, 0});
  const std::size_t width = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * width);
  for (const Tensor& r : rows) {
    if (r.size() != width) {
      throw DimensionError("stack_rows: row of shape " + shape_string(r.shape()) + " vs width " +
                           std::to_string(width));
    }
    data.insert(data.end(), r.values().begin(), r.values().end());
  }
  return Tensor::matrix(rows.size(), width, std::move(data));
}

bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept {
  return a.shape() == b.shape() &&
         (a.size() == 0 || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace pmoe
