#include "pmoe/ops.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "pmoe/errors.hpp"

namespace pmoe::ops {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

}  // namespace

Tensor affine_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2 || x.rank() == 0 || x.cols() != w.cols()) {
    throw DimensionError("affine: input " + shape_string(x.shape()) + " does not conform to weight " +
                         shape_string(w.shape()));
  }
  if (!b.empty() && b.size() != w.rows()) {
    throw DimensionError("affine: bias " + shape_string(b.shape()) + " does not conform to weight " +
                         shape_string(w.shape()));
  }
  const std::size_t batch = x.rows();
  const std::size_t out = w.rows();
  Tensor y = x.rank() == 1 ? Tensor(Shape{out}) : Tensor(Shape{batch, out});
  Map ym(y.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(out));
  ym.noalias() = as_matrix(x) * as_matrix(w).transpose();
  if (!b.empty()) {
    const Eigen::Map<const Eigen::RowVectorXd> bv(b.data(), static_cast<Eigen::Index>(out));
    ym.rowwise() += bv;
  }
  return y;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  Tensor c(Shape{a.rows(), b.cols()});
  Map(c.data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(b.cols())).noalias() =
      as_matrix(a) * as_matrix(b);
  return c;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor softmax(const Tensor& z) {
  if (z.empty()) throw DomainError("softmax of an empty tensor");
  Tensor s = z;
  const std::size_t cols = z.cols();
  for (std::size_t r = 0; r < z.rows(); ++r) {
    double* row = s.data() + r * cols;
    const double peak = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - peak);
      total += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) row[c] /= total;
  }
  return s;
}

double mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("mse: prediction " + shape_string(pred.shape()) + " vs target " +
                         shape_string(target.shape()));
  }
  if (pred.empty()) throw DomainError("mse of empty tensors");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    total += d * d;
  }
  return total / static_cast<double>(pred.size());
}

}  // namespace pmoe::ops
