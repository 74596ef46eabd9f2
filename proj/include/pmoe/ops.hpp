#pragma once

#include "pmoe/tensor.hpp"

namespace pmoe::ops {

// x W^T + b for a matrix x (batch x in), or W x + b for a vector x.
// W is (out x in); b has length out, or is empty for a bias-free map.
Tensor affine_forward(const Tensor& x, const Tensor& w, const Tensor& b);

// Plain matrix product a (m x k) * b (k x n).
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor relu(const Tensor& x);

// Softmax of a vector, or of every row of a matrix. Max-subtracted.
Tensor softmax(const Tensor& z);

// Mean squared elementwise difference.
double mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace pmoe::ops
