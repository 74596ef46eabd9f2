#pragma once

#include <Eigen/Core>

#include "pmoe/tensor.hpp"

namespace pmoe::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const RowMatrix> view(const Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

inline Eigen::Map<RowMatrix> view(Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

}  // namespace pmoe::detail
