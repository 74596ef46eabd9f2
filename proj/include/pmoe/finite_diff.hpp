#pragma once

#include <functional>
#include <vector>

#include "pmoe/param.hpp"
#include "pmoe/tensor.hpp"

namespace pmoe {

// Central-difference gradient of f with respect to every entry of params.
// f must read the parameters through params; each entry is perturbed in
// place and restored before returning.
std::vector<Tensor> finite_diff_grad(const std::function<double()>& f, ParamGroup& params,
                                     double eps = 1e-5);

// ||a - b|| / max(||a||, ||b||); 0 when both are zero.
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace pmoe
