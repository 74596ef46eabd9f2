#include "pmoe/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "pmoe/errors.hpp"

namespace pmoe {

std::vector<Tensor> finite_diff_grad(const std::function<double()>& f, ParamGroup& params, double eps) {
  if (!(eps > 0.0)) throw DomainError("finite_diff_grad: eps must be positive");
  std::vector<Tensor> grads;
  grads.reserve(params.tensors.size());
  for (Tensor& t : params.tensors) {
    Tensor g(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + eps;
      const double up = f();
      t[i] = saved - eps;
      const double down = f();
      t[i] = saved;
      g[i] = (up - down) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("relative_error: length mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

}  // namespace pmoe
