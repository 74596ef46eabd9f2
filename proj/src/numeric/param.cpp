#include "pmoe/param.hpp"

namespace pmoe {

ParamGroup::ParamGroup(std::string group_name, std::vector<Tensor> values)
    : name(std::move(group_name)), tensors(std::move(values)) {
  grads.reserve(tensors.size());
  for (const Tensor& t : tensors) grads.emplace_back(t.shape());
}

void ParamGroup::zero_grad() {
  for (Tensor& g : grads) g.fill(0.0);
}

std::size_t ParamGroup::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const Tensor& t : tensors) n += t.size();
  return n;
}

std::vector<double> flatten_values(const std::vector<ParamGroup*>& groups) {
  std::vector<double> out;
  out.reserve(parameter_count(groups));
  for (const ParamGroup* g : groups)
    for (const Tensor& t : g->tensors) out.insert(out.end(), t.values().begin(), t.values().end());
  return out;
}

std::vector<double> flatten_grads(const std::vector<ParamGroup*>& groups) {
  std::vector<double> out;
  out.reserve(parameter_count(groups));
  for (const ParamGroup* g : groups)
    for (const Tensor& t : g->grads) out.insert(out.end(), t.values().begin(), t.values().end());
  return out;
}

std::size_t parameter_count(const std::vector<ParamGroup*>& groups) {
  std::size_t n = 0;
  for (const ParamGroup* g : groups) n += g->parameter_count();
  return n;
}

}  // namespace pmoe
