#pragma once

#include <string>
#include <vector>

#include "pmoe/tensor.hpp"

namespace pmoe {

/// Named set of trainable tensors with same-shaped gradient accumulators.
struct ParamGroup {
  ParamGroup() = default;
  ParamGroup(std::string name, std::vector<Tensor> tensors);

  std::string name;
  std::vector<Tensor> tensors;
  std::vector<Tensor> grads;

  void zero_grad();
  std::size_t parameter_count() const noexcept;
};

// Concatenation of every tensor (or gradient) of the groups, in order.
std::vector<double> flatten_values(const std::vector<ParamGroup*>& groups);
std::vector<double> flatten_grads(const std::vector<ParamGroup*>& groups);
std::size_t parameter_count(const std::vector<ParamGroup*>& groups);

}  // namespace pmoe

namespace pmoe {

/// Trainable parameters split into one shared cell and one cell per objective.
/// Holds non-owning pointers into the model that produced it.
struct ParamPartition {
  std::vector<ParamGroup*> shared;
  std::vector<std::vector<ParamGroup*>> specific;

  std::size_t objectives() const noexcept { return specific.size(); }
};

}  // namespace pmoe
