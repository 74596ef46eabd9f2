#include "pmoe/errors.hpp"
#include "pmoe/por.hpp"

namespace pmoe::por {

namespace {

void step_groups(const std::vector<ParamGroup*>& groups, const std::vector<double>& direction, double learning_rate,
                 const std::string& cell) {
  if (direction.size() != parameter_count(groups)) {
    throw DimensionError("gradient for " + cell + " has length " + std::to_string(direction.size()) +
                         ", partition holds " + std::to_string(parameter_count(groups)) + " parameters");
  }
  std::size_t offset = 0;
  for (ParamGroup* g : groups)
    for (Tensor& t : g->tensors)
      for (double& v : t.values()) v -= learning_rate * direction[offset++];
}

}  // namespace

void apply_updates(ParamPartition& partition, const GradientBundle& bundle, const SimplexWeights& w,
                   double learning_rate) {
  const std::size_t k = partition.objectives();
  if (bundle.shared.size() != k || bundle.specific.size() != k || w.size() != k) {
    throw DimensionError("apply_updates: partition has " + std::to_string(k) + " objectives, bundle " +
                         std::to_string(bundle.shared.size()) + ", weights " + std::to_string(w.size()));
  }
  if (!(learning_rate > 0.0)) throw DomainError("apply_updates: learning rate must be positive");

  const std::size_t shared_len = parameter_count(partition.shared);
  std::vector<double> combined(shared_len, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (bundle.shared[i].size() != shared_len) {
      throw DimensionError("shared gradient " + std::to_string(i + 1) + " has length " +
                           std::to_string(bundle.shared[i].size()) + ", partition holds " + std::to_string(shared_len));
    }
    for (std::size_t p = 0; p < shared_len; ++p) combined[p] += w[i] * bundle.shared[i][p];
  }
  for (std::size_t i = 0; i < k; ++i)
    step_groups(partition.specific[i], bundle.specific[i], learning_rate, "objective " + std::to_string(i + 1));
  step_groups(partition.shared, combined, learning_rate, "shared parameters");
}

}  // namespace pmoe::por
