#include "pmoe/model.hpp"

#include "pmoe/errors.hpp"

namespace pmoe::model {

void OMoEConfig::validate() const {
  if (objectives < 1) throw ConfigError("objectives", "must be >= 1");
  if (input_dim < 1) throw ConfigError("input_dim", "must be >= 1");
  if (blocks < 1) throw ConfigError("n_b", "must be >= 1");
  if (expert_layers < 1) throw ConfigError("n_l", "must be >= 1");
  if (specific_experts + shared_experts < 1) throw ConfigError("n_k", "n_k + n_s must be >= 1");
  if (expert_width < 1) throw ConfigError("expert_width", "must be >= 1");
  if (expert_out < 1) throw ConfigError("expert_out", "must be >= 1");
  for (std::size_t w : tower_widths)
    if (w < 1) throw ConfigError("tower_widths", "every width must be >= 1");
}

Mlp::Mlp(std::string name, std::size_t input_dim, const std::vector<std::size_t>& widths, SeededRng& rng) {
  std::vector<Tensor> tensors;
  std::size_t fan_in = input_dim;
  for (std::size_t width : widths) {
    tensors.push_back(glorot_uniform(rng, width, fan_in));
    tensors.emplace_back(Shape{width});
    fan_in = width;
  }
  params_ = ParamGroup(std::move(name), std::move(tensors));
}

Var Mlp::forward(Tape& tape, Var x) {
  const std::size_t n = layers();
  for (std::size_t i = 0; i < n; ++i) {
    x = tape.affine(x, ParamRef{&params_, 2 * i}, ParamRef{&params_, 2 * i + 1});
    if (i + 1 < n) x = tape.relu(x);
  }
  return x;
}

std::size_t Mlp::input_dim() const { return params_.tensors.front().cols(); }
std::size_t Mlp::output_dim() const { return params_.tensors[params_.tensors.size() - 2].rows(); }

Gate::Gate(std::string name, std::size_t experts, std::size_t input_dim, SeededRng& rng)
    : params_(std::move(name), {glorot_uniform(rng, experts, input_dim)}) {}

Var Gate::forward(Tape& tape, Var x) { return tape.softmax(tape.linear(x, ParamRef{&params_, 0})); }

BlockTrace feb_forward(Tape& tape, FeatureExtractionBlock& block, std::span<const Var> objective_inputs,
                       Var shared_input, bool last_block) {
  const std::size_t objectives = block.specific_gates.size();
  if (objective_inputs.size() != objectives) {
    throw DimensionError("feb_forward: " + std::to_string(objective_inputs.size()) + " objective inputs for " +
                         std::to_string(objectives) + " objectives");
  }
  std::vector<std::vector<Var>> specific(objectives);
  for (std::size_t k = 0; k < objectives; ++k)
    for (Mlp& expert : block.specific_experts[k]) specific[k].push_back(expert.forward(tape, objective_inputs[k]));
  std::vector<Var> shared;
  for (Mlp& expert : block.shared_experts) shared.push_back(expert.forward(tape, shared_input));

  auto ids = [](const std::vector<Var>& vars) {
    std::vector<std::size_t> out;
    for (Var v : vars) out.push_back(v.id());
    return out;
  };

  BlockTrace trace;
  for (std::size_t k = 0; k < objectives; ++k) {
    const std::vector<Var> pool = select_concat(specific, shared, k);
    const Var weights = block.specific_gates[k].forward(tape, objective_inputs[k]);
    trace.objective_pools.push_back(ids(pool));
    trace.objective_gates.push_back(weights);
    trace.objective_outputs.push_back(tape.mix(weights, pool));
  }
  if (!last_block) {
    const std::vector<Var> pool = select_concat(specific, shared, std::nullopt);
    const Var weights = block.shared_gate.value().forward(tape, shared_input);
    trace.shared_pool = ids(pool);
    trace.shared_gate = weights;
    trace.shared_output = tape.mix(weights, pool);
  }
  return trace;
}

OMoEModel::OMoEModel(OMoEConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  SeededRng rng(seed);
  const std::size_t K = config_.objectives;
  std::vector<std::size_t> expert_widths(config_.expert_layers - 1, config_.expert_width);
  expert_widths.push_back(config_.expert_out);

  for (std::size_t j = 0; j < config_.blocks; ++j) {
    const std::string prefix = "block" + std::to_string(j + 1);
    const std::size_t in = j == 0 ? config_.input_dim : config_.expert_out;
    FeatureExtractionBlock block;
    block.specific_experts.resize(K);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t p = 0; p < config_.specific_experts; ++p)
        block.specific_experts[k].emplace_back(
            prefix + ".objective" + std::to_string(k + 1) + ".expert" + std::to_string(p + 1), in, expert_widths, rng);
    for (std::size_t q = 0; q < config_.shared_experts; ++q)
      block.shared_experts.emplace_back(prefix + ".shared.expert" + std::to_string(q + 1), in, expert_widths, rng);
    for (std::size_t k = 0; k < K; ++k)
      block.specific_gates.emplace_back(prefix + ".objective" + std::to_string(k + 1) + ".gate",
                                        config_.specific_experts + config_.shared_experts, in, rng);
    if (j + 1 < config_.blocks)
      block.shared_gate.emplace(prefix + ".shared.gate", K * config_.specific_experts + config_.shared_experts, in,
                                rng);
    blocks_.push_back(std::move(block));
  }
  std::vector<std::size_t> tower_widths = config_.tower_widths;
  tower_widths.push_back(1);
  for (std::size_t k = 0; k < K; ++k)
    towers_.emplace_back("tower" + std::to_string(k + 1), config_.expert_out, tower_widths, rng);
}

ForwardPass OMoEModel::forward(Tape& tape, Var x) {
  const Tensor& input = tape.value(x);
  if (input.rank() == 0 || input.cols() != config_.input_dim) {
    throw DimensionError("model input " + shape_string(input.shape()) + " does not have " +
                         std::to_string(config_.input_dim) + " features");
  }
  ForwardPass pass;
  std::vector<Var> objective_inputs(config_.objectives, x);
  Var shared_input = x;
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const bool last = j + 1 == blocks_.size();
    BlockTrace trace = feb_forward(tape, blocks_[j], objective_inputs, shared_input, last);
    objective_inputs = trace.objective_outputs;
    if (!last) shared_input = *trace.shared_output;
    pass.blocks.push_back(std::move(trace));
  }
  for (std::size_t k = 0; k < config_.objectives; ++k)
    pass.outputs.push_back(towers_[k].forward(tape, objective_inputs[k]));
  return pass;
}

Tensor OMoEModel::predict(const Tensor& x) {
  Tape tape;
  const ForwardPass pass = forward(tape, tape.constant(x));
  const std::size_t batch = x.rows();
  Tensor out = x.rank() == 1 ? Tensor(Shape{config_.objectives}) : Tensor(Shape{batch, config_.objectives});
  for (std::size_t k = 0; k < config_.objectives; ++k) {
    const Tensor& yk = tape.value(pass.outputs[k]);
    for (std::size_t b = 0; b < batch; ++b) out[b * config_.objectives + k] = yk[b];
  }
  return out;
}

std::vector<ParamGroup*> OMoEModel::parameter_groups() {
  std::vector<ParamGroup*> out;
  for (FeatureExtractionBlock& block : blocks_) {
    for (auto& experts : block.specific_experts)
      for (Mlp& e : experts) out.push_back(&e.params());
    for (Mlp& e : block.shared_experts) out.push_back(&e.params());
    for (Gate& g : block.specific_gates) out.push_back(&g.params());
    if (block.shared_gate) out.push_back(&block.shared_gate->params());
  }
  for (Mlp& t : towers_) out.push_back(&t.params());
  return out;
}

std::vector<const ParamGroup*> OMoEModel::parameter_groups() const {
  std::vector<const ParamGroup*> out;
  for (ParamGroup* g : const_cast<OMoEModel*>(this)->parameter_groups()) out.push_back(g);
  return out;
}

ParamPartition OMoEModel::partition() {
  ParamPartition cells;
  cells.specific.resize(config_.objectives);
  for (FeatureExtractionBlock& block : blocks_) {
    for (std::size_t k = 0; k < config_.objectives; ++k) {
      auto& target = config_.specific_experts_shared ? cells.shared : cells.specific[k];
      for (Mlp& e : block.specific_experts[k]) target.push_back(&e.params());
    }
    for (Mlp& e : block.shared_experts) cells.shared.push_back(&e.params());
    if (block.shared_gate) cells.shared.push_back(&block.shared_gate->params());
    for (std::size_t k = 0; k < config_.objectives; ++k) cells.specific[k].push_back(&block.specific_gates[k].params());
  }
  for (std::size_t k = 0; k < config_.objectives; ++k) cells.specific[k].push_back(&towers_[k].params());
  return cells;
}

ParamPartition partition_parameters(OMoEModel& model) { return model.partition(); }

BatchPass::BatchPass(OMoEModel& model, const Tensor& inputs, const Tensor& targets) {
  const std::size_t K = model.config().objectives;
  if (targets.cols() != K || targets.rows() != inputs.rows()) {
    throw DimensionError("targets " + shape_string(targets.shape()) + " do not match " + std::to_string(inputs.rows()) +
                         " samples x " + std::to_string(K) + " objectives");
  }
  forward_ = model.forward(tape_, tape_.constant(inputs));
  const std::size_t batch = targets.rows();
  for (std::size_t k = 0; k < K; ++k) {
    Tensor column(Shape{batch});
    for (std::size_t b = 0; b < batch; ++b) column[b] = targets[b * K + k];
    losses_.push_back(tape_.mse(forward_.outputs[k], std::move(column)));
  }
}

std::vector<double> BatchPass::losses() const {
  std::vector<double> out;
  for (std::size_t k = 0; k < losses_.size(); ++k) out.push_back(loss(k));
  return out;
}

ObjectiveGradient per_objective_backward(BatchPass& pass, const ParamPartition& partition, std::size_t k) {
  pass.tape().backward(pass.loss_var(k));
  return ObjectiveGradient{flatten_grads(partition.shared), flatten_grads(partition.specific.at(k))};
}

}  // namespace pmoe::model
