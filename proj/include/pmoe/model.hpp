#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmoe/param.hpp"
#include "pmoe/rng.hpp"
#include "pmoe/tape.hpp"
#include "pmoe/tensor.hpp"

namespace pmoe::model {

struct OMoEConfig {
  std::size_t objectives = 2;        // K
  std::size_t input_dim = 50;        // D_in
  std::size_t specific_experts = 1;  // n_k, per objective per block
  std::size_t shared_experts = 1;    // n_s, per block
  std::size_t blocks = 2;            // n_b
  std::size_t expert_layers = 3;     // n_l
  std::size_t expert_width = 32;
  std::size_t expert_out = 16;
  std::vector<std::size_t> tower_widths{16};
  // Place objective-specific experts in the shared cell, so gradients that
  // reach them through the shared route of later blocks are kept.
  bool specific_experts_shared = false;

  // Throws ConfigError naming the offending field.
  void validate() const;

  friend bool operator==(const OMoEConfig&, const OMoEConfig&) = default;
};

/// Stack of affine layers, ReLU between them, linear last layer.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string name, std::size_t input_dim, const std::vector<std::size_t>& widths, SeededRng& rng);

  Var forward(Tape& tape, Var x);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t layers() const noexcept { return params_.tensors.size() / 2; }
  ParamGroup& params() noexcept { return params_; }
  const ParamGroup& params() const noexcept { return params_; }

 private:
  ParamGroup params_;  // W0, b0, W1, b1, ...
};

/// softmax(W x): one bias-free linear map followed by softmax over n experts.
class Gate {
 public:
  Gate() = default;
  Gate(std::string name, std::size_t experts, std::size_t input_dim, SeededRng& rng);

  Var forward(Tape& tape, Var x);

  std::size_t experts() const { return params_.tensors[0].rows(); }
  ParamGroup& params() noexcept { return params_; }
  const ParamGroup& params() const noexcept { return params_; }

 private:
  ParamGroup params_;
};

struct FeatureExtractionBlock {
  std::vector<std::vector<Mlp>> specific_experts;  // [K][n_k]
  std::vector<Mlp> shared_experts;                 // [n_s]
  std::vector<Gate> specific_gates;                // [K], over n_k + n_s experts
  std::optional<Gate> shared_gate;                 // over K * n_k + n_s experts; absent on the last block
};

/// Rows of O_k (objective set) or O_s (objective unset): for O_k the n_k
/// outputs of objective k then the n_s shared outputs; for O_s every
/// objective's outputs in objective order, then the shared outputs.
template <class Row>
std::vector<Row> select_concat(const std::vector<std::vector<Row>>& specific, const std::vector<Row>& shared,
                               std::optional<std::size_t> objective) {
  std::vector<Row> out;
  if (objective) {
    out = specific.at(*objective);
  } else {
    for (const auto& rows : specific) out.insert(out.end(), rows.begin(), rows.end());
  }
  out.insert(out.end(), shared.begin(), shared.end());
  return out;
}

// Wiring of one block as recorded on the tape, for inspection.
struct BlockTrace {
  std::vector<std::vector<std::size_t>> objective_pools;  // tape ids of the rows of each O_k
  std::vector<std::size_t> shared_pool;                   // rows of O_s (empty on the last block)
  std::vector<Var> objective_gates;                       // g_k outputs
  std::optional<Var> shared_gate;
  std::vector<Var> objective_outputs;                     // FEB_k
  std::optional<Var> shared_output;
};

struct ForwardPass {
  std::vector<Var> outputs;  // one (batch x 1) prediction per objective
  std::vector<BlockTrace> blocks;
};

// FEB outputs of one block for inputs x^(k) (one per objective) and x^(s).
BlockTrace feb_forward(Tape& tape, FeatureExtractionBlock& block, std::span<const Var> objective_inputs,
                       Var shared_input, bool last_block);

/// Objective-aware mixture-of-experts network: n_b feature extraction blocks
/// and one tower per objective.
class OMoEModel {
 public:
  OMoEModel(OMoEConfig config, std::uint64_t seed);

  const OMoEConfig& config() const noexcept { return config_; }

  // Records the forward pass of a (batch x D_in) matrix or a length-D_in vector.
  ForwardPass forward(Tape& tape, Var x);

  // Predictions as a (batch x K) matrix, or a length-K vector for vector input.
  Tensor predict(const Tensor& x);

  std::vector<FeatureExtractionBlock>& blocks() noexcept { return blocks_; }
  const std::vector<FeatureExtractionBlock>& blocks() const noexcept { return blocks_; }
  std::vector<Mlp>& towers() noexcept { return towers_; }

  // Every parameter group, in a fixed construction order.
  std::vector<ParamGroup*> parameter_groups();
  std::vector<const ParamGroup*> parameter_groups() const;

  // Shared cell: shared experts and shared gates of all blocks. Cell k:
  // objective-k experts and gates of all blocks plus tower k.
  ParamPartition partition();

 private:
  OMoEConfig config_;
  std::vector<FeatureExtractionBlock> blocks_;
  std::vector<Mlp> towers_;
};

ParamPartition partition_parameters(OMoEModel& model);

/// One forward pass over a mini-batch with one loss per objective.
/// Targets are (batch x K).
class BatchPass {
 public:
  BatchPass(OMoEModel& model, const Tensor& inputs, const Tensor& targets);

  std::size_t objectives() const noexcept { return losses_.size(); }
  double loss(std::size_t k) const { return tape_.value(losses_.at(k)).item(); }
  std::vector<double> losses() const;
  Tape& tape() noexcept { return tape_; }
  const ForwardPass& forward() const noexcept { return forward_; }
  Var loss_var(std::size_t k) const { return losses_.at(k); }

 private:
  Tape tape_;
  ForwardPass forward_;
  std::vector<Var> losses_;
};

struct ObjectiveGradient {
  std::vector<double> shared;    // d L_k / d theta_sh
  std::vector<double> specific;  // d L_k / d theta_k
};

// Backpropagates objective k's batch loss. Gradients of L_k that reach other
// objectives' cells are computed but not returned.
ObjectiveGradient per_objective_backward(BatchPass& pass, const ParamPartition& partition, std::size_t k);

}  // namespace pmoe::model
