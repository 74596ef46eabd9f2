#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pmoe/param.hpp"
#include "pmoe/tensor.hpp"

namespace pmoe {

// One trainable tensor inside a ParamGroup.
struct ParamRef {
  ParamGroup* group = nullptr;
  std::size_t index = 0;

  const Tensor& value() const { return group->tensors[index]; }
  Tensor& grad() const { return group->grads[index]; }
};

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  std::size_t id() const noexcept { return id_; }
  friend bool operator==(Var, Var) = default;

 private:
  friend class Tape;
  explicit Var(std::size_t id) : id_(id) {}
  std::size_t id_ = 0;
};

enum class GradMode { reset, accumulate };

/// Reverse-mode tape over mini-batch tensors.
///
/// A tape is built by one forward computation and is not reused. Each scalar
/// root may be differentiated once; several roots recorded by the same forward
/// (one loss per objective) can each be differentiated in turn. Gradients land
/// in the ParamGroups that the forward touched. In GradMode::reset every
/// touched group is zeroed first, so groups unreachable from the root end up
/// holding zeros.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);

  // x W^T + b (or W x + b for a vector x).
  Var affine(Var x, ParamRef weight, ParamRef bias);
  // x W^T without bias.
  Var linear(Var x, ParamRef weight);
  Var relu(Var x);
  Var softmax(Var z);
  // Row-wise convex combination: out[b] = sum_i gates[b, i] * rows[i][b].
  Var mix(Var gates, std::span<const Var> rows);
  // Batch-mean squared error between pred (batch x 1 or vector) and target.
  Var mse(Var pred, Tensor target);
  Var add(Var a, Var b);
  Var scale(Var a, double factor);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  const Tensor& value_at(std::size_t id) const { return nodes_.at(id).value; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Parameter groups referenced by this tape, in first-use order.
  const std::vector<ParamGroup*>& groups() const noexcept { return groups_; }

  void backward(Var root, GradMode mode = GradMode::reset);

 private:
  using Adjoints = std::vector<std::optional<Tensor>>;
  using Backprop = std::function<void(const Tape&, const Tensor& adjoint, Adjoints& adjoints)>;

  struct Node {
    Tensor value;
    Backprop backprop;
    bool consumed = false;
  };

  Var push(Tensor value, Backprop backprop);
  void touch(ParamGroup* group);

  std::vector<Node> nodes_;
  std::vector<ParamGroup*> groups_;
};

}  // namespace pmoe
