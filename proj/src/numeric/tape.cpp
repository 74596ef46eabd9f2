#include "pmoe/tape.hpp"

#include <algorithm>

#include "eigen_view.hpp"
#include "pmoe/errors.hpp"
#include "pmoe/ops.hpp"

namespace pmoe {

namespace {

using detail::view;

void accumulate(std::vector<std::optional<Tensor>>& adjoints, std::size_t id, Tensor grad) {
  auto& slot = adjoints[id];
  if (!slot) {
    slot = std::move(grad);
    return;
  }
  view(*slot) += view(grad);
}

// Adds the (batch x out) adjoint into weight/bias grads and returns d input.
Tensor affine_backward(const Tensor& adjoint, const Tensor& input, const ParamRef& weight, const ParamRef* bias) {
  const auto dy = view(adjoint);
  view(weight.grad()).noalias() += dy.transpose() * view(input);
  if (bias) {
    Tensor& db = bias->grad();
    Eigen::Map<Eigen::RowVectorXd>(db.data(), static_cast<Eigen::Index>(db.size())) += dy.colwise().sum();
  }
  Tensor dx(input.shape());
  view(dx).noalias() = dy * view(weight.value());
  return dx;
}

}  // namespace

Var Tape::push(Tensor value, Backprop backprop) {
  nodes_.push_back(Node{std::move(value), std::move(backprop), false});
  return Var(nodes_.size() - 1);
}

void Tape::touch(ParamGroup* group) {
  if (std::find(groups_.begin(), groups_.end(), group) == groups_.end()) groups_.push_back(group);
}

Var Tape::constant(Tensor value) { return push(std::move(value), nullptr); }

Var Tape::affine(Var x, ParamRef weight, ParamRef bias) {
  touch(weight.group);
  touch(bias.group);
  Tensor y = ops::affine_forward(value(x), weight.value(), bias.value());
  const std::size_t xid = x.id();
  return push(std::move(y), [xid, weight, bias](const Tape& tape, const Tensor& adj, Adjoints& adjoints) {
    accumulate(adjoints, xid, affine_backward(adj, tape.nodes_[xid].value, weight, &bias));
  });
}

Var Tape::linear(Var x, ParamRef weight) {
  touch(weight.group);
  Tensor y = ops::affine_forward(value(x), weight.value(), Tensor());
  const std::size_t xid = x.id();
  return push(std::move(y), [xid, weight](const Tape& tape, const Tensor& adj, Adjoints& adjoints) {
    accumulate(adjoints, xid, affine_backward(adj, tape.nodes_[xid].value, weight, nullptr));
  });
}

Var Tape::relu(Var x) {
  const std::size_t xid = x.id();
  return push(ops::relu(value(x)), [xid](const Tape& tape, const Tensor& adj, Adjoints& adjoints) {
    const Tensor& in = tape.nodes_[xid].value;
    Tensor dx = adj;
    // Subgradient at exactly 0 is taken as 0.
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (!(in[i] > 0.0)) dx[i] = 0.0;
    accumulate(adjoints, xid, std::move(dx));
  });
}

Var Tape::softmax(Var z) {
  const std::size_t zid = z.id();
  Tensor s = ops::softmax(value(z));
  const std::size_t out_id = nodes_.size();
  return push(std::move(s), [zid, out_id](const Tape& tape, const Tensor& adj, Adjoints& adjoints) {
    const Tensor& s = tape.nodes_[out_id].value;
    Tensor dz(s.shape());
    const std::size_t cols = s.cols();
    for (std::size_t r = 0; r < s.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += adj(r, c) * s(r, c);
      for (std::size_t c = 0; c < cols; ++c) dz(r, c) = s(r, c) * (adj(r, c) - dot);
    }
    accumulate(adjoints, zid, std::move(dz));
  });
}

Var Tape::mix(Var gates, std::span<const Var> rows) {
  const Tensor& g = value(gates);
  if (rows.empty() || g.cols() != rows.size()) {
    throw DimensionError("mix: gate " + shape_string(g.shape()) + " over " + std::to_string(rows.size()) +
                         " expert outputs");
  }
  const Tensor& first = value(rows[0]);
  const std::size_t batch = first.rows();
  const std::size_t width = first.cols();
  if (g.rows() != batch) {
    throw DimensionError("mix: gate " + shape_string(g.shape()) + " vs expert output " +
                         shape_string(first.shape()));
  }
  Tensor out(first.shape());
  std::vector<std::size_t> row_ids;
  row_ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Tensor& e = value(rows[i]);
    if (e.shape() != first.shape()) {
      throw DimensionError("mix: expert output " + shape_string(e.shape()) + " vs " + shape_string(first.shape()));
    }
    for (std::size_t b = 0; b < batch; ++b) {
      const double weight = g(b, i);
      for (std::size_t c = 0; c < width; ++c) out(b, c) += weight * e(b, c);
    }
    row_ids.push_back(rows[i].id());
  }
  const std::size_t gid = gates.id();
  return push(std::move(out), [gid, row_ids = std::move(row_ids)](const Tape& tape, const Tensor& adj,
                                                                    Adjoints& adjoints) {
    const Tensor& g = tape.nodes_[gid].value;
    Tensor dg(g.shape());
    for (std::size_t i = 0; i < row_ids.size(); ++i) {
      const Tensor& e = tape.nodes_[row_ids[i]].value;
      Tensor de(e.shape());
      for (std::size_t b = 0; b < e.rows(); ++b) {
        double dot = 0.0;
        for (std::size_t c = 0; c < e.cols(); ++c) {
          de(b, c) = g(b, i) * adj(b, c);
          dot += adj(b, c) * e(b, c);
        }
        dg(b, i) = dot;
      }
      accumulate(adjoints, row_ids[i], std::move(de));
    }
    accumulate(adjoints, gid, std::move(dg));
  });
}

Var Tape::mse(Var pred, Tensor target) {
  const Tensor& p = value(pred);
  if (p.size() != target.size() || p.empty()) {
    throw DimensionError("mse: prediction " + shape_string(p.shape()) + " vs target " + shape_string(target.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - target[i];
    total += d * d;
  }
  const double n = static_cast<double>(p.size());
  const std::size_t pid = pred.id();
  return push(Tensor::scalar(total / n), [pid, target = std::move(target), n](const Tape& tape, const Tensor& adj,
                                                                             Adjoints& adjoints) {
    const Tensor& p = tape.nodes_[pid].value;
    Tensor dp(p.shape());
    const double factor = 2.0 * adj.item() / n;
    for (std::size_t i = 0; i < p.size(); ++i) dp[i] = factor * (p[i] - target[i]);
    accumulate(adjoints, pid, std::move(dp));
  });
}

Var Tape::add(Var a, Var b) {
  if (!value(a).same_shape(value(b))) {
    throw DimensionError("add: " + shape_string(value(a).shape()) + " vs " + shape_string(value(b).shape()));
  }
  Tensor sum = value(a);
  view(sum) += view(value(b));
  const std::size_t aid = a.id(), bid = b.id();
  return push(std::move(sum), [aid, bid](const Tape&, const Tensor& adj, Adjoints& adjoints) {
    accumulate(adjoints, aid, adj);
    accumulate(adjoints, bid, adj);
  });
}

Var Tape::scale(Var a, double factor) {
  Tensor out = value(a);
  for (double& v : out.values()) v *= factor;
  const std::size_t aid = a.id();
  return push(std::move(out), [aid, factor](const Tape&, const Tensor& adj, Adjoints& adjoints) {
    Tensor da = adj;
    for (double& v : da.values()) v *= factor;
    accumulate(adjoints, aid, std::move(da));
  });
}

void Tape::backward(Var root, GradMode mode) {
  Node& r = nodes_.at(root.id());
  if (r.value.size() != 1) {
    throw DimensionError("backward needs a scalar root, got shape " + shape_string(r.value.shape()));
  }
  if (r.consumed) throw StateError("backward already ran for this root; record a new forward pass first");
  r.consumed = true;
  if (mode == GradMode::reset)
    for (ParamGroup* g : groups_) g->zero_grad();

  Adjoints adjoints(root.id() + 1);
  adjoints[root.id()] = Tensor(r.value.shape(), 1.0);
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    if (!adjoints[i] || !nodes_[i].backprop) continue;
    nodes_[i].backprop(*this, *adjoints[i], adjoints);
    adjoints[i].reset();
  }
}

}  // namespace pmoe
