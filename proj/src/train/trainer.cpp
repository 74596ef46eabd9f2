#include <cmath>
#include <limits>

#include "pmoe/errors.hpp"
#include "pmoe/train.hpp"

namespace pmoe::train {

namespace {

Tensor gather_rows(const Tensor& source, std::span<const std::size_t> rows) {
  const std::size_t width = source.cols();
  Tensor out(Shape{rows.size(), width});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(source.data() + rows[i] * width, width, out.data() + i * width);
  return out;
}

// Batch-mean MSE per objective, standardized units.
std::vector<double> column_mse(const Tensor& targets, const Tensor& predictions) {
  std::vector<double> mse(targets.cols(), 0.0);
  for (std::size_t i = 0; i < targets.rows(); ++i)
    for (std::size_t k = 0; k < targets.cols(); ++k) {
      const double d = predictions(i, k) - targets(i, k);
      mse[k] += d * d;
    }
  for (double& v : mse) v /= static_cast<double>(targets.rows());
  return mse;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate", "must be > 0");
  if (!fixed_weights.empty()) {
    if (fixed_weights.size() != model.objectives)
      throw ConfigError("fixed_weights", "needs one weight per objective");
    if (!por::on_simplex(fixed_weights)) throw ConfigError("fixed_weights", "must be non-negative and sum to 1");
  }
  fw.validate();
  model.validate();
}

por::SimplexWeights TrainConfig::constant_weights() const {
  return fixed_weights.empty() ? por::SimplexWeights::uniform(model.objectives) : por::SimplexWeights(fixed_weights);
}

PreparedData prepare(const data::Splits& splits) {
  if (splits.train.size() == 0 || splits.validation.size() == 0 || splits.test.size() == 0)
    throw DomainError("every partition must hold at least one sample");
  PreparedData out;
  out.input_scaler = data::Normalizer::fit(splits.train.x);
  out.target_scaler = data::Normalizer::fit(splits.train.y);
  out.train_x = out.input_scaler.transform(splits.train.x);
  out.val_x = out.input_scaler.transform(splits.validation.x);
  out.test_x = out.input_scaler.transform(splits.test.x);
  out.train_y = out.target_scaler.transform(splits.train.y);
  out.val_y = out.target_scaler.transform(splits.validation.y);
  out.test_y = out.target_scaler.transform(splits.test.y);
  return out;
}

data::Splits select_objective(const data::Splits& splits, std::size_t k) {
  return data::Splits{splits.train.objective(k), splits.validation.objective(k), splits.test.objective(k)};
}

std::vector<ObjectiveMetrics> compute_metrics(const Tensor& targets, const Tensor& predictions) {
  if (targets.shape() != predictions.shape() || targets.rows() == 0)
    throw DimensionError("metrics: targets " + shape_string(targets.shape()) + " vs predictions " +
                         shape_string(predictions.shape()));
  const std::size_t n = targets.rows(), k_count = targets.cols();
  std::vector<ObjectiveMetrics> out(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    double mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_y += targets(i, k);
    mean_y /= static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0, abs_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = targets(i, k) - predictions(i, k);
      ss_res += e * e;
      abs_err += std::abs(e);
      ss_tot += (targets(i, k) - mean_y) * (targets(i, k) - mean_y);
    }
    out[k].rmse = std::sqrt(ss_res / static_cast<double>(n));
    out[k].mae = abs_err / static_cast<double>(n);
    if (ss_tot > 0.0) out[k].r2 = 1.0 - ss_res / ss_tot;
  }
  return out;
}

std::vector<ObjectiveMetrics> evaluate_scaled(model::OMoEModel& model, const Tensor& x, const Tensor& y) {
  return compute_metrics(y, model.predict(x));
}

std::vector<ObjectiveMetrics> evaluate(model::OMoEModel& model, const Tensor& x, const Tensor& y,
                                       const data::Normalizer& target_scaler) {
  return compute_metrics(target_scaler.inverse_transform(y), target_scaler.inverse_transform(model.predict(x)));
}

TrainResult train(const TrainConfig& config, const PreparedData& data) {
  config.validate();
  const std::size_t K = config.model.objectives;
  if (data.objectives() != K)
    throw ConfigError("model.objectives", "data has " + std::to_string(data.objectives()) + " targets");
  if (data.features() != config.model.input_dim)
    throw ConfigError("model.input_dim", "data has " + std::to_string(data.features()) + " features");
  if (data.train_x.rows() == 0 || data.val_x.rows() == 0) throw DomainError("train: empty partition");

  SeededRng rng(config.seed);
  model::OMoEModel model(config.model, rng.derive(1));
  SeededRng batch_order(rng.derive(2));
  ParamPartition partition = model.partition();

  model::OMoEModel best = model;
  double best_selection = std::numeric_limits<double>::infinity();
  MetricsReport report;
  WeightTrajectory trajectory;

  const std::size_t n = data.train_x.rows();
  const por::SimplexWeights constant = config.constant_weights();
  por::SimplexWeights weights = constant;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::vector<std::size_t> order = batch_order.permutation(n);
    std::vector<double> loss_sum(K, 0.0), weight_sum(K, 0.0);
    std::size_t batches = 0;

    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      model::BatchPass pass(model, gather_rows(data.train_x, rows), gather_rows(data.train_y, rows));
      const std::vector<double> losses = pass.losses();
      for (std::size_t k = 0; k < K; ++k)
        if (!std::isfinite(losses[k]))
          throw DivergenceError(step, "loss of objective " + std::to_string(k + 1) + " is not finite");

      por::GradientBundle bundle;
      for (std::size_t k = 0; k < K; ++k) {
        model::ObjectiveGradient g = model::per_objective_backward(pass, partition, k);
        bundle.shared.push_back(std::move(g.shared));
        bundle.specific.push_back(std::move(g.specific));
      }
      const por::GramMatrix gram = por::gram_matrix(bundle);
      if (!gram.all_finite()) throw DivergenceError(step, "shared gradients are not finite");
      std::size_t fw_iterations = 0;
      if (config.weight_mode == WeightMode::por &&
          (config.schedule == WeightSchedule::per_batch || start == 0)) {
        por::FWResult solved = por::frank_wolfe(gram, config.fw);
        fw_iterations = solved.diagnostics.iterations.size() - 1;
        weights = std::move(solved.weights);
      }
      por::apply_updates(partition, bundle, weights, config.learning_rate);

      TrajectoryPoint point;
      point.step = step;
      point.epoch = epoch;
      point.weights.assign(weights.values().begin(), weights.values().end());
      point.losses = losses;
      point.residual = por::pareto_stationarity_residual(gram, weights);
      point.fw_iterations = fw_iterations;
      trajectory.push_back(std::move(point));

      for (std::size_t k = 0; k < K; ++k) {
        loss_sum[k] += losses[k];
        weight_sum[k] += weights[k];
      }
      ++batches;
      ++step;
    }

    EpochRecord record;
    record.epoch = epoch;
    const Tensor val_pred = model.predict(data.val_x);
    record.val_mse = column_mse(data.val_y, val_pred);
    for (const ObjectiveMetrics& m : compute_metrics(data.val_y, val_pred)) record.val_r2.push_back(m.r2.value_or(0.0));
    for (std::size_t k = 0; k < K; ++k) {
      record.train_loss.push_back(loss_sum[k] / static_cast<double>(batches));
      record.mean_weights.push_back(weight_sum[k] / static_cast<double>(batches));
    }
    record.selection_loss = mean(record.val_mse);
    if (!std::isfinite(record.selection_loss))
      throw DivergenceError(step, "validation loss is not finite after epoch " + std::to_string(epoch));
    if (record.selection_loss < best_selection) {
      best_selection = record.selection_loss;
      best = model;
      report.best_epoch = epoch;
    }
    report.epochs.push_back(std::move(record));
  }

  if (data.test_x.rows() > 0) {
    report.test = evaluate(best, data.test_x, data.test_y, data.target_scaler);
    report.test_scaled = evaluate_scaled(best, data.test_x, data.test_y);
  }
  return TrainResult{std::move(best), std::move(report), std::move(trajectory)};
}

}  // namespace pmoe::train
