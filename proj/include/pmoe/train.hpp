#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmoe/data.hpp"
#include "pmoe/model.hpp"
#include "pmoe/por.hpp"

namespace pmoe::train {

enum class WeightMode {
  por,    // min-norm weights from Frank-Wolfe on the batch Gram matrix
  fixed,  // constant weights
};

enum class WeightSchedule {
  per_batch,  // solve for every mini-batch
  per_epoch,  // solve on the first batch of an epoch, hold for the rest of it
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 1e-2;
  WeightMode weight_mode = WeightMode::por;
  std::vector<double> fixed_weights;  // empty means uniform
  WeightSchedule schedule = WeightSchedule::per_batch;
  std::uint64_t seed = 0;
  por::FWConfig fw;
  model::OMoEConfig model;

  // Throws ConfigError naming the offending field.
  void validate() const;
  por::SimplexWeights constant_weights() const;
};

// Raised when a batch loss stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, const std::string& message)
      : std::runtime_error("step " + std::to_string(step) + ": " + message), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Standardized partitions ready for training. Inputs and targets are scaled
/// with statistics of the training partition; target_scaler maps back to
/// physical units.
struct PreparedData {
  Tensor train_x, train_y;
  Tensor val_x, val_y;
  Tensor test_x, test_y;
  data::Normalizer input_scaler;
  data::Normalizer target_scaler;

  std::size_t objectives() const noexcept { return train_y.cols(); }
  std::size_t features() const noexcept { return train_x.cols(); }
};

PreparedData prepare(const data::Splits& splits);
// Same splits restricted to target column k.
data::Splits select_objective(const data::Splits& splits, std::size_t k);

struct ObjectiveMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;  // unset when the targets are constant
};

// Per-column RMSE, MAE and R^2 = 1 - SS_res / SS_tot of predictions against targets.
std::vector<ObjectiveMetrics> compute_metrics(const Tensor& targets, const Tensor& predictions);

struct EpochRecord {
  std::size_t epoch = 0;
  std::vector<double> train_loss;  // mean batch loss per objective (scaled targets)
  std::vector<double> val_mse;     // per objective (scaled targets)
  std::vector<double> val_r2;      // per objective; 0 when undefined
  double selection_loss = 0.0;     // mean of val_mse
  std::vector<double> mean_weights;
};

struct MetricsReport {
  std::vector<ObjectiveMetrics> test;         // physical units
  std::vector<ObjectiveMetrics> test_scaled;  // standardized units
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
};

struct TrajectoryPoint {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::vector<double> weights;
  std::vector<double> losses;
  double residual = 0.0;  // || sum_k w_k grad_sh L_k ||^2 = w^T M w
  std::size_t fw_iterations = 0;
};

using WeightTrajectory = std::vector<TrajectoryPoint>;

struct TrainResult {
  model::OMoEModel model;  // parameters of the best validation epoch
  MetricsReport metrics;
  WeightTrajectory trajectory;
};

TrainResult train(const TrainConfig& config, const PreparedData& data);

// Metrics on a standardized partition, reported in physical units.
std::vector<ObjectiveMetrics> evaluate(model::OMoEModel& model, const Tensor& x, const Tensor& y,
                                       const data::Normalizer& target_scaler);
// Metrics in standardized units.
std::vector<ObjectiveMetrics> evaluate_scaled(model::OMoEModel& model, const Tensor& x, const Tensor& y);

// ---- ablation -------------------------------------------------------------

struct AblationCell {
  std::string label;
  std::size_t n_k = 1;
  std::size_t n_s = 1;
  std::size_t n_b = 2;
  std::size_t n_l = 3;
  WeightMode mode = WeightMode::por;
};

struct AblationSpec {
  std::vector<AblationCell> cells;
  std::size_t seeds = 5;

  // (n, 0), (0, n), (n, n) for n = 1..max_experts.
  static AblationSpec expert_grid(std::size_t max_experts, std::size_t seeds = 5);
  // One axis at a time around the defaults: n_e in [1, 5], n_b in [1, 4], n_l in [1, 5].
  static AblationSpec sensitivity(std::size_t seeds = 5);
  // POR and fixed-weight cells for n_e = n_k = n_s in [1, max_experts].
  static AblationSpec por_vs_fixed(std::size_t max_experts, std::size_t seeds = 5);
};

struct AblationRow {
  AblationCell cell;
  std::vector<std::vector<double>> r2;  // [seed][objective], test partition
  std::vector<double> r2_mean;
  std::vector<double> r2_std;  // sample standard deviation, 0 for a single seed
  std::vector<std::string> errors;

  bool ok() const noexcept { return !r2.empty(); }
  double combined_mean() const;
};

// Seed for repetition i of any cell; identical across cells so runs pair up.
std::uint64_t repetition_seed(std::uint64_t base_seed, std::size_t repetition);

// Trains every cell for every seed; failures are recorded per cell and the
// grid continues. Cells may run on several worker threads.
std::vector<AblationRow> run_ablation(const AblationSpec& spec, const TrainConfig& base, const PreparedData& data,
                                      std::size_t workers = 1);

struct PorDelta {
  std::size_t n_e = 0;
  std::vector<double> delta;  // POR mean R^2 - fixed mean R^2 per objective
};

std::vector<PorDelta> por_fixed_deltas(const std::vector<AblationRow>& rows);

std::string ablation_to_tsv(const std::vector<AblationRow>& rows);

// ---- negative transfer / seesaw ---------------------------------------------

struct SeesawReport {
  std::vector<double> single_r2;  // one K = 1 model per objective
  std::vector<double> fixed_r2;   // fixed equal weights, all objectives
  std::vector<double> por_r2;     // POR weights, all objectives
  std::vector<double> negative_transfer;  // fixed - single
  std::vector<double> por_gain;           // por - fixed
};

SeesawReport compare_seesaw(const data::Splits& splits, const TrainConfig& base);

double mean(const std::vector<double>& v);
double sample_stddev(const std::vector<double>& v);

}  // namespace pmoe::train
